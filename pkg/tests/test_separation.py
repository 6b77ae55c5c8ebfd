import math
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from satshift.measures import MarkovMeasure, mix, wstar_distance
from satshift.separation import (big_decimal, brute_force_typical_count, certify_uniform_separation,
                                 count_words, entropy_dense_approx, estimate_entropy_word_count,
                                 parse_big, typical_class_counts, typical_words)
from satshift.shift import ShiftSystem

FOUR_CYCLE = [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0]]


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


# --- word counts ------------------------------------------------------------

def test_word_counts(full2, golden):
    assert count_words(full2, 3) == 8
    assert count_words(golden, 3) == 5


def test_golden_counts_are_fibonacci(golden):
    A = np.array([[1, 1], [1, 0]], dtype=object)
    for n in range(1, 60):
        assert count_words(golden, n) == fib(n + 2)
        assert count_words(golden, n) == int(np.linalg.matrix_power(A, n - 1).sum())


def test_entropy_estimates(full2, golden):
    assert estimate_entropy_word_count(full2, 17).value == pytest.approx(math.log(2), abs=1e-15)
    est = estimate_entropy_word_count(golden, 32)
    assert est.value == pytest.approx(math.log(fib(34)) / 32, abs=1e-12)
    # Binet: F_34 ~ phi^34 / sqrt 5
    phi = (1 + math.sqrt(5)) / 2
    assert abs(est.value - (math.log(phi) + (math.log(phi ** 2 / math.sqrt(5))) / 32)) < 0.005


def test_four_cycle_has_zero_entropy():
    X = ShiftSystem.from_matrix(FOUR_CYCLE)
    vals = [estimate_entropy_word_count(X, n).value for n in (4, 40, 400)]
    assert [count_words(X, n) for n in (1, 10, 100)] == [4, 4, 4]
    assert vals[0] > vals[1] > vals[2] and vals[2] == pytest.approx(math.log(4) / 400)


def test_big_integers_round_trip():
    x = 3 ** 500 + 7
    assert parse_big(big_decimal(x)) == x


# --- typical words ----------------------------------------------------------

def test_vacuous_radius_counts_everything(full2, fair):
    assert typical_words(full2, fair, 10, 10).exact_count == 1024


def all_binary_tables(n):
    """Depth-1 and depth-2 empirical tables of all 2^n words (truncated windows)."""
    w = (np.arange(2 ** n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    ones = w.sum(axis=1)
    t1 = np.stack([n - ones, ones], axis=1) / n
    pair = 2 * w[:, :-1] + w[:, 1:]
    t2 = np.stack([(pair == c).sum(axis=1) for c in range(4)], axis=1) / (n - 1)
    return ones, t1, t2


def test_fair_coin_count_at_twenty(full2, fair):
    n, eta, zeta = 20, 0.15, Fraction(1, 10)
    ones, t1, t2 = all_binary_tables(n)
    d = np.abs(t1 - 0.5) @ [1 / 2, 1 / 4] + np.abs(t2 - 0.25) @ [2 ** -i for i in range(3, 7)]
    oracle = int((d + 2 ** -6 <= float(zeta)).sum())
    tw = typical_words(full2, fair, zeta, n)
    assert tw.exact_count == oracle
    assert tw.exact_count >= math.exp(n * (math.log(2) - eta))
    # the depth-1 part alone bounds the count by a binomial tail
    slack = (float(zeta) - 2 ** -6) / 0.75
    assert tw.exact_count <= sum(comb(n, k) for k in range(n + 1) if abs(k / n - 0.5) <= slack)


def test_golden_parry_growth_rate(golden):
    mu = MarkovMeasure.parry(golden)
    tw = typical_words(golden, mu, 0.1, 24)
    assert abs(tw.log_count / 24 - math.log((1 + math.sqrt(5)) / 2)) < 0.1


@pytest.mark.parametrize("n", [2, 5, 9, 12, 16])
def test_dp_matches_brute_force_full_shift(full2, fair, n):
    for zeta in (Fraction(1, 20), Fraction(1, 10), Fraction(1, 5)):
        assert typical_words(full2, fair, zeta, n).exact_count == brute_force_typical_count(full2, fair, zeta, n)


def test_dp_matches_brute_force_golden(golden):
    mu = MarkovMeasure.parry(golden)
    table = typical_class_counts(golden, mu, 0.1, 14)
    for n in range(2, 15):
        assert table[n][0] == brute_force_typical_count(golden, mu, 0.1, n)


def test_stored_words_pass_the_predicate(full2):
    mu = MarkovMeasure.bernoulli_p(Fraction(1, 3))
    tw = typical_words(full2, mu, Fraction(1, 8), 12, store_words=5000)
    assert len(tw.words) == tw.exact_count == len(set(tw.words))
    from satshift.measures import EmpiricalMeasure
    for w in tw.words[:200]:
        assert wstar_distance(EmpiricalMeasure.of_word(w, 2), mu, 2)[0] + Fraction(1, 64) <= Fraction(1, 8)


def test_sample_mode_is_a_lower_bound(full2, fair):
    exact = typical_words(full2, fair, Fraction(1, 10), 40)
    sampled = typical_words(full2, fair, Fraction(1, 10), 40, mode="sample", budget=200, seed=3)
    assert 0 < sampled.exact_count <= exact.exact_count
    assert not sampled.exhaustive


def test_samples_are_typical_words(golden):
    mu = MarkovMeasure.parry(golden)
    tw = typical_words(golden, mu, 0.1, 30)
    rng = np.random.default_rng(0)
    from satshift.measures import EmpiricalMeasure
    for _ in range(50):
        w = tw.sample(rng)
        assert golden.is_admissible(w.tolist())
        assert float(wstar_distance(EmpiricalMeasure.of_word(w, 2), mu, 2)[0]) + 2 ** -6 <= 0.1 + 1e-12


def test_nonpositive_radius_rejected(full2, fair):
    with pytest.raises(ValueError):
        typical_words(full2, fair, 0, 5)


# --- uniform separation -----------------------------------------------------

def test_fair_coin_certificate(full2, fair):
    [rep] = certify_uniform_separation(full2, fair, [Fraction(1, 10)], 0.1)
    assert rep.n_star is not None and rep.n_star <= 64
    for n, c, m in zip(rep.ns, rep.counts, rep.margins):
        if n >= rep.n_star:
            assert m >= 0 and c >= math.exp(n * (math.log(2) - 0.1))


def test_large_slack_is_met_immediately(full2, fair):
    [rep] = certify_uniform_separation(full2, fair, [Fraction(1, 10)], 1.0, n_max=20)
    nonempty = [m for c, m in zip(rep.counts, rep.margins) if c > 0]
    assert len(nonempty) > 10 and min(nonempty) >= 0
    [rep] = certify_uniform_separation(full2, fair, [Fraction(1)], 1.0, n_max=20)
    assert rep.n_star == 1


def test_golden_parry_certificate(golden):
    [rep] = certify_uniform_separation(golden, MarkovMeasure.parry(golden), [0.05], 0.1)
    assert rep.n_star is not None


def test_tiny_radius_is_reported_not_raised(full2, fair):
    [rep] = certify_uniform_separation(full2, fair, [Fraction(1, 60)], 0.01, n_max=24)
    assert rep.n_star is None


# --- entropy-dense approximation --------------------------------------------

def test_ergodic_target_is_returned(full2, fair):
    d = entropy_dense_approx(fair, full2, 0.05, 0.05)
    assert d.measure is fair and d.ok


def test_two_coin_mixture(full2):
    target = mix((Fraction(1, 2), MarkovMeasure.bernoulli_p(Fraction(1, 5))),
                 (Fraction(1, 2), MarkovMeasure.bernoulli_p(Fraction(4, 5))))
    d = entropy_dense_approx(target, full2, 0.05, 0.05)
    assert d.ok and d.measure.is_irreducible()
    value, tail = wstar_distance(d.measure, target, d.block_length)
    assert float(value + tail) < 0.05
    assert d.measure.entropy() > target.entropy() - 0.05


def test_point_mass_component(full2, fair):
    point = MarkovMeasure.periodic_orbit("0", 2, point=True)
    target = mix((Fraction(9, 10), fair), (Fraction(1, 10), point))
    d = entropy_dense_approx(target, full2, 0.05, 0.1 * math.log(2))
    assert d.ok and d.entropy > target.entropy() - 0.1 * math.log(2)
