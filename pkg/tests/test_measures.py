import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from satshift.measures import (ConvexCombination, EmpiricalMeasure, MarkovMeasure, MeasureError,
                               block_entropy, decomposition_average, full_support_measure,
                               measure_from_json, mix, restrict_normalize, truncation_bound,
                               wstar_distance)
from satshift.shift import ShiftSystem, periodic_decomposition, power_restrict

PHI = (1 + math.sqrt(5)) / 2


def tables_equal(mu, nu, depth=4, tol=1e-12):
    return all(np.allclose(np.asarray(x, float), np.asarray(y, float), atol=tol)
               for x, y in zip(mu.mass_tables(depth), nu.mass_tables(depth)))


# --- cylinders --------------------------------------------------------------

def test_bernoulli_cylinder_is_exact(fair):
    assert fair.cylinder_mass("01") == Fraction(1, 4)


def test_parry_golden(golden):
    mu = MarkovMeasure.parry(golden)
    assert mu.cylinder_mass("11") == 0
    assert mu.P[0][0] == pytest.approx(1 / PHI)
    assert mu.P[0][1] == pytest.approx(1 / PHI ** 2)
    assert mu.pi[0] == pytest.approx(PHI ** 2 / (1 + PHI ** 2))
    assert mu.is_stationary()


def test_empirical_depth_one():
    E = EmpiricalMeasure.of_word("0101")
    assert E.cylinder_mass("0") == Fraction(1, 2)
    # truncated: 3 windows of length 2
    assert E.cylinder_mass("01") == Fraction(2, 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=4, max_size=30))
def test_empirical_tables_are_probability_vectors(word):
    E = EmpiricalMeasure.of_word(word, 3)
    for T in E.mass_tables(3):
        assert sum(T) == 1 and all(x >= 0 for x in T)


# --- weak* metric -----------------------------------------------------------

def test_distance_to_self(fair, golden):
    assert wstar_distance(fair, fair, 4)[0] == 0
    mu = MarkovMeasure.parry(golden)
    assert wstar_distance(mu, mu, 3)[0] == 0


def test_distance_between_fixed_points():
    zeros = MarkovMeasure.periodic_orbit("0", 2)
    ones = MarkovMeasure.periodic_orbit("1", 2)
    value, tail = wstar_distance(zeros, ones, 3)
    # canonical order: 0, 1, 00, 01, 10, 11, 000, ..., 111 with weights 2^-1 .. 2^-14
    expected = sum(Fraction(1, 2 ** i) for i in (1, 2, 3, 6, 7, 14))
    assert value == expected
    assert tail == truncation_bound(2, 3) == Fraction(1, 2 ** 14)


def test_distance_monotone_in_parameter_gap():
    grid = [Fraction(i, 10) for i in range(1, 10)]
    for p in grid:
        mu = MarkovMeasure.bernoulli_p(p)
        ds = [wstar_distance(mu, MarkovMeasure.bernoulli_p(q), 4)[0] for q in grid if q >= p]
        assert all(a < b for a, b in zip(ds, ds[1:]))


def test_alphabet_mismatch_rejected(fair):
    with pytest.raises(MeasureError):
        wstar_distance(fair, MarkovMeasure.bernoulli([Fraction(1, 3)] * 3))


# --- entropy ----------------------------------------------------------------

def test_entropy_closed_forms(fair, golden):
    assert fair.entropy() == pytest.approx(math.log(2))
    assert MarkovMeasure.parry(golden).entropy() == pytest.approx(math.log(PHI), abs=1e-12)


def test_entropy_is_affine(fair):
    point = MarkovMeasure.periodic_orbit("0", 2, point=True)
    mu = mix((Fraction(1, 2), fair), (Fraction(1, 2), point))
    assert mu.entropy() == pytest.approx(0.5 * math.log(2))


def test_block_entropy_of_bernoulli(fair):
    assert block_entropy(fair, 5) == pytest.approx(5 * math.log(2))


# --- pushforward ------------------------------------------------------------

def test_invariant_measure_is_fixed(golden):
    mu = MarkovMeasure.parry(golden)
    assert tables_equal(mu.pushforward(), mu)


def test_point_mass_moves_along_orbit():
    x = MarkovMeasure.periodic_orbit("01", point=True)
    y = MarkovMeasure.periodic_orbit("10", point=True)
    assert tables_equal(x.pushforward(), y)


def test_empirical_pushforward_drops_first_symbol():
    E = EmpiricalMeasure.of_word("0011").pushforward()
    assert E.cylinder_mass("0") == Fraction(1, 3)
    assert E.cylinder_mass("1") == Fraction(2, 3)


# --- family operations ------------------------------------------------------

def test_decomposition_average_period_two():
    X = ShiftSystem.from_matrix([[0, 1], [1, 0]])
    power = power_restrict(X, periodic_decomposition(X))
    nu = MarkovMeasure.periodic_orbit((0,), 1)
    avg = decomposition_average(nu, power)
    assert tables_equal(avg, MarkovMeasure.periodic_orbit("01"))


def test_decomposition_average_identity(fair, full2):
    power = power_restrict(full2, periodic_decomposition(full2))
    assert tables_equal(decomposition_average(fair, power), fair)


def test_decomposition_average_halves_block_entropy(golden):
    power = power_restrict(golden, periodic_decomposition(golden), exponent=2)
    nu = MarkovMeasure.parry(power.system)
    avg = decomposition_average(nu, power)
    assert avg.entropy() == pytest.approx(nu.entropy() / 2)
    assert avg.entropy() == pytest.approx(math.log(PHI), abs=1e-9)
    assert tables_equal(avg, MarkovMeasure.parry(golden), depth=5, tol=1e-9)


def test_restrict_normalize(fair, golden):
    g = MarkovMeasure.parry(golden)
    mu = mix((Fraction(9, 10), g, 1), (Fraction(1, 10), fair, 2))
    assert restrict_normalize(mu, 2) is not None
    assert restrict_normalize(mu, 1) is g
    assert tables_equal(restrict_normalize(mu, 2), mu)


def test_restrict_normalize_converges():
    parts = [MarkovMeasure.bernoulli_p(Fraction(k, 5)) for k in (1, 2, 3)]
    mu = mix(*[(Fraction(w, 8), m, l) for w, m, l in zip((4, 2, 2), parts, (1, 2, 3))])
    ds = [float(wstar_distance(restrict_normalize(mu, n), mu, 4)[0]) for n in (1, 2, 3)]
    assert ds[0] > ds[1] > ds[2] == 0


def test_full_support_measure(golden, full2, fair):
    mu = full_support_measure([golden, full2])
    ref = mix((Fraction(1, 2), MarkovMeasure.parry(golden)), (Fraction(1, 2), fair))
    assert tables_equal(mu, ref)
    assert all(x > 0 for T in mu.mass_tables(4) for x in T)


def test_full_support_single_level(golden):
    assert tables_equal(full_support_measure([golden]), MarkovMeasure.parry(golden))


# --- io ---------------------------------------------------------------------

def test_markov_from_json_is_exact():
    mu = measure_from_json({"type": "markov", "P": [["1/2", "1/2"], ["1", "0"]]})
    assert mu.exact and mu.pi.tolist() == [Fraction(2, 3), Fraction(1, 3)]


def test_non_stochastic_row_reported():
    with pytest.raises(MeasureError, match="row 1"):
        measure_from_json({"type": "markov", "P": [["1/2", "1/2"], ["1/2", "1/3"]]})


def test_convex_round_trip(fair, golden):
    mu = mix((Fraction(1, 4), fair, 2), (Fraction(3, 4), MarkovMeasure.bernoulli_p(Fraction(1, 5)), 1))
    back = measure_from_json(mu.to_json())
    assert isinstance(back, ConvexCombination) and back.levels == (2, 1)
    assert tables_equal(back, mu)


def test_bad_number_is_a_measure_error():
    with pytest.raises(MeasureError):
        measure_from_json({"type": "bernoulli", "probs": ["1/0", "1"]})


# --- sampling ---------------------------------------------------------------

def test_empirical_measures_of_samples_converge(golden):
    mu = MarkovMeasure.parry(golden)
    close = 0
    for seed in range(100):
        x = mu.sample(10 ** 5, np.random.default_rng(seed))
        E = EmpiricalMeasure(x, len(x), 2, exact=False)
        close += float(wstar_distance(E, mu, 3)[0]) <= 0.05
    assert close >= 95
