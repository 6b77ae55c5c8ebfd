from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from satshift.construct import NestedFamily, build_chain, generate_point, solve_schedule
from satshift.irregular import (Observable, ObservableError, birkhoff_trace, classify_limit_set,
                                irregular_target, periodic_spread, simple_cycles, spread,
                                spread_range, zero_spread_witness)
from satshift.measures import MarkovMeasure, mix
from satshift.shift import SymbolStream

X0 = Observable.coordinate(2)
F = Fraction


# --- observables ------------------------------------------------------------

def test_coordinate_spread_of_bernoulli():
    assert spread(X0, MarkovMeasure.bernoulli_p(F(1, 3))) == F(1, 3)


def test_coordinate_spread_of_golden_parry(golden):
    phi = (1 + 5 ** 0.5) / 2
    assert float(spread(X0, MarkovMeasure.parry(golden))) == pytest.approx(1 / (1 + phi ** 2))


@settings(max_examples=30, deadline=None)
@given(st.fractions(0, 1), st.fractions(0, 1), st.fractions(0, 1))
def test_constant_observable_ignores_the_measure(p, q, v):
    c = Observable.constant(2, v)
    assert spread(c, MarkovMeasure.bernoulli_p(p)) == spread(c, MarkovMeasure.bernoulli_p(q)) == v


@settings(max_examples=30, deadline=None)
@given(st.fractions(F(1, 100), F(99, 100)), st.fractions(0, 1), st.fractions(0, 1))
def test_spread_is_affine(t, p, q):
    mu, nu = MarkovMeasure.bernoulli_p(p), MarkovMeasure.bernoulli_p(q)
    obs = Observable.indicator("01", 2)
    assert spread(obs, mix((t, mu), (1 - t, nu))) == t * spread(obs, mu) + (1 - t) * spread(obs, nu)


def test_observable_json_round_trip():
    obs = Observable.indicator("011", 2).perturbed("000", F(1, 7))
    back = Observable.from_json(obs.to_json())
    assert back.table == obs.table and back.window == 3


def test_bad_table_word_rejected():
    with pytest.raises(ObservableError):
        Observable(2, 2, {(0,): F(1)})


# --- spread ranges ----------------------------------------------------------

def test_spread_range_on_full_and_golden(full2, golden):
    r = spread_range(X0, full2)
    assert (r.low, r.high) == (0, 1)
    g = spread_range(X0, golden)
    assert (g.low, g.high) == (0, F(1, 2))


def test_simple_cycles_of_golden(golden):
    cycles = {tuple(c) for c in simple_cycles(golden, 1)}
    assert cycles == {(0,), (0, 1)} or {len(c) for c in cycles} == {1, 2}


def test_periodic_spread():
    assert periodic_spread(X0, (0, 1, 1)) == F(2, 3)


def test_zero_spread_perturbation(golden):
    c = Observable.constant(2, 3)
    assert spread_range(c, golden).width == 0
    word, new = zero_spread_witness(c, golden, F(1, 1000))
    assert new.width > 0 and golden.is_admissible(word)


def test_zero_spread_target_rejected(full2):
    with pytest.raises(ObservableError, match="zero spread"):
        irregular_target(Observable.constant(2, 1), NestedFamily([full2]), 1, "a", 0.42)


# --- targets ----------------------------------------------------------------

def test_variant_a_on_full_shift(full2):
    t = irregular_target(X0, NestedFamily([full2]), 1, "a", 0.42)
    assert [float(x) for x in t.spreads] == pytest.approx([0.2, 0.8]) and t.theta == F(2, 5)
    for v in t.path.vertices:
        assert v.entropy() >= MarkovMeasure.parry(full2).entropy() - 0.42 - 1e-12


def test_variant_b_is_parry(golden_in_full, golden):
    t = irregular_target(X0, golden_in_full, 1, "b", 0.42)
    assert len(t.path.vertices) == 1
    assert t.path.vertices[0].entropy() == pytest.approx(MarkovMeasure.parry(golden).entropy())


def test_variant_d_endpoints_full_support(golden_in_full):
    t = irregular_target(X0, golden_in_full, 1, "d", 0.42)
    s1, s2 = t.spreads
    assert s1 != s2
    for v in t.path.vertices:
        assert all(x > 0 for x in np.asarray(v.mass_tables(3)[2], float)[[0, 1, 2, 3, 4, 5, 6, 7]])


def test_unknown_variant(golden_in_full):
    with pytest.raises(ObservableError):
        irregular_target(X0, golden_in_full, 1, "z", 0.42)


# --- Birkhoff traces --------------------------------------------------------

def sampled_stream(mu, n, seed, a=2):
    x = mu.sample(n, np.random.default_rng(seed))
    cps = np.unique(np.geomspace(100, n - 4, 200).astype(np.int64))
    return SymbolStream(x, a, cps, np.ones(len(cps), dtype=np.int64))


def test_bernoulli_stream_is_regular():
    p = 0.3
    z = sampled_stream(MarkovMeasure.bernoulli_p(F(3, 10)), 10 ** 6, 1)
    tr = birkhoff_trace(z, X0, checkpoints=z.checkpoints[100:])
    assert abs(tr.averages[-1] - p) < 0.005
    assert tr.oscillation < 0.01


def test_constant_observable_never_oscillates(irregular_run):
    tr = birkhoff_trace(irregular_run.stream, Observable.constant(2, F(1, 3)))
    assert tr.oscillation == 0


def test_irregular_trace(irregular_run):
    tr = birkhoff_trace(irregular_run.stream, X0)
    assert tr.liminf <= 0.3 and tr.limsup >= 0.7 and tr.oscillation >= 0.4
    est = tr.band_estimates()
    assert sorted(est) == [1, 2, 3]


# --- limit-set classification -----------------------------------------------

@pytest.mark.parametrize("variant", list("abcde"))
def test_classification_matches_variant(golden_in_full, variant):
    t = irregular_target(X0, golden_in_full, 1, variant, 0.42)
    ch = build_chain(t.path, 0.42)
    s = solve_schedule(golden_in_full, ch, bands=3, seed=5)
    z = generate_point(golden_in_full, ch, s)
    c = classify_limit_set(z, golden_in_full, schedule=s, declared=variant)
    assert c.inconclusive is None
    assert c.tag == variant and c.consistent


def test_parry_sample_is_level_supported(golden_in_full, golden):
    z = sampled_stream(MarkovMeasure.parry(golden), 10 ** 6, 2)
    c = classify_limit_set(z, golden_in_full, tolerance=0.05, threshold=0.01)
    assert c.tag == "b" and len(c.clusters) == 1 and c.clusters[0].kind == "level"


def test_fair_sample_is_ambient_supported(golden_in_full):
    z = sampled_stream(MarkovMeasure.bernoulli_p(F(1, 2)), 10 ** 6, 3)
    c = classify_limit_set(z, golden_in_full, tolerance=0.05, threshold=0.01)
    assert c.tag == "e"


def test_classification_needs_scales(golden_in_full):
    z = sampled_stream(MarkovMeasure.bernoulli_p(F(1, 2)), 1000, 3)
    with pytest.raises(ObservableError):
        classify_limit_set(z, golden_in_full)
