"""End-to-end acceptance criteria; each test prints one PASS/FAIL line."""

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from satshift.cli import construct, define_preset, resolve_manifest, run_audit
from satshift.construct import (NestedFamily, TargetPath, band_maxima, build_chain, envelopes,
                                generate_point, schedule_checks, separated_family_certificate,
                                solve_schedule, verify_route_tracking, verify_tracking,
                                verify_transitivity)
from satshift.irregular import birkhoff_trace
from satshift.measures import lift, mix, wstar_distance
from satshift.separation import (brute_force_typical_count, certify_uniform_separation,
                                 estimate_entropy_word_count, typical_class_counts)
from satshift.shift import ShiftSystem, periodic_decomposition, shadow_pseudo_orbit, tracing_distances

from conftest import golden_pseudo_orbit
from test_shift import brute_force_classes, random_irreducible


@pytest.fixture()
def report(capsys):
    def emit(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}: {title}" + (f" [{detail}]" if detail else ""))
        assert ok, detail
    return emit


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def test_criterion_01_entropy_closed_forms(golden, report):
    t0 = time.perf_counter()
    est = estimate_entropy_word_count(golden, 32).value
    dt = time.perf_counter() - t0
    exact = math.log(fib(34)) / 32
    log_phi = math.log((1 + math.sqrt(5)) / 2)
    ok = abs(est - exact) <= 0.006 and abs(est - log_phi) <= 0.01 and dt < 1
    report(1, "golden-mean word-count entropy", ok,
           f"estimate={est:.6f} log(F34)/32={exact:.6f} log(phi)={log_phi:.6f} time={dt:.3f}s")


def test_criterion_02_uniform_separation(full2, fair, report):
    eta, zeta = 0.1, Fraction(1, 10)
    table = typical_class_counts(full2, fair, zeta, 16)
    mismatches = [n for n in range(1, 17) if table[n][0] != brute_force_typical_count(full2, fair, zeta, n)]
    [rep] = certify_uniform_separation(full2, fair, [zeta], eta, n_max=64)
    bound_ok = rep.n_star is not None and rep.n_star <= 64 and all(
        c > 0 and math.log(c) >= n * (math.log(2) - eta)
        for n, c in zip(rep.ns, rep.counts) if n >= rep.n_star)
    ok = not mismatches and bound_ok
    report(2, "typical-word counts meet e^(n(log 2 - 0.1)) on [n*, 64]", ok,
           f"n*={rep.n_star} brute-force mismatches={mismatches}")


def test_criterion_03_schedule_validity(golden_run, report):
    s = golden_run.schedule
    checks = schedule_checks(s)
    bad = [c for c in checks if not c.ok]
    overhead = all((s.band(k).t * s.band(k).K + s.band(k + 1).K) * s.band(k).zeta.denominator
                   <= s.band(k).zeta.numerator * s.band(k).n for k in range(1, s.B + 1))
    ok = s.B == 3 and not bad and overhead
    report(3, "3-band schedule on golden-mean in full 2-shift", ok,
           f"{len(checks)} integer checks, failures={[(c.name, c.k) for c in bad]}")


def test_criterion_04_tracking(full2, fair, report):
    t0 = time.perf_counter()
    fam = NestedFamily([full2])
    ch = build_chain(TargetPath([fair]), 0.25)
    s = solve_schedule(fam, ch, bands=3, seed=7)
    z = generate_point(fam, ch, s, horizon=10 ** 6)
    rows = verify_tracking(z, ch, s, family=fam)
    dt = time.perf_counter() - t0
    m = band_maxima(rows)
    seq = [m[b] for b in sorted(m)]
    env = envelopes(s, ch)
    ok = (all(r.passed for r in rows) and len(seq) == 3
          and all(x > y for x, y in zip(seq, seq[1:])) and dt < 120)
    report(4, "singleton Bernoulli(1/2) tracking, horizon 1e6", ok,
           f"{len(rows)} checkpoints, band maxima={[round(x, 5) for x in seq]}, "
           f"envelopes={[round(env[b], 4) for b in sorted(env)]}, time={dt:.1f}s")


def test_criterion_05_irregularity(full2, report):
    from satshift.irregular import Observable, irregular_target
    t0 = time.perf_counter()
    fam = NestedFamily([full2])
    obs = Observable.coordinate(2)
    tgt = irregular_target(obs, fam, 1, "a", 0.42)
    ch = build_chain(tgt.path, 0.42)
    s = solve_schedule(fam, ch, bands=3, seed=11)
    z = generate_point(fam, ch, s, horizon=10 ** 7)
    tr = birkhoff_trace(z, obs)
    dt = time.perf_counter() - t0
    spreads = [float(x) for x in tgt.spreads]
    ok = (spreads == pytest.approx([0.2, 0.8]) and tr.liminf <= 0.3 and tr.limsup >= 0.7 and dt < 600)
    report(5, "variant (a) Birkhoff averages of x_0 oscillate", ok,
           f"spreads={spreads} liminf={tr.liminf:.4f} limsup={tr.limsup:.4f} "
           f"length={len(z)} time={dt:.1f}s")


def test_criterion_06_separated_family(golden_run, full2, fair, report):
    details, ok = [], True
    fam1 = NestedFamily([full2])
    ch1 = build_chain(TargetPath([fair]), 0.25)
    s1 = solve_schedule(fam1, ch1, bands=3, seed=7)
    z1 = generate_point(fam1, ch1, s1)
    runs = [("golden-full", golden_run.family, golden_run.chain, golden_run.schedule, golden_run.stream),
            ("bernoulli", fam1, ch1, s1, z1)]
    for name, fam, ch, s, z in runs:
        c = separated_family_certificate(s, ch, fam, z, n_pairs=100)
        floor = ch.path.inf_entropy() - 0.15
        good = c.rate >= floor and c.pairs_separated == c.pairs_checked == 100
        ok &= good
        details.append(f"{name}: rate={c.rate:.4f} >= {floor:.4f}, pairs {c.pairs_separated}/100")
    report(6, "separated-family rate and pair separation", ok, "; ".join(details))


def test_criterion_07_transitivity(golden_run, report):
    rows = verify_transitivity(golden_run.stream, golden_run.family, golden_run.schedule, depth=6)
    bad = [(r.level, r.word) for r in rows if not r.passed]
    ok = bool(rows) and not bad
    report(7, "every depth<=6 cylinder of each level hit within its band horizon", ok,
           f"{len(rows)} cylinders, misses={bad[:5]}")


def test_criterion_08_periodic_decomposition(period2_run, report):
    rng = np.random.default_rng(8)
    mism = 0
    for _ in range(100):
        A = random_irreducible(rng, int(rng.integers(1, 6)))
        d = periodic_decomposition(ShiftSystem.from_matrix(A))
        p, classes = brute_force_classes(A)
        mism += d.period != p or {frozenset(c) for c in d.classes} != classes
    r = period2_run
    power = r.route.powers[-1]
    target = r.route.base_target(r.nu)
    nu_lift = lift(r.nu, power)
    half = mix((Fraction(1, 2), nu_lift), (Fraction(1, 2), nu_lift.pushforward()))
    gap = float(wstar_distance(target, half, 4)[0])
    rows = verify_route_tracking(r.route, r.stream, r.chain, r.schedule)
    ok = mism == 0 and r.route.k == 2 and gap < 1e-12 and rows and all(x.passed for x in rows)
    report(8, "decomposition vs brute force; period-2 base tracking", ok,
           f"mismatches={mism}/100, k={r.route.k}, i0={r.route.i0}, "
           f"|target-(nu+f*nu)/2|={gap:.1e}, {len(rows)} base checkpoints")


def test_criterion_09_shadowing(golden, report):
    rng = np.random.default_rng(9)
    violations = 0
    worst = Fraction(0)
    for _ in range(100):
        orbit = golden_pseudo_orbit(rng, 10 ** 4)
        y = shadow_pseudo_orbit(golden, orbit, Fraction(1, 4))
        d = max(tracing_distances(y, orbit))
        worst = max(worst, d)
        violations += (d > Fraction(1, 2)) + (not golden.is_admissible(y.symbols.tolist()))
    report(9, "100 golden-mean 1/4-pseudo-orbits of length 1e4 are 1/2-traced", violations == 0,
           f"violations={violations}, worst tracing distance={worst}")


def test_criterion_10_determinism(tmp_path, report):
    digests, csvs = [], []
    for name in ("a", "b"):
        man_path = define_preset("bernoulli", tmp_path / f"defs_{name}")
        man = resolve_manifest(json.loads(man_path.read_text()), man_path.parent)
        run, ar = construct(man, tmp_path / f"run_{name}")
        run_audit(ar, "all", run=run)
        digests.append(ar.path("stream.bin").read_bytes())
        csvs.append({p.name: p.read_bytes() for p in sorted(ar.audit_dir.glob("*.csv"))})
    ok = digests[0] == digests[1] and csvs[0] == csvs[1] and len(csvs[0]) >= 3
    report(10, "two runs from one manifest and seed are byte-identical", ok,
           f"stream bytes={len(digests[0])}, audit CSVs={sorted(csvs[0])}")
