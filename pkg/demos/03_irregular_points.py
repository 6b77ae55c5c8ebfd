"""Points whose Birkhoff averages of phi(x) = x_0 never settle down,
and a check that their limit sets have the intended support.

Run: python3 demos/03_irregular_points.py   (about a minute)
"""
from satshift.construct import NestedFamily, build_chain, generate_point, solve_schedule
from satshift.irregular import Observable, birkhoff_trace, classify_limit_set, irregular_target
from satshift.shift import ShiftSystem

phi = Observable.coordinate(2)
full = NestedFamily([ShiftSystem.full_shift(2)])

target = irregular_target(phi, full, 1, "a", eta=0.42)
print(f"Variant (a) on the full shift: endpoint spreads {[round(float(s), 3) for s in target.spreads]},"
      f" mixing weight theta = {target.theta}")
chain = build_chain(target.path, 0.42)
sched = solve_schedule(full, chain, bands=3, seed=11)
z = generate_point(full, chain, sched)
tr = birkhoff_trace(z, phi)
print(f"Birkhoff averages over {len(z):,} symbols: liminf {tr.liminf:.4f}, limsup {tr.limsup:.4f}")
for band, (lo, hi) in tr.band_estimates().items():
    print(f"  through band {band}: [{lo:.4f}, {hi:.4f}]")

print("\nNow the golden mean inside the full shift, one run per variant:")
golden = ShiftSystem.from_matrix([[1, 1], [1, 0]])
family = NestedFamily([golden, ShiftSystem.full_shift(2)])
for v in "abcde":
    t = irregular_target(phi, family, 1, v, 0.42)
    ch = build_chain(t.path, 0.42)
    s = solve_schedule(family, ch, bands=3, seed=5)
    pt = generate_point(family, ch, s)
    c = classify_limit_set(pt, family, schedule=s, declared=v)
    kinds = sorted({cl.kind for cl in c.clusters})
    osc = birkhoff_trace(pt, phi).oscillation
    print(f"  variant {v}: tag {c.tag}  clusters {len(c.clusters)} ({', '.join(kinds)})  "
          f"oscillation of x_0 averages {osc:.3f}")
