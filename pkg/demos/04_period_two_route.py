"""Non-mixing levels: pass to the square of the shift on one cyclic class,
build there, and read the result back on the original system.

Run: python3 demos/04_period_two_route.py   (about 40 s)
"""
from satshift.construct import (NestedFamily, TargetPath, build_chain, generate_point, mixing_route,
                                solve_schedule, verify_route_tracking)
from satshift.measures import MarkovMeasure
from satshift.shift import ShiftSystem, periodic_decomposition

inner = ShiftSystem.from_matrix([[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 0]], "inner")
outer = ShiftSystem.from_matrix([[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], "outer")
family = NestedFamily([inner, outer])
for X in family.levels:
    d = periodic_decomposition(X, anchor=0)
    print(f"{X.label}: period {d.period}, classes {d.classes}")

route = mixing_route(family, u="1")
print(f"\nRoute: k = {route.k}, blocks {route.powers[-1].block_alphabet}, "
      f"start cylinder [1] reached after i0 = {route.i0} step(s)")

nu = MarkovMeasure.parry(route.family.ambient)
chain = build_chain(TargetPath([nu]), 0.3)
sched = solve_schedule(route.family, chain, route.u_power, bands=3, seed=3)
z = generate_point(route.family, chain, sched, horizon=2 * 10 ** 6)
base = route.expand(z)
print(f"Base stream starts {''.join(map(str, base.symbols[:24]))}...")

target = route.base_target(nu)
print(f"Base target = average of the lifted measure over one period; entropy {target.entropy():.4f}"
      f" = half the block entropy {nu.entropy() / 2:.4f}")
rows = verify_route_tracking(route, z, chain, sched)
print(f"{len(rows)} base checkpoints tracked, all within envelope: {all(r.passed for r in rows)}")
last = rows[-1]
print(f"Last checkpoint M={last.M:,}: distance {last.distance:.5f}")
