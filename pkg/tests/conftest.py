from fractions import Fraction

import pytest

from satshift.construct import NestedFamily
from satshift.measures import MarkovMeasure
from satshift.shift import ShiftSystem

GOLDEN = [[1, 1], [1, 0]]
PERIOD2_L1 = [[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 0]]
PERIOD2_L2 = [[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]]


def random_golden(rng, n, start=0):
    out = [start]
    for _ in range(n - 1):
        out.append(0 if out[-1] == 1 else int(rng.integers(0, 2)))
    return out


def golden_pseudo_orbit(rng, length):
    """Entries share 3 symbols with the shifted predecessor; the tails are free."""
    w = random_golden(rng, length + 4, int(rng.integers(0, 2)))
    orbit = []
    for n in range(length):
        head = w[n:n + 4]
        orbit.append(tuple(head + random_golden(rng, 4, head[-1])[1:]))
    return orbit


@pytest.fixture(scope="session")
def full2():
    return ShiftSystem.full_shift(2)


@pytest.fixture(scope="session")
def golden():
    return ShiftSystem.from_matrix(GOLDEN, "golden")


@pytest.fixture(scope="session")
def fair():
    return MarkovMeasure.bernoulli([Fraction(1, 2), Fraction(1, 2)])


@pytest.fixture(scope="session")
def golden_in_full(golden, full2):
    return NestedFamily([golden, full2])


@pytest.fixture(scope="session")
def period2_family():
    return NestedFamily([ShiftSystem.from_matrix(PERIOD2_L1, "p2a"),
                         ShiftSystem.from_matrix(PERIOD2_L2, "p2b")])


class Run:
    """A solved schedule with its generated stream."""

    def __init__(self, family, chain, schedule, stream, **extra):
        self.family, self.chain, self.schedule, self.stream = family, chain, schedule, stream
        self.__dict__.update(extra)


def make_run(family, path, eta, seed, bands=3, u="", horizon=None):
    from satshift.construct import build_chain, generate_point, solve_schedule
    chain = build_chain(path, eta)
    s = solve_schedule(family, chain, u, bands=bands, seed=seed)
    return Run(family, chain, s, generate_point(family, chain, s, horizon=horizon))


@pytest.fixture(scope="session")
def singleton_run(full2, fair):
    from satshift.construct import TargetPath
    return make_run(NestedFamily([full2]), TargetPath([fair]), 0.25, seed=7, horizon=10 ** 6)


@pytest.fixture(scope="session")
def golden_run(golden_in_full, fair):
    from satshift.construct import TargetPath
    return make_run(golden_in_full, TargetPath([fair]), 0.25, seed=7)


@pytest.fixture(scope="session")
def irregular_run(full2):
    from satshift.irregular import Observable, irregular_target
    family = NestedFamily([full2])
    obs = Observable.coordinate(2)
    target = irregular_target(obs, family, 1, "a", 0.42)
    run = make_run(family, target.path, 0.42, seed=11)
    run.observable, run.target = obs, target
    return run


@pytest.fixture(scope="session")
def period2_run(period2_family):
    from satshift.construct import TargetPath, mixing_route
    route = mixing_route(period2_family, "1")
    nu = MarkovMeasure.parry(route.family.ambient)
    run = make_run(route.family, TargetPath([nu]), 0.3, seed=3, u=route.u_power, horizon=2 * 10 ** 6)
    run.route, run.nu = route, nu
    return run
