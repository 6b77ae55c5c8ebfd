"""Explicit points with a prescribed set of empirical-measure limit points.

Pipeline::

    family = NestedFamily([X1, X2])
    chain  = build_chain(TargetPath([mu]), eta)
    sched  = solve_schedule(family, chain, u="", eta=eta, bands=3, seed=7)
    z      = generate_point(family, chain, sched, seed=7, horizon=10**6)
    trace  = verify_tracking(z, chain, sched)

Layout of the constructed stream.  Segment ``j`` starts at ``M_{j-1}``
(``M_{-1} = 0``) and consists of a scheduled word followed by a connector:

* ``j = 0``: the first ``m_0`` symbols of ``x_0``;
* band ``k``, ``N_k`` blocks: a typical word of length ``n_k``;
* band ``k``, ``t_k`` net visits: every ``m_k``-word of ``X_k`` in order.

Consecutive words are glued with gap ``K`` (``K - 1`` connector symbols) in
the level ``X_{L_k}``; the last net visit of a band uses ``K_{k+1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .measures import (ConvexCombination, MarkovMeasure, Measure, MeasureError, as_combination,
                       checkpoint_tables, combine, decomposition_average, restrict_normalize,
                       table_distance, truncation_bound, wstar_distance)
from .separation import (EPS_STAR, big_decimal, _Predicate, entropy_dense_approx, support_edges,
                         typical_words, word_class)
from .shift import (PeriodicDecomposition, PowerSystem, ShiftSystem, SymbolStream, SystemError_,
                    connector, format_word, is_transitive, m_of_eps, parse_word, periodic_decomposition,
                    power_restrict, primitivity_index)

AUDIT_DEPTH = 3
ZETA_CAP = Fraction(1, 5)
ZETA_RATIO = Fraction(3, 4)

KIND_X0, KIND_BLOCK, KIND_NET = 0, 1, 2


class ScheduleError(RuntimeError):
    pass


class BudgetError(ScheduleError):
    """A search exhausted its doubling or length budget."""


# ---------------------------------------------------------------------------
# families and targets


@dataclass
class NestedFamily:
    """Nondecreasing transitive levels ``X_1 <= X_2 <= ...``; the last is the ambient."""

    levels: list
    label: str = ""
    density_depth: int = 6

    def __post_init__(self):
        self.levels = list(self.levels)
        problems = self.diagnostics()
        if problems:
            raise SystemError_("; ".join(problems))

    def diagnostics(self) -> list:
        out = []
        if not self.levels:
            return ["empty family"]
        a = self.levels[0].alphabet_size
        for i, X in enumerate(self.levels, start=1):
            if X.alphabet_size != a:
                out.append(f"level {i} alphabet size {X.alphabet_size} != {a}")
                continue
            if not is_transitive(X):
                out.append(f"level {i} is not transitive")
        for i in range(len(self.levels) - 1):
            lo, hi = self.levels[i], self.levels[i + 1]
            if lo.alphabet_size == hi.alphabet_size and not hi.contains(lo):
                bad = np.argwhere(lo.matrix > hi.matrix)
                w = format_word(bad[0])
                out.append(f"nesting violation: level {i + 2} forbids word {w!r} of level {i + 1}")
        return out

    @property
    def ambient(self) -> ShiftSystem:
        return self.levels[-1]

    @property
    def top(self) -> int:
        return len(self.levels)

    @property
    def alphabet_size(self) -> int:
        return self.levels[0].alphabet_size

    def level(self, n: int) -> ShiftSystem:
        return self.levels[min(n, self.top) - 1]

    def level_of_word(self, word) -> int | None:
        for i, X in enumerate(self.levels, start=1):
            if X.is_admissible(word):
                return i
        return None

    def level_of_measure(self, mu: Measure) -> int:
        """Smallest level whose transitions carry all of ``mu``'s depth-2 mass."""
        for i, X in enumerate(self.levels, start=1):
            T2 = mu.mass_tables(2)[1]
            T1 = mu.mass_tables(1)[0]
            a = self.alphabet_size
            if all(not T2[p * a + q] > 0 or X.transitions[p][q] for p in range(a) for q in range(a)) \
                    and all(not T1[s] > 0 or s in X.active for s in range(a)):
                return i
        raise MeasureError("measure is not supported on any level")

    def to_json(self):
        return {"label": self.label, "levels": [X.to_json() for X in self.levels]}

    @classmethod
    def from_json(cls, data):
        return cls([ShiftSystem.from_json(d) for d in data["levels"]], data.get("label", ""))


@dataclass
class TargetPath:
    """Polygonal path through the vertices; ``K`` is the union of its segments."""

    vertices: list

    def __post_init__(self):
        self.vertices = list(self.vertices)
        if not self.vertices:
            raise MeasureError("target path needs at least one vertex")
        a = {v.alphabet_size for v in self.vertices}
        if len(a) != 1:
            raise MeasureError("vertices live on different alphabets")

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def alphabet_size(self):
        return self.vertices[0].alphabet_size

    def point(self, t) -> Measure:
        """Measure at path parameter ``t`` in ``[0, length]``."""
        t = Fraction(t)
        if self.length == 0:
            return self.vertices[0]
        if not 0 <= t <= self.length:
            raise ValueError("parameter outside the path")
        i = min(int(t), self.length - 1)
        tau = t - i
        return combine(1 - tau, self.vertices[i], self.vertices[i + 1])

    def inf_entropy(self) -> float:
        """Entropy is affine, so the infimum over ``K`` sits at a vertex."""
        return min(v.entropy() for v in self.vertices)


def zigzag_parameters(length, count: int) -> list:
    """Dyadic back-and-forth sweep ``0, T, T/2, 0, T/4, T/2, 3T/4, T, ...``."""
    T = Fraction(length)
    if T == 0:
        return [Fraction(0)] * count
    out = [Fraction(0), T]
    level, pos = 1, T
    while len(out) < count:
        step = T / 2 ** level
        direction = -1 if level % 2 else 1
        for _ in range(2 ** level):
            pos = pos + direction * step
            out.append(pos)
            if len(out) >= count:
                break
        level += 1
    return out[:count]


@dataclass
class MeasureChain:
    path: TargetPath
    params: list
    alphas: list
    gammas: list
    eta: float
    mode: str
    H_star: float
    entropy_floor: float
    approximations: list = field(default_factory=list)

    def gamma(self, k: int) -> Measure:
        return self.gammas[k - 1]

    def alpha(self, k: int) -> Measure:
        return self.alphas[k - 1]

    def step_distances(self, depth: int = AUDIT_DEPTH) -> list:
        """Upper bounds ``value + tail`` on ``d(gamma_k, gamma_{k+1})``."""
        out = []
        for g, h in zip(self.gammas, self.gammas[1:]):
            v, tail = wstar_distance(g, h, depth)
            out.append(float(v) + float(tail) if g is not h else 0.0)
        return out


def build_chain(K: TargetPath, eta: float, length: int = 8, mode: str = "direct",
                family: NestedFamily | None = None, eps: Sequence | None = None) -> MeasureChain:
    """Dense chain ``alpha_k`` along ``K`` and working measures ``gamma_k``.

    ``direct`` mode uses ``gamma_k = alpha_k``.  ``measure`` mode replaces
    ``alpha_k`` by an ergodic Markov approximation within ``eps_k`` whose
    entropy loss is below ``eta``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    params = zigzag_parameters(K.length, length)
    alphas = [K.point(t) for t in params]
    approx = []
    if mode == "direct":
        gammas = list(alphas)
        inf_h = K.inf_entropy()
    elif mode == "measure":
        if family is None:
            raise ValueError("measure mode needs the nested family")
        eps = eps or [Fraction(1, 12) / 2 ** k for k in range(1, length + 1)]
        gammas = []
        for k, a in enumerate(alphas, start=1):
            lvl = family.level_of_measure(a)
            beta = restrict_normalize(_tag_levels(a, family), lvl)
            res = entropy_dense_approx(beta, family.level(lvl), float(eps[k - 1]), eta)
            if not res.ok:
                raise MeasureError(f"entropy-dense approximation failed at k={k}: "
                                   f"achievable distance {res.distance_bound:.4g}")
            approx.append(res)
            gammas.append(res.measure)
        inf_h = min(g.entropy() for g in gammas)
    else:
        raise ValueError(f"unknown chain mode {mode!r}")
    H = inf_h - eta
    return MeasureChain(K, params, alphas, gammas, eta, mode, H, H - eta, approx)


def _tag_levels(mu: Measure, family: NestedFamily) -> ConvexCombination:
    comb = as_combination(mu)
    return ConvexCombination(tuple((w, m, family.level_of_measure(m)) for w, m, _ in comb.components),
                             comb.label)


# ---------------------------------------------------------------------------
# schedule


@dataclass
class Band:
    k: int
    eps: Fraction
    zeta: Fraction
    m: int
    t: int
    level: int  # L_k
    target_level: int  # l_k
    net_level: int
    K: int
    n_bound: int
    n_star: int
    n: int
    N: int = 0
    gamma_count: int = field(default=0, repr=False)
    gamma_log: float = 0.0
    gamma_entropy: float = 0.0

    @property
    def c(self) -> int:
        """Stride of a net visit: ``m_k`` traced symbols plus ``K_k - 1`` connector symbols."""
        return self.m + self.K - 1


@dataclass
class Schedule:
    bands: list  # 1..B+2 (last two are lookahead)
    B: int
    u: tuple
    eps0: Fraction
    x0: tuple
    l0: int
    eta: float
    H_star: float
    seed: int
    gammas: dict = field(default_factory=dict)  # k -> TypicalWordSet
    nets: dict = field(default_factory=dict)  # k -> list of words

    def band(self, k: int) -> Band:
        return self.bands[k - 1]

    @property
    def m0(self) -> int:
        return len(self.x0)

    # -- segments ------------------------------------------------------------
    def segment_lengths(self) -> np.ndarray:
        """``n'_j`` for ``j = 0..J`` (``J`` = last net visit of band ``B``)."""
        out = [self.m0 + self.band(1).K - 1]
        for k in range(1, self.B + 1):
            b, nb = self.band(k), self.band(k + 1)
            out.extend([b.n + b.K - 1] * b.N)
            out.extend([b.c] * (b.t - 1))
            out.append(b.m + nb.K - 1)
        return np.array(out, dtype=np.int64)

    def checkpoints(self) -> np.ndarray:
        """``M_j = sum_{i <= j} n'_i``."""
        return np.cumsum(self.segment_lengths())

    def band_bounds(self) -> list:
        """``S_k = sum_{i <= k} (N_i + t_i)``; band ``k`` owns ``j`` in ``(S_{k-1}, S_k]``."""
        out = [0]
        for k in range(1, self.B + 1):
            out.append(out[-1] + self.band(k).N + self.band(k).t)
        return out

    def band_of_segment(self) -> np.ndarray:
        S = self.band_bounds()
        J = S[-1]
        band = np.zeros(J + 1, dtype=np.int64)
        for k in range(1, self.B + 1):
            band[S[k - 1] + 1:S[k] + 1] = k
        return band

    def band_end(self, k: int) -> int:
        """``L_k``: the checkpoint closing band ``k``."""
        return int(self.checkpoints()[self.band_bounds()[k]])

    def total_length(self) -> int:
        return int(self.checkpoints()[-1])

    def to_json(self) -> dict:
        return {
            "B": self.B, "u": format_word(self.u), "eps0": str(self.eps0), "x0": format_word(self.x0),
            "l0": self.l0, "eta": self.eta, "H_star": self.H_star, "seed": self.seed,
            "bands": [{
                "k": b.k, "eps": str(b.eps), "zeta": str(b.zeta), "m": b.m, "t": b.t, "L": b.level,
                "l": b.target_level, "K": b.K, "n_bound": b.n_bound, "n_star": b.n_star, "n": b.n,
                "N": b.N, "gamma_count": big_decimal(b.gamma_count), "gamma_log": b.gamma_log,
                "gamma_entropy": b.gamma_entropy, "lookahead": b.k > self.B,
            } for b in self.bands],
            "total_length": self.total_length(),
        }


def eps_sequence(eps0: Fraction, count: int) -> list:
    """``eps_1 = min(eps*/6, eps_0/2)`` and ``eps_k = eps_1 / 2**k`` for ``k >= 2``."""
    e1 = min(EPS_STAR / 6, eps0 / 2)
    return [e1] + [e1 / 2 ** k for k in range(2, count + 1)]


def choose_zeta1(H_star: float, eta: float) -> Fraction:
    """Largest value on the 1/100 grid (capped at 1/5) with ``5 zeta_1 (H* - eta) < eta``."""
    slack = H_star - eta
    if slack <= 0:
        return ZETA_CAP
    z = Fraction(math.floor(100 * eta / (5 * slack)), 100)
    while z > 0 and not 5 * float(z) * slack < eta:
        z -= Fraction(1, 100)
    if z <= 0:
        z = Fraction(eta / (10 * slack)).limit_denominator(10 ** 6)
    return min(z, ZETA_CAP)


def min_block_length(t: int, K: int, K_next: int, zeta, m: int = 1) -> int:
    """Smallest ``n`` with ``(t (m + K - 1) + K_next) / n <= zeta``."""
    return math.ceil(Fraction(t * (m + K - 1) + K_next) / Fraction(zeta))


def lex_min_extension(X: ShiftSystem, u: Sequence[int], length: int) -> tuple:
    """First ``length`` symbols of the lexicographically smallest point of ``[u]`` in ``X``."""
    w = list(u)
    if not w:
        w = [X.active[0]]
    while len(w) < length:
        w.append(next(s for s in range(X.alphabet_size) if X.transitions[w[-1]][s]))
    return tuple(w[:length]) if len(u) <= length else tuple(u)


def solve_schedule(family: NestedFamily, chain: MeasureChain, u="", eta: float | None = None,
                   bands: int = 3, seed: int = 0, zeta1=None, budget: int = 256,
                   max_doublings: int = 12) -> Schedule:
    """Integers meeting every schedule inequality, minimal by policy.

    ``n_k`` is the least value meeting the overhead inequality and the
    typical-set cardinality bound, then doubled.  ``N_k`` is the least value
    meeting both repetition inequalities and strict growth.
    """
    u = parse_word(u)
    eta = chain.eta if eta is None else eta
    B = bands
    count = B + 2
    if len(chain.gammas) < count:
        raise ScheduleError(f"chain has {len(chain.gammas)} terms, need {count}")
    if u:
        l0 = family.level_of_word(u)
        if l0 is None:
            raise ScheduleError(f"U cylinder {format_word(u)!r} misses every level (density violated)")
    else:
        l0 = 1
    eps0 = Fraction(1, 2 ** len(u))
    eps = eps_sequence(eps0, count)
    m0 = m_of_eps(eps[0])
    x0 = lex_min_extension(family.level(l0), u, max(m0, len(u)))
    z1 = Fraction(zeta1) if zeta1 is not None else choose_zeta1(chain.H_star, eta)
    zetas = [z1 * ZETA_RATIO ** (k - 1) for k in range(1, count + 1)]
    tail = truncation_bound(family.alphabet_size, 2)
    if zetas[B - 1] <= tail:
        raise ScheduleError(f"zeta_{B} = {zetas[B - 1]} does not exceed the predicate tail {tail}")

    levels, Ls = [], []
    prev = 0
    for k in range(1, count + 1):
        lk = family.level_of_measure(chain.gamma(k))
        L = min(max(lk, k, prev, l0 if k == 1 else 0), family.top)
        levels.append(lk)
        Ls.append(L)
        prev = L
    Ks = []
    for L in Ls:
        K = primitivity_index(family.level(L))
        if K is None:
            raise ScheduleError(f"level {L} is not mixing; route through mixing_route")
        Ks.append(K)
    Ks.append(Ks[-1])

    sched = Schedule([], B, u, eps0, x0, l0, eta, chain.H_star, seed)
    for k in range(1, count + 1):
        m = m_of_eps(eps[k - 1])
        net_level = min(k, family.top)
        nets = list(family.level(net_level).words(m))
        t = len(nets)
        zeta = zetas[k - 1]
        K, Kn = Ks[k - 1], Ks[k]
        nb = min_block_length(t, K, Kn, zeta, m)
        gamma = chain.gamma(k)
        X = family.level(levels[k - 1])
        h = gamma.entropy()
        rate = h - eta
        n = max(nb, m)
        tw = None
        for _ in range(max_doublings):
            tw = typical_words(X, gamma, zeta, n, "sample", budget, seed=_gamma_seed(seed, k, n))
            if tw.meets(rate):
                break
            n *= 2
        else:
            raise BudgetError(f"band {k}: typical set never met e^(n(h-eta)) up to n={n}")
        n_star = n
        n = 2 * n
        tw = typical_words(X, gamma, zeta, n, "sample", budget, seed=_gamma_seed(seed, k, n))
        while not tw.meets(rate):
            n *= 2
            if n > n_star << max_doublings:
                raise BudgetError(f"band {k}: doubled block length lost the typical-set bound")
            tw = typical_words(X, gamma, zeta, n, "sample", budget, seed=_gamma_seed(seed, k, n))
        band = Band(k, eps[k - 1], zeta, m, t, Ls[k - 1], levels[k - 1], net_level, K, nb, n_star, n,
                    gamma_count=tw.exact_count, gamma_log=tw.log_count, gamma_entropy=h)
        sched.bands.append(band)
        sched.gammas[k] = tw
        sched.nets[k] = nets
    _solve_repetitions(sched)
    check_schedule(sched)
    return sched


def _gamma_seed(seed, k, n):
    return [int(seed) & 0xFFFFFFFFFFFFFFFF, 1000 + k, n]


def _a1_lhs(s: Schedule, k: int, literal: bool) -> int:
    b1, b2 = s.band(k + 1), s.band(k + 2)
    K3 = b2.K
    if literal:
        return b1.n + (b1.t - 1) * b1.K + 2 * K3 + b2.n
    return b1.n + (b1.t - 1) * b1.c + b1.m + b1.K + 2 * K3 + b2.n


def _a2_lhs(s: Schedule, k: int, literal: bool) -> int:
    if literal:
        tot = sum(b.N * (b.n + b.K - 1) + b.t * b.K for b in s.bands[:k])
        return tot + s.band(k + 1).K
    # exact end of band k
    tot = s.m0 + s.band(1).K - 1
    for i in range(1, k + 1):
        b, nb = s.band(i), s.band(i + 1)
        tot += b.N * (b.n + b.K - 1) + (b.t - 1) * b.c + b.m + nb.K - 1
    return tot


def _mass(s: Schedule, k: int) -> int:
    return sum(b.N * b.n for b in s.bands[:k])


def _solve_repetitions(s: Schedule):
    prevN = 0
    for k in range(1, s.B + 1):
        b = s.band(k)
        z_k = b.zeta
        base = _mass(s, k - 1)
        need = max(_a1_lhs(s, k, True), _a1_lhs(s, k, False))
        N = max(prevN + 1, 1, math.ceil((Fraction(need) / z_k - base) / b.n))
        if k >= 2:
            need2 = max(_a2_lhs(s, k - 1, True), _a2_lhs(s, k - 1, False))
            N = max(N, math.ceil((Fraction(need2) / z_k - base) / b.n))
        b.N = int(N)
        prevN = b.N


@dataclass
class ScheduleCheck:
    name: str
    k: int
    lhs: object
    rhs: object
    ok: bool


def schedule_checks(s: Schedule) -> list:
    """Every schedule inequality evaluated in exact arithmetic."""
    out = []
    for k in range(1, s.B + 1):
        b, nb = s.band(k), s.band(k + 1)
        lhs = Fraction(b.t * b.K + nb.K, b.n)
        out.append(ScheduleCheck("B", k, lhs, b.zeta, lhs <= b.zeta))
        lhs = Fraction(b.t * b.c + nb.K, b.n)
        out.append(ScheduleCheck("B_gen", k, lhs, b.zeta, lhs <= b.zeta))
        for lit, name in ((True, "A1"), (False, "A1_gen")):
            l, r = _a1_lhs(s, k, lit), b.zeta * _mass(s, k)
            out.append(ScheduleCheck(name, k, l, r, l <= r))
        if k < s.B:
            for lit, name in ((True, "A2"), (False, "A2_gen")):
                l, r = _a2_lhs(s, k, lit), nb.zeta * _mass(s, k + 1)
                out.append(ScheduleCheck(name, k, l, r, l <= r))
        if k >= 2:
            out.append(ScheduleCheck("N_increasing", k, s.band(k - 1).N, b.N, b.N > s.band(k - 1).N))
        out.append(ScheduleCheck("zeta_decreasing", k, nb.zeta, b.zeta, nb.zeta < b.zeta))
        out.append(ScheduleCheck("gamma_bound", k, b.gamma_log, b.n * (b.gamma_entropy - s.eta),
                                 b.gamma_log >= b.n * (b.gamma_entropy - s.eta)))
    z1 = s.band(1).zeta
    slack = s.H_star - s.eta
    out.append(ScheduleCheck("zeta1_slack", 1, 5 * float(z1) * slack, s.eta,
                             slack <= 0 or 5 * float(z1) * slack < s.eta))
    return out


def check_schedule(s: Schedule):
    bad = [c for c in schedule_checks(s) if not c.ok]
    if bad:
        c = bad[0]
        raise ScheduleError(f"inequality {c.name} fails at band {c.k}: {c.lhs} > {c.rhs}")


def checkpoint_ratio_audit(s: Schedule) -> list:
    """``(j, M_j / M_{j-1}, 1 + zeta_{b-1}, ok)`` for checkpoints of bands ``b >= 2``."""
    M = s.checkpoints()
    band = s.band_of_segment()
    out = []
    for j in range(1, len(M)):
        b = int(band[j])
        if b < 2:
            continue
        bound = 1 + s.band(b - 1).zeta
        r = Fraction(int(M[j]), int(M[j - 1]))
        out.append((j, r, bound, r <= bound))
    return out


# ---------------------------------------------------------------------------
# point generation


def scheduled_words(s: Schedule, family: NestedFamily, start_band: int = 1):
    """Yield ``(j, band, kind, q, word)`` for every segment, deterministically."""
    S = s.band_bounds()
    if start_band == 1:
        yield 0, 0, KIND_X0, 0, np.array(s.x0, dtype=np.uint8)
    for k in range(start_band, s.B + 1):
        b = s.band(k)
        tw = s.gammas[k]
        for q in range(1, b.N + 1):
            rng = np.random.default_rng([int(s.seed) & 0xFFFFFFFFFFFFFFFF, k, q])
            yield S[k - 1] + q, k, KIND_BLOCK, q, tw.sample(rng)
        for q, w in enumerate(s.nets[k], start=1):
            yield S[k - 1] + b.N + q, k, KIND_NET, q, np.array(w, dtype=np.uint8)


def _glue_level(s: Schedule, family: NestedFamily, band: int) -> ShiftSystem:
    return family.level(s.band(max(band, 1)).level)


def generate_point(family: NestedFamily, chain: MeasureChain, schedule: Schedule, seed: int | None = None,
                   horizon: int | None = None, stop_band: int | None = None,
                   resume: SymbolStream | None = None) -> SymbolStream:
    """Materialize the constructed point.

    ``horizon`` limits the number of materialized symbols.  ``stop_band``
    stops after that band (the stream then ends with the band's last net
    word) and ``resume`` continues such a partial stream.
    """
    s = schedule
    if seed is not None and seed != s.seed:
        raise ScheduleError("seed differs from the schedule's seed")
    M = s.checkpoints()
    starts = np.concatenate([[0], M[:-1]])
    total = int(M[-1])
    limit = total if horizon is None else min(total, int(horizon))
    stop_band = s.B if stop_band is None else stop_band
    buf = np.zeros(limit, dtype=np.uint8)
    start_band = 1
    pos = 0
    if resume is not None:
        done = int(resume.meta.get("completed_band", 0))
        start_band = done + 1
        pos = len(resume.symbols)
        buf[:min(pos, limit)] = resume.symbols[:limit]
    last = int(buf[pos - 1]) if pos else None
    finished_band = start_band - 1
    for j, k, kind, q, word in scheduled_words(s, family, start_band):
        if k > stop_band:
            break
        a = int(starts[j])
        if a >= limit:
            break
        if pos:
            gap = a - pos + 1
            glue_band = k if kind != KIND_X0 else 1
            c = connector(_glue_level(s, family, glue_band), last, int(word[0]), gap)
            end = min(a, limit)
            buf[pos:end] = np.array(c, dtype=np.uint8)[:end - pos]
        w = word[:limit - a]
        buf[a:a + len(w)] = w
        pos = a + len(w)
        last = int(word[-1])
        if kind == KIND_NET and q == s.band(k).t:
            finished_band = k
        if pos >= limit:
            break
    out = buf[:pos]
    meta = {"seed": s.seed, "completed_band": finished_band, "bands": s.B, "horizon": limit}
    return SymbolStream(out, family.alphabet_size, M, s.band_of_segment(), seed=s.seed, meta=meta)


# ---------------------------------------------------------------------------
# verification


@dataclass
class TrackingRow:
    j: int
    M: int
    band: int
    distance: float
    envelope: float
    window_ok: bool
    passed: bool


def envelopes(s: Schedule, chain: MeasureChain, depth: int = AUDIT_DEPTH) -> dict:
    """Band ``b``: ``9 zeta_{b-1} + 4 eps_{b-1} + d(gamma_{b-1}, gamma_b)``; band 1: ``9 zeta_1 + 4 eps_1``."""
    steps = chain.step_distances(depth)
    out = {1: 9 * float(s.band(1).zeta) + 4 * float(s.band(1).eps)}
    for b in range(2, s.B + 1):
        out[b] = 9 * float(s.band(b - 1).zeta) + 4 * float(s.band(b - 1).eps) + steps[b - 2]
    return out


def verify_windows(stream: SymbolStream, family: NestedFamily, schedule: Schedule,
                   chain: MeasureChain) -> dict:
    """Per-segment check of the scheduled word in ``stream``.

    Blocks must be typical for ``gamma_k`` at radius ``zeta_k`` within the
    support edges; net visits must equal their net word; ``x_0`` must match.
    Returns ``{j: ok}`` for every fully materialized segment.
    """
    s = schedule
    z = stream.symbols
    M = s.checkpoints()
    starts = np.concatenate([[0], M[:-1]])
    band = s.band_of_segment()
    S = s.band_bounds()
    a = family.alphabet_size
    preds = {}
    out = {}
    for j in range(len(M)):
        k = int(band[j])
        st = int(starts[j])
        if j == 0:
            ln = s.m0
            if st + ln > len(z):
                break
            out[j] = tuple(z[:ln].tolist()) == tuple(s.x0)
            continue
        b = s.band(k)
        q = j - S[k - 1]
        if q <= b.N:
            ln = b.n
            if st + ln > len(z):
                break
            w = z[st:st + ln]
            if k not in preds:
                preds[k] = (_Predicate(chain.gamma(k), b.zeta, a),
                            set(support_edges(family.level(b.target_level), chain.gamma(k))))
            pred, edges = preds[k]
            s0, e0, counts = word_class(w, a)
            ends = np.array([e0])
            C = np.zeros((1, a * a), dtype=np.int64)
            for (p, r), c in counts.items():
                C[0, p * a + r] = c
            val = float(pred.values(ln, ends, C)[0])
            ok = all(e in edges for e in counts) and pred.passes(ln, e0, counts, val)
            out[j] = bool(ok)
        else:
            w = s.nets[k][q - b.N - 1]
            if st + len(w) > len(z):
                break
            out[j] = tuple(z[st:st + len(w)].tolist()) == tuple(w)
    return out


def verify_tracking(stream: SymbolStream, chain: MeasureChain, schedule: Schedule,
                    horizon: int | None = None, family: NestedFamily | None = None,
                    depth: int = AUDIT_DEPTH, targets: dict | None = None) -> list:
    """Distance of ``E_{M_j}(z)`` to the stretched target at every checkpoint.

    A checkpoint passes when the truncated distance is within its envelope
    plus the truncation allowance and the block closing at ``M_j`` is a
    valid typical word (when ``family`` is given).
    """
    s = schedule
    z = stream.symbols
    limit = len(z) if horizon is None else min(horizon, len(z))
    M = s.checkpoints()
    band = s.band_of_segment()
    js = [j for j in range(1, len(M)) if M[j] + depth - 1 <= limit]
    a = stream.alphabet_size
    tabs = checkpoint_tables(z, [int(M[j]) for j in js], depth, a)
    env = envelopes(s, chain, depth)
    tail = float(truncation_bound(a, depth))
    windows = verify_windows(stream, family, s, chain) if family is not None else {}
    tgt_tabs = {}
    rows = []
    for j, t in zip(js, tabs):
        k = int(band[j])
        if k not in tgt_tabs:
            g = targets[k] if targets else chain.gamma(k)
            tgt_tabs[k] = [np.asarray(x, dtype=float) for x in g.mass_tables(depth)]
        d = table_distance(t, tgt_tabs[k], a)
        wok = windows.get(j, True)
        rows.append(TrackingRow(j, int(M[j]), k, d, env[k], wok, d <= env[k] + tail and wok))
    return rows


def band_maxima(rows: Sequence[TrackingRow]) -> dict:
    out = {}
    for r in rows:
        out[r.band] = max(out.get(r.band, 0.0), r.distance)
    return out


@dataclass
class TransitivityRow:
    level: int
    length: int
    word: str
    first_hit: int | None
    horizon: int | None
    passed: bool


def band_horizon(s: Schedule, level: int, length: int, top: int) -> int | None:
    """End of the first band whose nets cover ``length``-words of ``level``."""
    for k in range(1, s.B + 1):
        b = s.band(k)
        if min(k, top) >= level and b.m >= length:
            return s.band_end(k)
    return None


def verify_transitivity(stream: SymbolStream, family: NestedFamily, schedule: Schedule,
                        depth: int = 6, horizon: int | None = None) -> list:
    """First occurrence of every admissible word of length <= ``depth`` of every level."""
    z = np.asarray(stream.symbols, dtype=np.int64)
    limit = len(z) if horizon is None else min(horizon, len(z))
    z = z[:limit]
    a = family.alphabet_size
    from .measures import window_codes, word_code
    first = {}
    for l in range(1, depth + 1):
        codes = window_codes(z, l, a)
        uniq, idx = np.unique(codes, return_index=True)
        first[l] = dict(zip(uniq.tolist(), idx.tolist()))
    rows = []
    for n, X in enumerate(family.levels, start=1):
        for l in range(1, depth + 1):
            hz = band_horizon(schedule, n, l, family.top)
            for w in X.words(l):
                hit = first[l].get(word_code(w, a))
                ok = hit is not None and hz is not None and hit + l <= hz
                rows.append(TransitivityRow(n, l, format_word(w), hit, hz, ok))
    return rows


def unreachable_words(stream: SymbolStream, family: NestedFamily, words) -> dict:
    """Words forbidden in every level are never hit (reported as ``None``)."""
    out = {}
    z = np.asarray(stream.symbols, dtype=np.int64)
    from .measures import window_codes, word_code
    for w in words:
        w = parse_word(w)
        codes = window_codes(z, len(w), family.alphabet_size)
        hits = np.flatnonzero(codes == word_code(w, family.alphabet_size))
        out[format_word(w)] = int(hits[0]) if hits.size else None
    return out


@dataclass
class Certificate:
    log_count: float
    rate: float
    floor: float
    M: int
    passed: bool
    pairs_checked: int
    pairs_separated: int
    per_band: list

    def to_json(self):
        return {"log_count": self.log_count, "rate": self.rate, "floor": self.floor, "M": self.M,
                "passed": self.passed, "pairs_checked": self.pairs_checked,
                "pairs_separated": self.pairs_separated, "per_band": self.per_band}


def separated_family_certificate(schedule: Schedule, chain: MeasureChain,
                                 family: NestedFamily | None = None, stream: SymbolStream | None = None,
                                 n_pairs: int = 100, seed: int = 0) -> Certificate:
    """``rate = sum_i N_i log|Gamma_i| / M_{S_B - 1}`` against ``floor = H* - eta``.

    With ``family`` and ``stream``, ``n_pairs`` random members of ``F_B`` are
    built by splicing a different typical word into one block, and the
    pair is checked for separation at scale 1/2 before ``M``.
    """
    s = schedule
    log_count = sum(b.N * b.gamma_log for b in s.bands[:s.B])
    S = s.band_bounds()
    M = s.checkpoints()
    Mend = int(M[S[-1] - 1])
    rate = log_count / Mend
    floor = chain.entropy_floor
    per_band = [{"k": b.k, "N": b.N, "log_gamma": b.gamma_log, "n": b.n} for b in s.bands[:s.B]]
    checked = separated = 0
    if family is not None and stream is not None and n_pairs:
        rng = np.random.default_rng([seed, 99])
        for _ in range(n_pairs):
            checked += 1
            if _spliced_pair_separated(stream, family, s, rng, Mend):
                separated += 1
    passed = rate >= floor and separated == checked
    return Certificate(log_count, rate, floor, Mend, passed, checked, separated, per_band)


def splice_block(stream_symbols: np.ndarray, family: NestedFamily, s: Schedule, j: int,
                 word: np.ndarray) -> tuple:
    """Copy of the local region around segment ``j`` with ``word`` in its window.

    Returns ``(offset, region)`` where ``region`` covers from the connector
    before the block up to the start of segment ``j + 1``; connectors are
    recomputed in the gluing level.
    """
    M = s.checkpoints()
    band = s.band_of_segment()
    k = int(band[j])
    a0 = int(M[j - 1])
    X = _glue_level(s, family, k)
    z = stream_symbols
    left_start = _segment_word_end(s, j - 1)
    right = int(M[j])
    region = z[left_start:right + 1].copy()
    before = int(z[left_start - 1])
    c1 = connector(X, before, int(word[0]), a0 - left_start + 1)
    region[:a0 - left_start] = c1
    region[a0 - left_start:a0 - left_start + len(word)] = word
    nxt = int(z[right]) if right < len(z) else None
    tail_start = a0 + len(word)
    if nxt is not None:
        c2 = connector(X, int(word[-1]), nxt, right - tail_start + 1)
        region[tail_start - left_start:right - left_start] = c2
    return left_start, region[:right - left_start]


def _segment_word_end(s: Schedule, j: int) -> int:
    """Index just after the scheduled word of segment ``j``."""
    M = s.checkpoints()
    start = 0 if j == 0 else int(M[j - 1])
    if j == 0:
        return start + s.m0
    band = s.band_of_segment()
    k = int(band[j])
    q = j - s.band_bounds()[k - 1]
    b = s.band(k)
    return start + (b.n if q <= b.N else b.m)


def _spliced_pair_separated(stream, family, s, rng, Mend) -> bool:
    z = stream.symbols
    M = s.checkpoints()
    S = s.band_bounds()
    choices = [(k, q) for k in range(1, s.B + 1) for q in range(1, s.band(k).N + 1)
               if S[k - 1] + q < len(M) and M[S[k - 1] + q] < len(z)]
    k, q = choices[int(rng.integers(len(choices)))]
    j = S[k - 1] + q
    tw = s.gammas[k]
    w1 = tw.sample(rng)
    w2 = tw.sample(rng)
    while np.array_equal(w1, w2):
        w2 = tw.sample(rng)
    o1, r1 = splice_block(z, family, s, j, w1)
    o2, r2 = splice_block(z, family, s, j, w2)
    diff = np.flatnonzero(r1 != r2)
    return bool(diff.size) and o1 + int(diff[0]) < Mend


# ---------------------------------------------------------------------------
# non-mixing route


@dataclass
class MixingRoute:
    base: NestedFamily
    family: NestedFamily  # power family over the shared block alphabet
    k: int
    i0: int
    decompositions: list
    powers: list
    u_power: tuple

    def expand(self, stream: SymbolStream) -> SymbolStream:
        """Base stream ``f^{i_0}`` of the block expansion."""
        base = self.powers[-1].expand(stream.symbols)[self.i0:]
        meta = dict(stream.meta, k=self.k, i0=self.i0)
        return SymbolStream(base, self.base.alphabet_size, stream.checkpoints * self.k - self.i0,
                            stream.bands, seed=stream.seed, meta=meta)

    def base_target(self, nu: Measure) -> Measure:
        """``(h_*)^{-1} nu = (1/k) sum_i f^i_* nu``."""
        return decomposition_average(nu, self.powers[-1])


def verify_route_tracking(route: MixingRoute, stream: SymbolStream, chain: MeasureChain,
                          schedule: Schedule, depth: int = AUDIT_DEPTH) -> list:
    """Base-level tracking of an expanded power-system run.

    At base time ``k M_j - i_0`` the empirical measure is compared with the
    phase average of ``gamma_b``.  The envelope is the power-level one plus
    ``(2k + depth) / (k M_j)`` for block edges and the ``i_0`` shift.
    """
    s = schedule
    k = route.k
    base = route.expand(stream)
    z = base.symbols
    a = route.base.alphabet_size
    M = s.checkpoints()
    band = s.band_of_segment()
    js = [j for j in range(1, len(M)) if k * int(M[j]) - route.i0 + depth - 1 <= len(z)]
    times = [k * int(M[j]) - route.i0 for j in js]
    tabs = checkpoint_tables(z, times, depth, a)
    env = envelopes(s, chain, depth)
    tail = float(truncation_bound(a, depth))
    windows = verify_windows(stream, route.family, s, chain)
    tgt = {}
    rows = []
    for j, T, t in zip(js, times, tabs):
        b = int(band[j])
        if b not in tgt:
            g = route.base_target(chain.gamma(b))
            tgt[b] = [np.asarray(x, dtype=float) for x in g.mass_tables(depth)]
        d = table_distance(t, tgt[b], a)
        e = env[b] + (2 * k + depth) / (k * int(M[j]))
        wok = windows.get(j, True)
        rows.append(TrackingRow(j, T, b, d, e, wok, d <= e + tail and wok))
    return rows


def mixing_route(family: NestedFamily, u="") -> MixingRoute:
    """Power-restrict every level to its ``D_0`` class for a common ``k``.

    Classes are anchored at the first symbol of a shortest cycle of level 1
    so that ``D_j^l`` nest across levels.
    """
    u = parse_word(u)
    anchor = family.levels[0].active[0]
    decs = [periodic_decomposition(X, anchor) for X in family.levels]
    k = 1
    for d in decs:
        k = k * d.period // math.gcd(k, d.period)
    for l in range(len(decs) - 1):
        lo, hi = decs[l], decs[l + 1]
        for j, cls in enumerate(lo.classes):
            target = set(hi.classes[j % hi.period])
            if not set(cls) <= target:
                raise SystemError_(f"class D_{j} of level {l + 1} is not nested in level {l + 2}")
    top = family.levels[-1]
    if k == 1:
        return MixingRoute(family, family, 1, 0, decs, [power_restrict(X, d, 1) for X, d in zip(family.levels, decs)], u)
    top_power = power_restrict(top, decs[-1], k)
    blocks = top_power.block_alphabet
    powers = [power_restrict(X, d, k, blocks) for X, d in zip(family.levels, decs)]
    pfam = NestedFamily([p.system for p in powers], f"{family.label}^{k}")
    i0 = 0
    u_power = ()
    if u:
        l0 = family.level_of_word(u)
        if l0 is None:
            raise ScheduleError("U cylinder misses every level")
        X = family.levels[l0 - 1]
        i0 = _class_index(decs[-1], u[0], k)
        pre = _path_into(X, decs[-1], u[0], i0)
        w = list(pre) + list(u)
        while len(w) % k:
            w.append(next(s for s in range(X.alphabet_size) if X.transitions[w[-1]][s]))
        u_power = tuple(powers[-1].block_index(tuple(w[i:i + k])) for i in range(0, len(w), k))
    return MixingRoute(family, pfam, k, i0, decs, powers, u_power)


def _class_index(dec: PeriodicDecomposition, symbol: int, k: int) -> int:
    return dec.class_of(symbol)


def _path_into(X: ShiftSystem, dec: PeriodicDecomposition, target: int, length: int) -> tuple:
    """Lexicographically smallest word of ``length`` starting in ``D_0`` and leading into ``target``."""
    if length == 0:
        return ()
    from .shift import _reach_table
    d0 = dec.classes[0]
    T = X.transitions
    for s in sorted(d0):
        if _reach_table(T, length)[s, target]:
            w = [s]
            cur = s
            for r in range(length - 1, 0, -1):
                R = _reach_table(T, r)
                cur = next(x for x in range(X.alphabet_size) if T[cur][x] and R[x, target])
                w.append(cur)
            return tuple(w)
    raise ScheduleError("no path from D_0 into the U cylinder")


def block_measure(mu: Measure, power: PowerSystem) -> Measure:
    """``(h_*) mu`` for a 1-step Markov base measure: block chain with ``pi_b = k mu[b]``."""
    if isinstance(mu, ConvexCombination):
        return ConvexCombination(tuple((w, block_measure(m, power), l) for w, m, l in mu.components),
                                 mu.label)
    k = power.exponent
    blocks = power.block_alphabet
    nb = len(blocks)
    exact = mu.exact
    zero = Fraction(0) if exact else 0.0
    P = np.full((nb, nb), zero, dtype=object if exact else float)
    pi = np.full(nb, zero, dtype=object if exact else float)
    masses = [mu.cylinder_mass(b) for b in blocks]
    for i, b in enumerate(blocks):
        pi[i] = k * masses[i]
        if masses[i] > 0:
            for j, c in enumerate(blocks):
                P[i, j] = mu.cylinder_mass(b + c) / masses[i]
        else:
            P[i, i] = Fraction(1) if exact else 1.0
    return MarkovMeasure(P, pi, None, nb, exact, f"h*({getattr(mu, 'label', '')})")
