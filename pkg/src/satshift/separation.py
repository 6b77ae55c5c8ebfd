"""Word counting, typical-word separated sets and entropy-dense approximation.

Distinct admissible words of length ``n`` are ``(n, 1/2)``-separated under
the cylinder metric, so every set of typical words is a separated set and
its cardinality is an entropy certificate.

Words are grouped into *classes* by (start, end, transition counts).  All
words of a class share their empirical measure up to depth 2, so the
distance predicate is decided per class.  Class sizes come from Whittle's
formula and sampling inside a class is uniform (random last-exit
arborescence plus uniform edge orders).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
import numba
import numpy as np

from .measures import (EmpiricalMeasure, MarkovMeasure, Measure, MeasureError, fraction_det,
                       table_distance, truncation_bound, wstar_distance)
from .shift import ShiftSystem, is_mixing

EPS_STAR = Fraction(1, 2)
PREDICATE_DEPTH = 2
WALK_STEPS = 2 * 10 ** 7


class CertificationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# word counts


def count_words(system: ShiftSystem, n: int) -> int:
    """Exact number of admissible words of length ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    A = [list(r) for r in system.transitions]
    v = [1 if s in system.active else 0 for s in range(system.alphabet_size)]
    for _ in range(n - 1):
        v = [sum(v[i] for i in range(len(v)) if A[i][j]) for j in range(len(v))]
    return sum(v)


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    n: int
    method: str
    error_note: str = ""


def estimate_entropy_word_count(system: ShiftSystem, n: int) -> EntropyEstimate:
    """``(1/n) log #B_n(X)``, the growth rate of maximal ``(n, 1/2)``-separated sets."""
    c = count_words(system, n)
    return EntropyEstimate(_log_int(c) / n, n, "word-count",
                           "converges to h_top from above at rate O(1/n)")


def big_decimal(x: int) -> str:
    """Decimal string of an arbitrarily large integer."""
    return gmpy2.mpz(x).digits(10)


def parse_big(text: str) -> int:
    return int(gmpy2.mpz(text))


def _log_int(x: int) -> float:
    if x <= 0:
        return float("-inf")
    try:
        return math.log(x)
    except OverflowError:
        b = x.bit_length() - 60
        return math.log(x >> b) + b * math.log(2)


# ---------------------------------------------------------------------------
# classes


def support_edges(system: ShiftSystem, target: Measure) -> list:
    """Transitions of ``system`` charged by ``target`` (the word-level ``S_mu``)."""
    a = system.alphabet_size
    if target.alphabet_size != a:
        raise MeasureError("target and system alphabets differ")
    T2 = target.mass_tables(2)[1]
    return [(i, j) for i in range(a) for j in range(a)
            if system.transitions[i][j] and T2[i * a + j] > 0]


def whittle_count(counts: dict, start: int, end: int, alphabet_size: int) -> int:
    """Number of words from ``start`` to ``end`` with the given transition counts.

    ``counts`` maps ``(i, j)`` to the number of ``i -> j`` transitions.
    """
    a = alphabet_size
    F = [[0] * a for _ in range(a)]
    for (i, j), c in counts.items():
        F[i][j] += int(c)
    out = [sum(r) for r in F]
    inn = [sum(F[i][j] for i in range(a)) for j in range(a)]
    for s in range(a):
        if out[s] - inn[s] != (s == start) - (s == end):
            return 0
    if sum(out) == 0:
        return 1 if start == end else 0
    M = [[Fraction(int(i == j)) - (Fraction(F[i][j], out[i]) if out[i] else 0) for j in range(a)]
         for i in range(a)]
    minor = [[M[r][c] for c in range(a) if c != start] for r in range(a) if r != end]
    cof = fraction_det(minor) * (-1) ** (start + end)
    multi = gmpy2.mpz(1)
    for i in range(a):
        left = out[i]
        for j in range(a):
            if F[i][j]:
                multi *= gmpy2.comb(left, F[i][j])
                left -= F[i][j]
    num = multi * cof.numerator
    val, rem = gmpy2.f_divmod(num, cof.denominator)
    if rem or val < 0:
        raise ArithmeticError(f"non-integral class count {num}/{cof.denominator}")
    return int(val)


def sample_class_word(counts: dict, start: int, end: int, alphabet_size: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Uniform random word among those with the given (start, end, counts)."""
    a = alphabet_size
    F = np.zeros((a, a), dtype=np.int64)
    for (i, j), c in counts.items():
        F[i, j] += c
    n_edges = int(F.sum())
    out_deg = F.sum(axis=1)
    # random last-exit arborescence toward `end`, weighted by multiplicities (Wilson)
    in_tree = {end}
    nxt = {}
    for v in range(a):
        if out_deg[v] == 0 or v in in_tree:
            continue
        u = v
        path = {}
        while u not in in_tree:
            path[u] = int(rng.choice(a, p=F[u] / out_deg[u]))
            u = path[u]
        u = v
        while u not in in_tree:
            nxt[u] = path[u]
            in_tree.add(u)
            u = path[u]
    orders = {}
    for v in range(a):
        if out_deg[v] == 0:
            continue
        rest = F[v].copy()
        if v != end:
            rest[nxt[v]] -= 1
        seq = np.repeat(np.arange(a), rest)
        rng.shuffle(seq)
        if v != end:
            seq = np.append(seq, nxt[v])
        orders[v] = seq.tolist()
    word = np.empty(n_edges + 1, dtype=np.uint8)
    word[0] = start
    ptr = dict.fromkeys(orders, 0)
    u = start
    for i in range(1, n_edges + 1):
        prev = u
        u = orders[prev][ptr[prev]]
        ptr[prev] += 1
        word[i] = u
    if u != end:
        raise AssertionError("Euler trail did not end at the class end vertex")
    return word


def word_class(word: Sequence[int], alphabet_size: int):
    w = np.asarray(word, dtype=np.int64)
    a = alphabet_size
    codes = w[:-1] * a + w[1:]
    bc = np.bincount(codes, minlength=a * a)
    counts = {(i // a, i % a): int(c) for i, c in enumerate(bc) if c}
    return int(w[0]), int(w[-1]), counts


@dataclass(frozen=True)
class WordClass:
    start: int
    end: int
    counts: tuple  # ((i, j), c) pairs, sorted
    size: int
    distance: float

    @property
    def count_map(self):
        return dict(self.counts)


def _class_tables(n: int, end: int, counts: dict, a: int):
    """Exact depth-1 and depth-2 empirical tables of any word in the class."""
    t1 = [0] * a
    t2 = [0] * (a * a)
    for (i, j), c in counts.items():
        t1[i] += c
        t2[i * a + j] += c
    t1[end] += 1
    T1 = [Fraction(x, n) for x in t1]
    T2 = [Fraction(x, n - 1) for x in t2] if n > 1 else [Fraction(0)] * (a * a)
    return [T1, T2]


class _Predicate:
    """``value_2 + tail_2 <= zeta`` with a float fast path and an exact fallback."""

    def __init__(self, target: Measure, zeta, a: int):
        self.a = a
        self.zeta = Fraction(zeta) if not isinstance(zeta, float) else zeta
        self.tail = truncation_bound(a, PREDICATE_DEPTH)
        self.exact_target = target.exact
        self.T = target.mass_tables(PREDICATE_DEPTH)
        self.Tf = [np.asarray(t, dtype=float) for t in self.T]
        k1 = np.arange(1, a + 1)
        k2 = np.arange(a + 1, a + a * a + 1)
        self.w1 = np.ldexp(1.0, -k1)
        self.w2 = np.ldexp(1.0, -k2)
        self.limit = float(self.zeta) - float(self.tail)

    def values(self, n: int, ends: np.ndarray, C: np.ndarray) -> np.ndarray:
        """Float distances for classes (ends, flattened a*a count matrices)."""
        a = self.a
        t1 = C.reshape(-1, a, a).sum(axis=2).astype(float)
        t1[np.arange(len(ends)), ends] += 1
        m1 = t1 / n
        m2 = C / (n - 1) if n > 1 else np.zeros_like(C, dtype=float)
        return np.abs(m1 - self.Tf[0]) @ self.w1 + np.abs(m2 - self.Tf[1]) @ self.w2

    def passes(self, n, end, counts, fval) -> bool:
        if abs(fval - self.limit) > 1e-9:
            return fval <= self.limit
        tabs = _class_tables(n, end, counts, self.a)
        if self.exact_target and isinstance(self.zeta, Fraction):
            val = table_distance(tabs, self.T, self.a, exact=True)
            return val + self.tail <= self.zeta
        return fval <= self.limit


# ---------------------------------------------------------------------------
# typical words


@dataclass
class TypicalWordSet:
    """Typical words of length ``n``: ``E_n(w)`` within ``zeta`` of the target."""

    system: ShiftSystem
    target: Measure
    zeta: object
    n: int
    mode: str
    classes: list
    exact_count: int
    words: list = field(default_factory=list)
    certified: bool = True
    exhaustive: bool = True

    @property
    def log_count(self) -> float:
        return _log_int(self.exact_count)

    def class_weights(self) -> np.ndarray:
        logs = np.array([_log_int(c.size) for c in self.classes])
        w = np.exp(logs - logs.max())
        return w / w.sum()

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform draw from the certified set."""
        if not self.classes:
            raise CertificationError("empty typical set")
        idx = int(rng.choice(len(self.classes), p=self.class_weights()))
        c = self.classes[idx]
        return sample_class_word(c.count_map, c.start, c.end, self.system.alphabet_size, rng)

    def meets(self, rate) -> bool:
        """``|Gamma_n| >= exp(n * rate)``."""
        return self.exact_count > 0 and self.log_count >= self.n * float(rate)


def typical_class_counts(system: ShiftSystem, target: Measure, zeta, n_max: int,
                         n_min: int = 1) -> dict:
    """Exact typical-word counts for every ``n`` in ``[n_min, n_max]`` in one DP pass.

    The state is (current symbol, transition-count vector); returns
    ``{n: (count, classes)}``.
    """
    a = system.alphabet_size
    edges = support_edges(system, target)
    T1 = target.mass_tables(1)[0]
    starts = [s for s in system.active if T1[s] > 0]
    pred = _Predicate(target, zeta, a)
    radix = n_max + 1
    eidx = {e: k for k, e in enumerate(edges)}
    out_edges = {s: [(j, radix ** eidx[(s, j)]) for (i, j) in edges if i == s] for s in range(a)}
    # state key -> (first symbol set irrelevant) count; key = code*a + cur, first stored separately
    layer = {}
    for s in starts:
        layer[(s, s, 0)] = 1
    result = {}
    for n in range(1, n_max + 1):
        if n >= n_min:
            result[n] = _evaluate_layer(layer, n, edges, radix, a, pred)
        if n == n_max:
            break
        new = {}
        for (first, cur, code), c in layer.items():
            for j, inc in out_edges[cur]:
                key = (first, j, code + inc)
                new[key] = new.get(key, 0) + c
        layer = new
    return result


def _decode(code: int, E: int, radix: int) -> list:
    out = []
    for _ in range(E):
        code, r = divmod(code, radix)
        out.append(r)
    return out


def _evaluate_layer(layer, n, edges, radix, a, pred):
    keys = list(layer)
    if not keys:
        return 0, []
    E = len(edges)
    C = np.zeros((len(keys), a * a), dtype=np.int64)
    ends = np.empty(len(keys), dtype=np.int64)
    for r, (first, cur, code) in enumerate(keys):
        ends[r] = cur
        for k, c in enumerate(_decode(code, E, radix)):
            if c:
                i, j = edges[k]
                C[r, i * a + j] = c
    vals = pred.values(n, ends, C)
    total = 0
    classes = []
    for r, key in enumerate(keys):
        first, cur, code = key
        counts = {edges[k]: c for k, c in enumerate(_decode(code, E, radix)) if c}
        if pred.passes(n, cur, counts, float(vals[r])):
            size = layer[key]
            total += size
            classes.append(WordClass(first, cur, tuple(sorted(counts.items())), size, float(vals[r])))
    return total, classes


def typical_words(system: ShiftSystem, target: Measure, zeta, n: int, mode: str = "enumerate",
                  budget: int = 4096, seed: int = 0, store_words: int = 0) -> TypicalWordSet:
    """Typical words of length ``n`` for ``target`` at radius ``zeta``.

    ``enumerate`` is exact (DP over count vectors).  ``sample`` collects the
    classes of ``budget`` words drawn from the depth-2 Markovization of the
    target and counts them exactly; its count is a certified lower bound.
    ``store_words`` materializes up to that many words (all of them when the
    set is small enough, otherwise uniform samples).
    """
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    rng = np.random.default_rng(seed)
    if mode == "enumerate":
        count, classes = typical_class_counts(system, target, zeta, n, n_min=n)[n]
        tw = TypicalWordSet(system, target, zeta, n, mode, classes, count)
    elif mode == "sample":
        tw = _sample_mode(system, target, zeta, n, budget, rng)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if store_words:
        if tw.exhaustive and tw.exact_count <= store_words:
            keys = {(c.start, c.end, c.counts) for c in tw.classes}
            for w in system.words(n):
                s, e, cm = word_class(w, system.alphabet_size)
                if (s, e, tuple(sorted(cm.items()))) in keys:
                    tw.words.append(w)
        else:
            tw.words = [tuple(tw.sample(rng).tolist()) for _ in range(store_words)]
    return tw


def markovization(target: Measure, edges=None) -> MarkovMeasure:
    """Depth-2 Markov measure with the target's pair frequencies."""
    a = target.alphabet_size
    T2 = np.asarray(target.mass_tables(2)[1], dtype=float).reshape(a, a)
    row = T2.sum(axis=1)
    P = np.zeros((a, a))
    for i in range(a):
        if row[i] > 0:
            P[i] = T2[i] / row[i]
        else:
            P[i, i] = 1.0
    return MarkovMeasure(P, row / row.sum(), None, a, False, "markovization")


@numba.njit(cache=True)
def _walk_counts(cum, start, u, a):
    C = np.zeros(a * a, np.int64)
    cur = start
    for x in u:
        nxt = 0
        while nxt < a - 1 and x >= cum[cur, nxt]:
            nxt += 1
        C[cur * a + nxt] += 1
        cur = nxt
    return C, cur


def _sample_mode(system, target, zeta, n, budget, rng):
    a = system.alphabet_size
    edges = set(support_edges(system, target))
    chain = markovization(target)
    pred = _Predicate(target, zeta, a)
    P = np.asarray(chain.P)
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    pi = np.asarray(chain.pi, dtype=float)
    seen = {}
    # a handful of classes already certifies long words; keep total work bounded
    walks = max(8, min(budget, WALK_STEPS // max(n, 1)))
    for _ in range(walks):
        first = int(rng.choice(a, p=pi))
        C, last = _walk_counts(cum, first, rng.random(n - 1), a)
        key = (first, int(last), tuple(C.tolist()))
        if key not in seen:
            seen[key] = None
    keys = list(seen)
    ends = np.array([k[1] for k in keys], dtype=np.int64)
    Cm = np.array([k[2] for k in keys], dtype=np.int64).reshape(len(keys), a * a)
    vals = pred.values(n, ends, Cm)
    classes = []
    total = 0
    for r, (s, e, flat) in enumerate(keys):
        counts = {(i // a, i % a): c for i, c in enumerate(flat) if c}
        if any(k not in edges for k in counts):
            continue
        if not pred.passes(n, e, counts, float(vals[r])):
            continue
        size = whittle_count(counts, s, e, a)
        if size:
            classes.append(WordClass(s, e, tuple(sorted(counts.items())), size, float(vals[r])))
            total += size
    classes.sort(key=lambda c: (c.distance, c.start, c.end, c.counts))
    return TypicalWordSet(system, target, zeta, n, "sample", classes, total,
                          certified=bool(classes), exhaustive=False)


def brute_force_typical_count(system: ShiftSystem, target: Measure, zeta, n: int) -> int:
    """Reference filter over all admissible words (small ``n`` only)."""
    a = system.alphabet_size
    edges = set(support_edges(system, target))
    T1 = target.mass_tables(1)[0]
    tail = truncation_bound(a, PREDICATE_DEPTH)
    verdict = {}  # the predicate only sees the depth-2 window counts
    total = 0
    for w in system.words(n):
        if not T1[w[0]] > 0 or any((x, y) not in edges for x, y in zip(w, w[1:])):
            continue
        key = (tuple(sorted(Counter(w).items())), tuple(sorted(Counter(zip(w, w[1:])).items())))
        if key not in verdict:
            e = EmpiricalMeasure.of_word(w, a)
            val, _ = wstar_distance(e, target, PREDICATE_DEPTH)
            verdict[key] = val + tail <= zeta
        total += verdict[key]
    return total


# ---------------------------------------------------------------------------
# certification


@dataclass
class SeparationReport:
    zeta: object
    eta: float
    entropy: float
    n_star: int | None
    ns: list
    counts: list
    margins: list

    def to_json(self):
        return {"zeta": str(self.zeta), "eta": self.eta, "entropy": self.entropy,
                "n_star": self.n_star, "n": self.ns, "counts": [big_decimal(c) for c in self.counts],
                "margin": self.margins}


def certify_uniform_separation(system: ShiftSystem, measure: Measure, zeta_sequence,
                               eta: float, n_max: int = 64) -> list:
    """For each ``zeta`` find ``n*`` with ``|Gamma_n| >= e^{n(h - eta)}`` on ``[n*, n_max]``.

    ``margin_n = log|Gamma_n| - n(h - eta)``.  ``n_star`` is ``None`` when the
    bound fails at ``n_max``.
    """
    h = measure.entropy()
    reports = []
    for zeta in zeta_sequence:
        table = typical_class_counts(system, measure, zeta, n_max)
        ns = sorted(table)
        counts = [table[n][0] for n in ns]
        margins = [_log_int(c) - n * (h - eta) if c else float("-inf") for n, c in zip(ns, counts)]
        n_star = None
        for n, mg in zip(reversed(ns), reversed(margins)):
            if mg >= 0:
                n_star = n
            else:
                break
        reports.append(SeparationReport(zeta, eta, h, n_star, ns, counts, margins))
    return reports


# ---------------------------------------------------------------------------
# entropy-dense approximation


@dataclass
class DenseApproximation:
    measure: MarkovMeasure
    distance: float
    distance_bound: float
    entropy: float
    target_entropy: float
    block_length: int
    mixing_weight: float
    ok: bool


def higher_block_chain(mu: Measure, L: int, label: str = "") -> MarkovMeasure:
    """``(L-1)``-step Markov measure agreeing with ``mu`` on cylinders of length <= ``L``."""
    a = mu.alphabet_size
    if L < 2:
        raise ValueError("block length must be >= 2")
    tabs = mu.mass_tables(L)
    Tm = np.asarray(tabs[L - 2], dtype=float)
    TL = np.asarray(tabs[L - 1], dtype=float)
    states = [c for c in range(a ** (L - 1)) if Tm[c] > 1e-300]
    index = {c: i for i, c in enumerate(states)}
    S = len(states)
    P = np.zeros((S, S))
    mod = a ** (L - 2)
    for i, c in enumerate(states):
        for s in range(a):
            m = TL[c * a + s]
            if m > 0:
                nxt = (c % mod) * a + s
                P[i, index[nxt]] = m / Tm[c]
    P /= P.sum(axis=1, keepdims=True)
    pi = Tm[states] / Tm[states].sum()
    emit = tuple(c // mod for c in states)
    return MarkovMeasure(P, pi, emit, a, False, label or f"block{L}")


def entropy_dense_approx(target: Measure, level: ShiftSystem, zeta: float, eta: float,
                         max_block: int = 6) -> DenseApproximation:
    """Ergodic Markov ``nu`` with ``d(nu, target) < zeta`` and ``h_nu > h_target - eta``.

    ``nu`` is the higher-block Markovization of ``(1-s) target + s Parry(level)``;
    the Parry admixture makes it irreducible, the block length controls the
    distance.  Both bounds are checked directly.
    """
    if not is_mixing(level):
        raise MeasureError("entropy-dense approximation needs a mixing level")
    h_t = target.entropy()
    if isinstance(target, MarkovMeasure) and target.is_stationary() and target.is_irreducible():
        return DenseApproximation(target, 0.0, 0.0, h_t, h_t, 0, 0.0, True)
    from .measures import mix
    parry = MarkovMeasure.parry(level)
    a = level.alphabet_size
    best = None
    for L in range(2, max_block + 1):
        tail = float(truncation_bound(a, L))
        if tail >= zeta:
            continue
        for s in (0.5, 0.25, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001):
            mu_s = mix((Fraction(1) - Fraction(s), target), (Fraction(s), parry))
            nu = higher_block_chain(mu_s, L, f"dense(L={L},s={s})")
            if not nu.is_irreducible():
                continue
            val, _ = wstar_distance(nu, target, L)
            bound = float(val) + tail
            h = nu.entropy()
            ok = bound < zeta and h > h_t - eta
            cand = DenseApproximation(nu, float(val), bound, h, h_t, L, s, ok)
            if ok:
                return cand
            if best is None or bound < best.distance_bound:
                best = cand
    if best is None:
        raise MeasureError("no admissible block length for the requested zeta")
    return best
