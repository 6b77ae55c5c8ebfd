"""Invariant measures on shift spaces and the weak* metric.

Every finitely parameterized measure is a :class:`MarkovMeasure`: a
finite-state chain ``(P, pi)`` with an emission map ``state -> symbol``.
With the identity emission this is an ordinary Markov measure; with a
cyclic deterministic ``P`` it is a periodic orbit; higher-block chains and
decomposition lifts use non-trivial emissions.  Arithmetic is exact
(:class:`fractions.Fraction`) whenever all inputs are rational.

The weak* metric uses the canonical family of cylinder indicators ordered
by (length, lexicographic) with weights ``2**-k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numba
import numpy as np

from .shift import PowerSystem, ShiftSystem, format_word, parse_word

STATIONARY_TOL = 1e-12


class MeasureError(ValueError):
    pass


def _as_fraction(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError


def _to_array(values, exact: bool) -> np.ndarray:
    if exact:
        return np.vectorize(_as_fraction, otypes=[object])(np.array(values, dtype=object))
    return np.asarray(values, dtype=float)


def _all_rational(values) -> bool:
    flat = np.asarray(values, dtype=object).ravel()
    return all(isinstance(x, (Fraction, int, np.integer, str)) and not isinstance(x, bool) for x in flat)


def _plogp(p) -> float:
    p = float(p)
    return p * math.log(p) if p > 0 else 0.0


# ---------------------------------------------------------------------------
# measure protocol


class Measure:
    """Common interface: depth-wise cylinder mass tables."""

    alphabet_size: int
    exact: bool

    def mass_tables(self, depth: int) -> list:
        """``[T_1, ..., T_depth]``; ``T_l[code]`` is the mass of the length-``l`` word
        whose base-``a`` code is ``code`` (first symbol most significant)."""
        raise NotImplementedError

    def cylinder_mass(self, word) -> object:
        word = parse_word(word)
        if not word:
            return Fraction(1) if self.exact else 1.0
        if any(not 0 <= s < self.alphabet_size for s in word):
            return Fraction(0) if self.exact else 0.0
        return self._mass_of(word)

    def _mass_of(self, word):
        T = self.mass_tables(len(word))[-1]
        return T[word_code(word, self.alphabet_size)]

    def pushforward(self) -> "Measure":
        raise NotImplementedError

    def entropy(self) -> float:
        raise MeasureError(f"entropy is not defined in closed form for {type(self).__name__}")


def word_code(word: Sequence[int], a: int) -> int:
    c = 0
    for s in word:
        c = c * a + int(s)
    return c


def code_word(code: int, length: int, a: int) -> tuple:
    out = []
    for _ in range(length):
        code, r = divmod(code, a)
        out.append(r)
    return tuple(reversed(out))


# ---------------------------------------------------------------------------
# Markov measures


@dataclass(frozen=True, eq=False)
class MarkovMeasure(Measure):
    """Finite-state chain with emissions.

    Parameters
    ----------
    P : row-stochastic matrix over states.
    pi : initial distribution; stationary for invariant measures.
    emit : symbol emitted by each state (default: identity).
    alphabet_size : size of the emitted alphabet.
    """

    P: np.ndarray
    pi: np.ndarray
    emit: tuple | None = None
    alphabet_size: int = 0
    exact: bool = False
    label: str = ""

    def __post_init__(self):
        n = len(self.pi)
        emit = tuple(range(n)) if self.emit is None else tuple(int(e) for e in self.emit)
        a = self.alphabet_size or (max(emit) + 1)
        object.__setattr__(self, "emit", emit)
        object.__setattr__(self, "alphabet_size", int(a))
        P, pi = self.P, self.pi
        if np.shape(P) != (n, n):
            raise MeasureError(f"P must be {n}x{n}")
        zero, one = (Fraction(0), Fraction(1)) if self.exact else (0.0, 1.0)
        for i in range(n):
            row = P[i]
            if any(x < zero for x in row):
                raise MeasureError(f"negative entry in row {i} of P")
            s = sum(row)
            if (s != one) if self.exact else abs(s - 1.0) > 1e-9:
                raise MeasureError(f"row {i} of P is not stochastic (sums to {s})")
        if any(x < zero for x in pi):
            raise MeasureError("negative entry in initial vector")
        s = sum(pi)
        if (s != one) if self.exact else abs(s - 1.0) > 1e-9:
            raise MeasureError(f"initial vector sums to {s}, not 1")

    # -- constructors ------------------------------------------------------
    @classmethod
    def build(cls, P, pi=None, emit=None, alphabet_size=0, exact=None, label="") -> "MarkovMeasure":
        """Build from nested lists; rational inputs give an exact measure.

        ``pi=None`` solves for the stationary vector.
        """
        if exact is None:
            exact = _all_rational(P) and (pi is None or _all_rational(pi))
        Pa = _to_array(P, exact)
        if pi is None:
            pia = stationary_vector(Pa, exact)
        else:
            pia = _to_array(pi, exact)
        return cls(Pa, pia, emit, alphabet_size, exact, label)

    @classmethod
    def bernoulli(cls, probs, label="") -> "MarkovMeasure":
        probs = list(probs)
        if len(probs) < 2:
            raise MeasureError("a Bernoulli measure needs at least two symbols")
        exact = _all_rational(probs)
        p = _to_array(probs, exact)
        P = np.array([list(p) for _ in probs], dtype=object if exact else float)
        return cls(P, p.copy(), None, len(probs), exact, label or f"Bernoulli({', '.join(map(str, probs))})")

    @classmethod
    def bernoulli_p(cls, p) -> "MarkovMeasure":
        """Binary Bernoulli with ``P(1) = p``."""
        return cls.bernoulli([1 - p, p], label=f"B({p})")

    @classmethod
    def periodic_orbit(cls, word, alphabet_size=None, point=False, label="") -> "MarkovMeasure":
        """Equidistribution on the orbit of ``word^inf`` (``point=True``: the point mass at it)."""
        word = parse_word(word)
        p = len(word)
        P = np.array([[Fraction(int(j == (i + 1) % p)) for j in range(p)] for i in range(p)], dtype=object)
        if point:
            pi = np.array([Fraction(int(i == 0)) for i in range(p)], dtype=object)
        else:
            pi = np.array([Fraction(1, p)] * p, dtype=object)
        a = alphabet_size or max(word) + 1
        return cls(P, pi, word, a, True, label or f"orbit({format_word(word)})")

    @classmethod
    def parry(cls, system: ShiftSystem, label="") -> "MarkovMeasure":
        """Measure of maximal entropy from the Perron eigenpair (active symbols only)."""
        act = list(system.active)
        A = system.matrix[np.ix_(act, act)].astype(float)
        w, vr = np.linalg.eig(A)
        i = int(np.argmax(w.real))
        lam = w[i].real
        r = np.abs(vr[:, i].real)
        wl, vl = np.linalg.eig(A.T)
        l = np.abs(vl[:, int(np.argmax(wl.real))].real)
        a = system.alphabet_size
        P = np.zeros((a, a))
        for ii, s in enumerate(act):
            for jj, t in enumerate(act):
                if A[ii, jj]:
                    P[s, t] = r[jj] / (lam * r[ii])
        P[act] /= P[act].sum(axis=1, keepdims=True)
        pi = np.zeros(a)
        pi[act] = l * r / np.dot(l, r)
        # inactive symbols: self-loop with zero initial mass keeps P stochastic
        for s in range(a):
            if s not in act:
                P[s, s] = 1.0
        return cls(P, pi, None, a, False, label or f"Parry({system.label})")

    # -- structure ---------------------------------------------------------
    @property
    def n_states(self) -> int:
        return len(self.pi)

    @cached_property
    def _emit_masks(self) -> list:
        e = np.array(self.emit)
        return [(e == s) for s in range(self.alphabet_size)]

    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    def is_stationary(self) -> bool:
        piP = self.pi @ self.P
        if self.exact:
            return all(x == y for x, y in zip(piP, self.pi))
        return float(np.max(np.abs(piP - self.pi))) < STATIONARY_TOL * 10

    def is_irreducible(self) -> bool:
        """Strong connectivity of the positive-transition graph on the states carrying mass."""
        pos = np.array([[x > 0 for x in row] for row in self.P], dtype=bool)
        live = [i for i in range(self.n_states) if self.pi[i] > 0]
        if not live:
            return False
        from .shift import _reach
        start = live[0]
        fwd = _reach(pos.astype(np.int64), start)
        back = _reach(pos.T.astype(np.int64), start)
        return fwd == back and set(live) <= fwd

    def to_float(self) -> "MarkovMeasure":
        if not self.exact:
            return self
        return MarkovMeasure(self.P.astype(float), self.pi.astype(float), self.emit,
                             self.alphabet_size, False, self.label)

    # -- evaluation --------------------------------------------------------
    def forward_tables(self, depth: int) -> list:
        """``F_l`` of shape (a**l, states): forward vectors of every length-``l`` word."""
        a = self.alphabet_size
        masks = self._emit_masks
        dtype = object if self.exact else float
        zero = self._zero()
        F = np.empty((a, self.n_states), dtype=dtype)
        for s in range(a):
            F[s] = np.where(masks[s], self.pi, zero)
        out = [F]
        for _ in range(depth - 1):
            G = F @ self.P
            Fn = np.empty((G.shape[0] * a, self.n_states), dtype=dtype)
            for s in range(a):
                Fn[s::a] = np.where(masks[s][None, :], G, zero)
            F = Fn
            out.append(F)
        return out

    def mass_tables(self, depth: int) -> list:
        return [F.sum(axis=1) for F in self.forward_tables(depth)]

    def _mass_of(self, word):
        masks = self._emit_masks
        zero = self._zero()
        v = np.where(masks[word[0]], self.pi, zero)
        for s in word[1:]:
            v = np.where(masks[s], v @ self.P, zero)
        return v.sum()

    def pushforward(self) -> "MarkovMeasure":
        return MarkovMeasure(self.P, self.pi @ self.P, self.emit, self.alphabet_size,
                             self.exact, f"f*{self.label}")

    def entropy(self) -> float:
        """``-sum_i pi_i sum_j P_ij log P_ij`` (nats).

        Equals the entropy of the emitted process whenever the emission is
        bounded-to-one on paths, which holds for every chain built here.
        """
        if not self.is_stationary():
            raise MeasureError("entropy requires a stationary initial vector")
        h = 0.0
        for i in range(self.n_states):
            if self.pi[i] > 0:
                h -= float(self.pi[i]) * sum(_plogp(p) for p in self.P[i])
        return max(h, 0.0)

    def sample(self, n: int, rng: np.random.Generator, start_state: int | None = None) -> np.ndarray:
        """Sample the first ``n`` emitted symbols of a chain path."""
        P = np.asarray(self.P, dtype=float)
        cum = np.cumsum(P, axis=1)
        cum[:, -1] = 1.0
        u = rng.random(n)
        states = np.empty(n, dtype=np.int64)
        if start_state is None:
            c0 = np.cumsum(np.asarray(self.pi, dtype=float))
            c0[-1] = 1.0
            s = int(np.searchsorted(c0, u[0], side="right"))
        else:
            s = start_state
        states[0] = s
        _walk(cum, u, states)
        return np.array(self.emit, dtype=np.uint8)[states]

    def support_system(self, base: ShiftSystem | None = None) -> ShiftSystem:
        """Symbol-level transitions carrying positive mass."""
        T = self.mass_tables(2)[1]
        a = self.alphabet_size
        A = np.array([[1 if T[i * a + j] > 0 else 0 for j in range(a)] for i in range(a)])
        return ShiftSystem.from_matrix(A, f"supp({self.label})")

    def to_json(self) -> dict:
        conv = (lambda x: str(x)) if self.exact else float
        d = {"type": "markov", "label": self.label,
             "P": [[conv(x) for x in row] for row in self.P],
             "pi": [conv(x) for x in self.pi]}
        if self.emit != tuple(range(self.n_states)):
            d["emit"] = list(self.emit)
            d["alphabet_size"] = self.alphabet_size
        return d


@numba.njit(cache=True)
def _walk(cum, u, states):
    s = states[0]
    for i in range(1, len(u)):
        s = np.searchsorted(cum[s], u[i], side="right")
        states[i] = s


def stationary_vector(P: np.ndarray, exact: bool) -> np.ndarray:
    """Stationary vector of an irreducible stochastic matrix by linear solve."""
    n = P.shape[0]
    if exact:
        # solve pi (P - I) = 0, sum pi = 1 by Fraction Gaussian elimination
        M = [[P[j][i] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
        M[-1] = [Fraction(1)] * n
        b = [Fraction(0)] * (n - 1) + [Fraction(1)]
        x = solve_fraction(M, b)
        return np.array(x, dtype=object)
    M = (P - np.eye(n)).T.copy()
    M[-1] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    x = np.linalg.solve(M, b)
    x = np.where(np.abs(x) < 1e-15, 0.0, x)
    if np.max(np.abs(x @ P - x)) > STATIONARY_TOL:
        raise MeasureError("stationary residual exceeds tolerance")
    return x


def solve_fraction(M, b) -> list:
    n = len(M)
    A = [list(map(Fraction, row)) + [Fraction(bb)] for row, bb in zip(M, b)]
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            raise MeasureError("singular system (chain not irreducible?)")
        A[c], A[p] = A[p], A[c]
        piv = A[c][c]
        A[c] = [x / piv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [A[i][n] for i in range(n)]


def fraction_det(M) -> Fraction:
    A = [list(map(Fraction, row)) for row in M]
    n = len(A)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        piv = A[c][c]
        det *= piv
        for r in range(c + 1, n):
            if A[r][c] != 0:
                f = A[r][c] / piv
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return det


def bernoulli(*probs) -> MarkovMeasure:
    return MarkovMeasure.bernoulli(probs)


def parry_measure(system: ShiftSystem) -> MarkovMeasure:
    return MarkovMeasure.parry(system)


# ---------------------------------------------------------------------------
# convex combinations


@dataclass(frozen=True, eq=False)
class ConvexCombination(Measure):
    """``sum_i tau_i mu_i`` with each component tagged by its level (0 = untagged)."""

    components: tuple  # of (weight, measure, level)
    label: str = ""

    def __post_init__(self):
        comps = []
        for c in self.components:
            w, m, lvl = (c + (0,))[:3] if len(c) == 2 else c
            comps.append((w, m, int(lvl)))
        if not comps:
            raise MeasureError("empty convex combination")
        if any(w <= 0 for w, _, _ in comps):
            raise MeasureError("weights must be positive")
        total = sum(w for w, _, _ in comps)
        exact = all(isinstance(w, (Fraction, int)) for w, _, _ in comps)
        if (total != 1) if exact else abs(float(total) - 1) > 1e-9:
            raise MeasureError(f"weights sum to {total}, not 1")
        sizes = {m.alphabet_size for _, m, _ in comps}
        if len(sizes) != 1:
            raise MeasureError("components live on different alphabets")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def alphabet_size(self):
        return self.components[0][1].alphabet_size

    @property
    def exact(self):
        return all(isinstance(w, (Fraction, int)) and m.exact for w, m, _ in self.components)

    def mass_tables(self, depth):
        out = None
        for w, m, _ in self.components:
            tabs = m.mass_tables(depth)
            if not self.exact:
                w = float(w)
                tabs = [np.asarray(t, dtype=float) for t in tabs]
            out = [w * t for t in tabs] if out is None else [o + w * t for o, t in zip(out, tabs)]
        return out

    def _mass_of(self, word):
        total = sum((w if self.exact else float(w)) * m._mass_of(word) for w, m, _ in self.components)
        return total

    def entropy(self):
        return sum(float(w) * m.entropy() for w, m, _ in self.components)

    def pushforward(self):
        return ConvexCombination(tuple((w, m.pushforward(), l) for w, m, l in self.components),
                                 f"f*{self.label}")

    @property
    def levels(self):
        return tuple(l for _, _, l in self.components)

    def to_json(self):
        return {"type": "convex", "label": self.label,
                "components": [{"weight": str(w) if isinstance(w, Fraction) else w,
                                "level": l, "measure": m.to_json()} for w, m, l in self.components]}


def mix(*pairs, label="") -> ConvexCombination:
    """``mix((w1, mu1), (w2, mu2), ...)``; nested combinations are flattened."""
    comps = []
    for item in pairs:
        w, m = item[0], item[1]
        lvl = item[2] if len(item) > 2 else 0
        if isinstance(m, ConvexCombination):
            comps.extend((w * w2, m2, l2 or lvl) for w2, m2, l2 in m.components)
        else:
            comps.append((w, m, lvl))
    return ConvexCombination(tuple(comps), label)


def as_combination(m: Measure, level: int = 0) -> ConvexCombination:
    if isinstance(m, ConvexCombination):
        return m
    return ConvexCombination(((Fraction(1), m, level),), getattr(m, "label", ""))


def combine(t, mu: Measure, nu: Measure) -> Measure:
    """``t*mu + (1-t)*nu`` with the endpoints returned unchanged at ``t in {0, 1}``."""
    if t == 1:
        return mu
    if t == 0:
        return nu
    return mix((t, mu), (1 - t, nu))


# ---------------------------------------------------------------------------
# empirical measures


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure(Measure):
    """Empirical measure of a finite word or of a stream prefix.

    ``convention="truncated"``: a length-``n`` word, depth-``l`` masses are
    counts over the ``n-l+1`` complete windows.  ``convention="orbit"``:
    ``E_n(z)`` of an infinite stream ``z`` whose known prefix extends at
    least ``depth-1`` symbols past ``n``; every window starts at ``i < n``.
    """

    word: np.ndarray
    n: int
    alphabet_size: int
    convention: str = "truncated"
    exact: bool = True

    @classmethod
    def of_word(cls, word, alphabet_size=None):
        w = np.asarray(parse_word(word) if isinstance(word, str) else word, dtype=np.int64)
        return cls(w, len(w), alphabet_size or int(w.max()) + 1 if len(w) else 2)

    @classmethod
    def of_stream(cls, stream, n, alphabet_size):
        return cls(np.asarray(stream)[: n + 64], n, alphabet_size, "orbit")

    def _windows(self, l):
        if self.convention == "truncated":
            return self.word, self.n - l + 1
        if len(self.word) < self.n + l - 1:
            raise MeasureError(f"stream prefix too short for depth {l} at n={self.n}")
        return self.word[: self.n + l - 1], self.n

    def counts(self, l) -> np.ndarray:
        w, nwin = self._windows(l)
        a = self.alphabet_size
        if nwin <= 0:
            return np.zeros(a ** l, dtype=np.int64)
        codes = window_codes(w[: nwin + l - 1], l, a)
        return np.bincount(codes, minlength=a ** l)

    def mass_tables(self, depth):
        out = []
        for l in range(1, depth + 1):
            c = self.counts(l)
            nwin = self._windows(l)[1]
            if nwin <= 0:
                out.append(np.array([Fraction(0)] * len(c), dtype=object))
            elif self.exact:
                out.append(np.array([Fraction(int(x), nwin) for x in c], dtype=object))
            else:
                out.append(c / nwin)
        return out

    def pushforward(self):
        if self.convention == "truncated":
            return EmpiricalMeasure(self.word[1:], self.n - 1, self.alphabet_size)
        return EmpiricalMeasure(self.word[1:], self.n, self.alphabet_size, "orbit", self.exact)


def window_codes(word: np.ndarray, l: int, a: int) -> np.ndarray:
    """Base-``a`` codes of all length-``l`` windows of ``word``."""
    w = np.asarray(word, dtype=np.int64)
    m = len(w) - l + 1
    if m <= 0:
        return np.zeros(0, dtype=np.int64)
    codes = np.zeros(m, dtype=np.int64)
    for j in range(l):
        codes = codes * a + w[j:j + m]
    return codes


def checkpoint_tables(stream: np.ndarray, checkpoints: Sequence[int], depth: int, a: int) -> list:
    """Float mass tables of ``E_M(z)`` (orbit convention) for increasing checkpoints ``M``.

    Counts are accumulated incrementally, so the cost is linear in the
    largest checkpoint.
    """
    z = np.asarray(stream, dtype=np.int64)
    cps = list(checkpoints)
    if any(b < a_ for a_, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be nondecreasing")
    if cps and cps[-1] + depth - 1 > len(z):
        raise MeasureError("stream prefix too short for the last checkpoint")
    acc = [np.zeros(a ** l, dtype=np.int64) for l in range(1, depth + 1)]
    prev = 0
    out = []
    for M in cps:
        for l in range(1, depth + 1):
            if M > prev:
                codes = window_codes(z[prev:M + l - 1], l, a)
                acc[l - 1] += np.bincount(codes, minlength=a ** l)
        prev = max(prev, M)
        out.append([c / M for c in acc])
    return out


class TableMeasure(Measure):
    """A measure known only through precomputed mass tables."""

    def __init__(self, tables, alphabet_size, exact=False):
        self.tables = list(tables)
        self.alphabet_size = alphabet_size
        self.exact = exact

    def mass_tables(self, depth):
        if depth > len(self.tables):
            raise MeasureError(f"tables only available to depth {len(self.tables)}")
        return self.tables[:depth]


# ---------------------------------------------------------------------------
# weak* metric


def family_size(a: int, depth: int) -> int:
    """Number of canonical observables of cylinder depth <= ``depth``."""
    return sum(a ** l for l in range(1, depth + 1))


def truncation_bound(a: int, depth: int) -> Fraction:
    return Fraction(1, 2 ** family_size(a, depth))


def _weights(a, depth, exact):
    ws = []
    k = 0
    for l in range(1, depth + 1):
        idx = np.arange(k + 1, k + a ** l + 1)
        if exact:
            ws.append(np.array([Fraction(1, 2 ** int(i)) for i in idx], dtype=object))
        else:
            ws.append(np.ldexp(1.0, -idx.astype(np.int64)))
        k += a ** l
    return ws


def table_distance(tmu: list, tnu: list, a: int, exact: bool = False):
    depth = len(tmu)
    ws = _weights(a, depth, exact)
    total = Fraction(0) if exact else 0.0
    for w, x, y in zip(ws, tmu, tnu):
        if exact:
            total += sum(wi * abs(xi - yi) for wi, xi, yi in zip(w, x, y))
        else:
            total += float(np.dot(w, np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))
    return total


def wstar_distance(mu: Measure, nu: Measure, depth: int = 3):
    """Truncated weak* distance and its exact tail bound.

    The true distance lies in ``[value, value + bound]``.
    """
    if depth < 1:
        raise ValueError("depth limit must be >= 1")
    a = max(mu.alphabet_size, nu.alphabet_size)
    if mu.alphabet_size != nu.alphabet_size:
        raise MeasureError("measures live on different alphabets")
    exact = mu.exact and nu.exact
    value = table_distance(mu.mass_tables(depth), nu.mass_tables(depth), a, exact)
    return value, truncation_bound(a, depth)


def block_entropy(measure: Measure, n: int) -> float:
    """``H_n = -sum_{|w|=n} mu(w) log mu(w)``."""
    if n == 0:
        return 0.0
    T = measure.mass_tables(n)[-1]
    return -sum(_plogp(x) for x in T)


def conditional_entropy_estimate(measure: Measure, n: int) -> float:
    """``H_{n+1} - H_n``; exact for an ``(n)``-step Markov process."""
    return block_entropy(measure, n + 1) - block_entropy(measure, n)


# ---------------------------------------------------------------------------
# family operations


def restrict_normalize(mu: Measure, n: int) -> Measure:
    """Keep components tagged with level <= ``n`` and renormalize."""
    comb = as_combination(mu)
    keep = [(w, m, l) for w, m, l in comb.components if l <= n]
    if not keep:
        raise MeasureError(f"measure gives zero mass to level {n}")
    total = sum(w for w, _, _ in keep)
    if len(keep) == 1:
        return keep[0][1]
    return ConvexCombination(tuple((w / total, m, l) for w, m, l in keep), f"{comb.label}|X{n}")


def full_support_measure(levels: Sequence[ShiftSystem], depth: int = 4) -> Measure:
    """``sum_n 2**-n Parry(X_n)`` truncated at the family depth.

    The last level absorbs the remaining weight so the weights sum to one.
    Positivity of every admissible cylinder up to ``depth`` is checked.
    """
    levels = list(levels)
    if not levels:
        raise MeasureError("empty family")
    N = len(levels)
    comps = []
    for n, X in enumerate(levels, start=1):
        w = Fraction(1, 2 ** n) if n < N else Fraction(1, 2 ** (N - 1))
        comps.append((w, MarkovMeasure.parry(X), n))
    mu = comps[0][1] if N == 1 else ConvexCombination(tuple(comps), "full-support")
    top = levels[-1]
    tabs = mu.mass_tables(depth)
    for l in range(1, depth + 1):
        for w in top.words(l):
            if not tabs[l - 1][word_code(w, top.alphabet_size)] > 0:
                raise MeasureError(f"cylinder {format_word(w)} receives no mass")
    return mu


# ---------------------------------------------------------------------------
# power systems


def decomposition_average(nu: Measure, power: PowerSystem) -> Measure:
    """``(1/k) sum_{i<k} f^i_* lift(nu)`` for a block-system measure ``nu``.

    The result is a chain over (block state, phase) pairs emitting base
    symbols; its entropy is ``h_nu(f^k) / k``.
    """
    if isinstance(nu, ConvexCombination):
        return ConvexCombination(tuple((w, decomposition_average(m, power), l)
                                       for w, m, l in nu.components), nu.label)
    if not isinstance(nu, MarkovMeasure):
        raise MeasureError("decomposition_average needs a Markov block measure")
    k = power.exponent
    blocks = power.block_alphabet
    if nu.alphabet_size != len(blocks):
        raise MeasureError("measure alphabet does not match the block alphabet")
    active = set(power.system.active)
    T1 = nu.mass_tables(1)[0]
    if any(T1[b] > 0 for b in range(len(blocks)) if b not in active):
        raise MeasureError("measure charges blocks outside the D_0 class")
    if k == 1:
        return MarkovMeasure(nu.P, nu.pi, tuple(blocks[e][0] for e in nu.emit),
                             power.base.alphabet_size, nu.exact, nu.label)
    S = nu.n_states
    n = S * k
    exact = nu.exact
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    P = np.full((n, n), zero, dtype=object if exact else float)
    pi = np.full(n, zero, dtype=object if exact else float)
    emit = []
    for s in range(S):
        for p in range(k):
            i = s * k + p
            emit.append(blocks[nu.emit[s]][p])
            if p < k - 1:
                P[i, i + 1] = one
            else:
                for t in range(S):
                    P[i, t * k] = nu.P[s][t]
            pi[i] = nu.pi[s] / k if exact else float(nu.pi[s]) / k
    return MarkovMeasure(P, pi, tuple(emit), power.base.alphabet_size, exact,
                         f"avg_{k}({nu.label})")


def lift(nu: MarkovMeasure, power: PowerSystem) -> MarkovMeasure:
    """The base-symbol measure of ``nu`` read block by block, started at phase 0."""
    avg = decomposition_average(nu, power)
    if not isinstance(avg, MarkovMeasure) or power.exponent == 1:
        return avg
    k = power.exponent
    zero = Fraction(0) if avg.exact else 0.0
    pi = np.full(len(avg.pi), zero, dtype=avg.pi.dtype)
    for i in range(0, len(pi), k):
        pi[i] = avg.pi[i] * k
    return MarkovMeasure(avg.P, pi, avg.emit, avg.alphabet_size, avg.exact, f"lift({nu.label})")


def power_mass(base_measure: Measure, power: PowerSystem, blocks: Sequence[int]):
    """``(h_*)mu`` of a block cylinder: ``k * mu[concatenation]``."""
    word = tuple(s for b in blocks for s in power.block_alphabet[b])
    m = base_measure.cylinder_mass(word)
    return power.exponent * m


# ---------------------------------------------------------------------------
# io


def _parse_num(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def measure_from_json(data: dict) -> Measure:
    kind = data.get("type")
    try:
        if kind == "bernoulli":
            return MarkovMeasure.bernoulli([_parse_num(x) for x in data["probs"]], data.get("label", ""))
        if kind == "markov":
            P = [[_parse_num(x) for x in row] for row in data["P"]]
            pi = None if data.get("pi") is None else [_parse_num(x) for x in data["pi"]]
            _check_stochastic(P)
            return MarkovMeasure.build(P, pi, data.get("emit"), data.get("alphabet_size", 0),
                                       label=data.get("label", ""))
        if kind == "periodic":
            return MarkovMeasure.periodic_orbit(data["word"], data.get("alphabet_size"))
        if kind == "convex":
            comps = []
            for c in data["components"]:
                comps.append((_parse_num(c["weight"]), measure_from_json(c["measure"]), int(c.get("level", 0))))
            return ConvexCombination(tuple(comps), data.get("label", ""))
    except KeyError as exc:
        raise MeasureError(f"{kind} measure missing field {exc}") from None
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        if isinstance(exc, MeasureError):
            raise
        raise MeasureError(f"{kind} measure: bad number ({exc})") from None
    raise MeasureError(f"unknown measure type {kind!r}")


def _check_stochastic(P):
    for i, row in enumerate(P):
        s = sum(row)
        if any(x < 0 for x in row):
            raise MeasureError(f"row {i}: negative entry")
        ok = (s == 1) if all(isinstance(x, Fraction) for x in row) else abs(float(s) - 1) < 1e-9
        if not ok:
            raise MeasureError(f"row {i} of P is not stochastic (sums to {s})")


def load_measure(path) -> Measure:
    with open(path) as fh:
        return measure_from_json(json.load(fh))


__all__ = [
    "Measure", "MarkovMeasure", "ConvexCombination", "EmpiricalMeasure", "TableMeasure",
    "MeasureError", "wstar_distance", "truncation_bound", "family_size", "table_distance",
    "restrict_normalize", "full_support_measure", "decomposition_average", "lift", "power_mass",
    "bernoulli", "parry_measure", "mix", "combine", "as_combination", "block_entropy",
    "conditional_entropy_estimate", "checkpoint_tables", "window_codes", "word_code", "code_word",
    "measure_from_json", "load_measure", "stationary_vector", "fraction_det", "solve_fraction",
]
