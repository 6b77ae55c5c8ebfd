"""One-sided subshifts of finite type and their topological toolkit.

A system is a 0/1 transition matrix over the alphabet ``{0, ..., a-1}``;
``A[i][j] == 1`` means that ``j`` may follow ``i``.  Points are one-sided
streams and the metric is the cylinder metric
``d(x, y) = 2 ** -min{i : x_i != y_i}``.

Levels of a nested family may leave some symbols of the shared alphabet
unused (zero row *and* zero column); those symbols are simply inactive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np

Word = tuple  # tuple[int, ...]

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


class SystemError_(ValueError):
    """Invalid or unsuitable shift system."""


def parse_word(text: str | Sequence[int]) -> Word:
    """Parse ``"0101"`` (digits/letters, base <= 36) into a symbol tuple."""
    if not isinstance(text, str):
        return tuple(int(s) for s in text)
    return tuple(_DIGITS.index(ch) for ch in text.strip().lower())


def format_word(word: Iterable[int]) -> str:
    return "".join(_DIGITS[int(s)] for s in word)


@dataclass(frozen=True, eq=False)
class ShiftSystem:
    """A one-sided SFT given by its transition matrix."""

    alphabet_size: int
    transitions: tuple
    label: str = ""

    def __post_init__(self):
        A = np.asarray(self.transitions, dtype=np.int64)
        a = self.alphabet_size
        if a < 1 or A.shape != (a, a):
            raise SystemError_(f"transition matrix must be {a}x{a}, got {A.shape}")
        if not np.isin(A, (0, 1)).all():
            raise SystemError_("transition matrix entries must be 0 or 1")
        rows = A.sum(axis=1) > 0
        cols = A.sum(axis=0) > 0
        stranded = np.flatnonzero(rows != cols)
        if stranded.size:
            raise SystemError_(f"stranded symbol(s) {stranded.tolist()}: "
                               "every used symbol needs a successor and a predecessor")
        if not rows.any():
            raise SystemError_("system has no admissible transitions")
        object.__setattr__(self, "transitions", tuple(tuple(int(v) for v in r) for r in A))

    @classmethod
    def from_matrix(cls, A, label: str = "") -> "ShiftSystem":
        A = np.asarray(A)
        return cls(int(A.shape[0]), tuple(map(tuple, A.tolist())), label)

    @classmethod
    def full_shift(cls, a: int = 2) -> "ShiftSystem":
        return cls.from_matrix(np.ones((a, a), dtype=int), f"full-{a}-shift")

    @cached_property
    def matrix(self) -> np.ndarray:
        A = np.array(self.transitions, dtype=np.int64)
        A.setflags(write=False)
        return A

    @cached_property
    def active(self) -> tuple:
        """Symbols that actually occur in the system."""
        return tuple(int(s) for s in np.flatnonzero(self.matrix.sum(axis=1) > 0))

    def allows(self, i: int, j: int) -> bool:
        return bool(self.transitions[i][j])

    def is_admissible(self, word: Sequence[int]) -> bool:
        if len(word) == 0:
            return True
        if any(not 0 <= s < self.alphabet_size for s in word):
            return False
        if len(word) == 1:
            return word[0] in self.active
        return all(self.transitions[a][b] for a, b in zip(word[:-1], word[1:]))

    def contains(self, other: "ShiftSystem") -> bool:
        """Matrix-level containment: every transition of ``other`` is allowed here."""
        return (other.alphabet_size == self.alphabet_size
                and bool(np.all(other.matrix <= self.matrix)))

    def words(self, n: int):
        """All admissible words of length ``n`` in lexicographic order."""
        if n <= 0:
            yield ()
            return
        A = self.transitions
        stack = [(s,) for s in reversed(self.active)]
        while stack:
            w = stack.pop()
            if len(w) == n:
                yield w
                continue
            last = w[-1]
            for s in reversed(range(self.alphabet_size)):
                if A[last][s]:
                    stack.append(w + (s,))

    def to_json(self) -> dict:
        return {"label": self.label, "alphabet_size": self.alphabet_size,
                "transitions": [list(r) for r in self.transitions]}

    @classmethod
    def from_json(cls, data: dict) -> "ShiftSystem":
        try:
            return cls(int(data["alphabet_size"]),
                       tuple(tuple(r) for r in data["transitions"]),
                       str(data.get("label", "")))
        except KeyError as exc:
            raise SystemError_(f"system definition missing field {exc}") from None

    def __repr__(self):
        return f"ShiftSystem({self.label or self.alphabet_size!r})"


def load_system(path) -> ShiftSystem:
    with open(path) as fh:
        return ShiftSystem.from_json(json.load(fh))


def validate_nondegenerate(system: ShiftSystem) -> None:
    """Reject one-point spaces (alphabet of size one)."""
    if system.alphabet_size < 2 or len(system.active) < 2:
        raise SystemError_("degenerate system: the space is a single point")


# ---------------------------------------------------------------------------
# metric


def m_of_eps(eps) -> int:
    """Smallest ``m >= 0`` with ``2**-m <= eps``."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = 0
    while Fraction(1, 2 ** m) > eps:
        m += 1
    return m


def cylinder_distance(x: Sequence[int], y: Sequence[int]) -> Fraction:
    """Cylinder distance between two (finite prefixes of) streams.

    Prefixes that agree on all shared coordinates get ``2**-len``, an upper
    bound for the distance of any extensions.
    """
    n = min(len(x), len(y))
    for i in range(n):
        if x[i] != y[i]:
            return Fraction(1, 2 ** i)
    return Fraction(1, 2 ** n)


def bowen_distance(x: Sequence[int], y: Sequence[int], n: int) -> Fraction:
    """``d_n(x, y) = max_{0 <= i < n} d(f^i x, f^i y)`` on prefixes."""
    return max(cylinder_distance(x[i:], y[i:]) for i in range(n))


def is_separated(x, y, n: int, eps) -> bool:
    """``(n, eps)``-separation: some ``i < n`` with ``d(f^i x, f^i y) > eps``."""
    return bowen_distance(x, y, n) > Fraction(eps)


# ---------------------------------------------------------------------------
# graph structure


def _reach(A: np.ndarray, start: int) -> set:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in np.flatnonzero(A[u]):
            v = int(v)
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def is_transitive(system: ShiftSystem) -> bool:
    """Strong connectivity of the transition graph on the active symbols."""
    act = system.active
    A = system.matrix
    s = act[0]
    return _reach(A, s) >= set(act) and _reach(A.T, s) >= set(act)


def _bool_power(B: np.ndarray, n: int) -> np.ndarray:
    R = np.eye(B.shape[0], dtype=bool)
    P = B.astype(bool)
    while n:
        if n & 1:
            R = (R.astype(np.int64) @ P.astype(np.int64)) > 0
        P = (P.astype(np.int64) @ P.astype(np.int64)) > 0
        n >>= 1
    return R


def _active_block(system):
    act = list(system.active)
    return system.matrix[np.ix_(act, act)]


def primitivity_index(system: ShiftSystem) -> int | None:
    """Least ``N`` with ``A**N`` entrywise positive (on active symbols).

    Returns ``None`` for an irreducible but periodic (non-mixing) system and
    raises for a reducible one.  Bounded by Wielandt's ``(n-1)**2 + 1``.
    """
    if not is_transitive(system):
        raise SystemError_(f"{system!r} is reducible")
    B = _active_block(system) > 0
    n = B.shape[0]
    bound = (n - 1) ** 2 + 1
    P = B.copy()
    for N in range(1, bound + 1):
        if P.all():
            return N
        P = (P.astype(np.int64) @ B.astype(np.int64)) > 0
    return None


def is_mixing(system: ShiftSystem) -> bool:
    return primitivity_index(system) is not None


@dataclass(frozen=True)
class PeriodicDecomposition:
    """Cyclic classes ``D_0, ..., D_{k-1}`` of an irreducible system."""

    period: int
    classes: tuple
    base_periodic_point: Word

    def class_of(self, symbol: int) -> int:
        for i, c in enumerate(self.classes):
            if symbol in c:
                return i
        raise KeyError(symbol)


def _shortest_cycle(A: np.ndarray, s: int) -> Word:
    prev = {s: None}
    frontier = [s]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(A[u]):
                v = int(v)
                if v == s:
                    path = [u]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return tuple(reversed(path))
                if v not in prev:
                    prev[v] = u
                    nxt.append(v)
        frontier = sorted(nxt)
    raise SystemError_(f"no cycle through symbol {s}")


def periodic_decomposition(system: ShiftSystem, anchor: int | None = None) -> PeriodicDecomposition:
    """Period and cyclic classes; ``D_0`` is the class of ``anchor``.

    The period is the gcd of ``depth(u) + 1 - depth(v)`` over all edges,
    with depths from a BFS rooted at the anchor.
    """
    if not is_transitive(system):
        raise SystemError_(f"{system!r} is not transitive")
    A = system.matrix
    root = system.active[0] if anchor is None else anchor
    if root not in system.active:
        raise SystemError_(f"anchor {root} is not an active symbol")
    depth = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(A[u]):
                v = int(v)
                if v not in depth:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    for u in depth:
        for v in np.flatnonzero(A[u]):
            g = math.gcd(g, abs(depth[u] + 1 - depth[int(v)]))
    classes = [[] for _ in range(g)]
    for s in sorted(depth):
        classes[depth[s] % g].append(s)
    return PeriodicDecomposition(g, tuple(tuple(c) for c in classes), _shortest_cycle(A, root))


def specification_gap(system: ShiftSystem, epsilon=None) -> int:
    """Gap ``K`` for exact gluing of words; equal to the primitivity index."""
    N = primitivity_index(system)
    if N is None:
        raise SystemError_(f"{system!r} is not mixing; specification needs mixing")
    return N


@lru_cache(maxsize=None)
def _reach_table(transitions: tuple, length: int) -> np.ndarray:
    A = np.array(transitions, dtype=np.int64) > 0
    return _bool_power(A, length)


def connector(system: ShiftSystem, a: int, b: int, gap: int) -> Word:
    """Lexicographically smallest ``c`` with ``|c| = gap - 1`` and ``a c b`` admissible."""
    if gap < 1:
        raise ValueError("gap must be >= 1")
    T = system.transitions
    if not _reach_table(T, gap)[a, b]:
        raise SystemError_(f"no path of length {gap} from {a} to {b} in {system!r}")
    out = []
    cur = a
    for r in range(gap - 1, 0, -1):
        R = _reach_table(T, r)
        for s in range(system.alphabet_size):
            if T[cur][s] and R[s, b]:
                out.append(s)
                cur = s
                break
    return tuple(out)


def glue_segments(system: ShiftSystem, segments: Sequence[Sequence[int]], gap: int) -> Word:
    """Concatenate admissible segments with ``gap - 1`` connector symbols between them.

    Segment ``i`` occupies ``[a_i, b_i]`` with ``a_{i+1} - b_i = gap``.
    """
    N = specification_gap(system)
    if gap < N:
        raise SystemError_(f"gap {gap} below primitivity index {N}")
    out: list = []
    for seg in segments:
        seg = parse_word(seg)
        if not seg or not system.is_admissible(seg):
            raise SystemError_(f"segment {format_word(seg)!r} is not admissible")
        if out:
            out.extend(connector(system, out[-1], seg[0], gap))
        out.extend(seg)
    return tuple(out)


# ---------------------------------------------------------------------------
# streams


@dataclass
class SymbolStream:
    """A materialized stream prefix with its checkpoint log."""

    symbols: np.ndarray
    alphabet_size: int
    checkpoints: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    bands: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    block_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.symbols)

    def prefix(self, n: int) -> np.ndarray:
        return self.symbols[:n]


def shadow_pseudo_orbit(system: ShiftSystem, pseudo_orbit: Sequence[Sequence[int]],
                        delta=Fraction(1, 4)) -> SymbolStream:
    """Trace a ``delta``-pseudo-orbit of word prefixes by ``y_n = z^(n)_0``.

    After the last entry ``y`` continues with the rest of that entry.

    ``d(f z^(n), z^(n+1)) < delta`` is checked on the shared coordinates.
    """
    delta = Fraction(delta)
    if delta > Fraction(1, 4):
        raise ValueError("shadowing is provided for delta <= 1/4")
    pts = [tuple(p) for p in pseudo_orbit]
    for n, p in enumerate(pts):
        if len(p) < 2 or not system.is_admissible(p):
            raise SystemError_(f"pseudo-orbit entry {n} is not an admissible prefix of length >= 2")
    for n in range(len(pts) - 1):
        if cylinder_distance(pts[n][1:], pts[n + 1]) >= delta:
            raise SystemError_(f"pseudo-orbit jump at index {n} exceeds delta={delta}")
    # the last entry's tail continues y admissibly, so late comparisons see full windows
    y = np.array([p[0] for p in pts] + list(pts[-1][1:]) if pts else [], dtype=np.uint8)
    return SymbolStream(y, system.alphabet_size, meta={"delta": str(delta), "entries": len(pts)})


def tracing_distances(stream, pseudo_orbit) -> list:
    """``d(f^n y, z^(n))`` evaluated on the coordinates available in both."""
    y = np.asarray(stream.symbols if isinstance(stream, SymbolStream) else stream)
    out = []
    for n, p in enumerate(pseudo_orbit):
        m = min(len(p), len(y) - n)
        out.append(cylinder_distance(tuple(y[n:n + m].tolist()), tuple(p[:m])))
    return out


# ---------------------------------------------------------------------------
# power systems


@dataclass(frozen=True, eq=False)
class PowerSystem:
    """``(D_0, f^k)`` recoded as a 1-step SFT over admissible k-blocks."""

    base: ShiftSystem
    exponent: int
    decomposition: PeriodicDecomposition
    block_alphabet: tuple
    system: ShiftSystem

    @property
    def block_transitions(self):
        return self.system.transitions

    def expand(self, blocks: Sequence[int]) -> np.ndarray:
        table = np.array(self.block_alphabet, dtype=np.uint8).reshape(len(self.block_alphabet), self.exponent)
        return table[np.asarray(blocks, dtype=np.int64)].reshape(-1)

    def block_index(self, block: Sequence[int]) -> int:
        return self.block_alphabet.index(tuple(block))


def power_restrict(system: ShiftSystem, decomposition: PeriodicDecomposition,
                   exponent: int | None = None, block_alphabet: Sequence | None = None) -> PowerSystem:
    """Blocks of length ``k`` starting in ``D_0``; ``k`` must be a multiple of the period.

    ``block_alphabet`` lets nested levels share the ambient block coding;
    blocks not admissible in ``system`` are then inactive.
    """
    k = decomposition.period if exponent is None else int(exponent)
    if k < 1 or k % decomposition.period:
        raise ValueError("exponent must be a positive multiple of the period")
    d0 = set(decomposition.classes[0])
    if block_alphabet is None:
        blocks = []
        for s in sorted(d0):
            blocks.extend(w for w in _words_from(system, s, k))
        blocks = tuple(sorted(blocks))
    else:
        blocks = tuple(tuple(b) for b in block_alphabet)
    A = system.matrix
    mine = [system.is_admissible(b) and b[0] in d0 for b in blocks]
    n = len(blocks)
    B = np.zeros((n, n), dtype=int)
    for i, b in enumerate(blocks):
        for j, c in enumerate(blocks):
            if mine[i] and mine[j] and A[b[-1], c[0]]:
                B[i, j] = 1
    ps = ShiftSystem.from_matrix(B, f"{system.label}^{k}|D0")
    return PowerSystem(system, k, decomposition, blocks, ps)


def _words_from(system, s, k):
    for w in system.words(k):
        if w[0] == s:
            yield w


def all_words(alphabet_size: int, n: int):
    return product(range(alphabet_size), repeat=n)
