"""Observables, irregular targets, Birkhoff traces and limit-set tags.

An observable is locally constant: a value for every word of a fixed
window.  Its integral against a measure (the *spread*) only needs cylinder
masses at that depth, so all comparisons here are exact when the inputs
are rational.

Five target shapes are supported, tagged ``a`` to ``e``:

``a``  segment between two measures of the level ``X_{n0}`` (irregular, level supported)
``b``  a single measure of ``X_{n0}`` (regular, level supported)
``c``  segment from a level measure to a full-support measure
``d``  segment between two full-support measures
``e``  a single full-support measure
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .construct import AUDIT_DEPTH, NestedFamily, Schedule, TargetPath
from .measures import (MarkovMeasure, Measure, checkpoint_tables, combine,
                       full_support_measure, table_distance, window_codes, word_code)
from .shift import ShiftSystem, SymbolStream, format_word, parse_word

VARIANTS = ("a", "b", "c", "d", "e")
THETA_GRID = Fraction(1, 20)
MAX_CYCLES = 200_000


class ObservableError(ValueError):
    pass


@dataclass(frozen=True)
class Observable:
    """``phi(x) = table[x_0 ... x_{window-1}]``; words missing from the table count as 0."""

    window: int
    alphabet_size: int
    table: dict = field(hash=False)
    label: str = ""

    def __post_init__(self):
        if self.window < 1:
            raise ObservableError("window must be >= 1")
        for w in self.table:
            if len(w) != self.window or any(not 0 <= s < self.alphabet_size for s in w):
                raise ObservableError(f"table word {format_word(w)!r} does not fit the window")

    @classmethod
    def coordinate(cls, alphabet_size: int, index: int = 0, label: str = "") -> "Observable":
        """``phi(x) = x_index``."""
        tab = {}
        for c in range(alphabet_size ** (index + 1)):
            w = _code_word(c, index + 1, alphabet_size)
            tab[w] = Fraction(w[index])
        return cls(index + 1, alphabet_size, tab, label or f"x_{index}")

    @classmethod
    def constant(cls, alphabet_size: int, value=0) -> "Observable":
        return cls(1, alphabet_size, {(s,): Fraction(value) for s in range(alphabet_size)}, "const")

    @classmethod
    def indicator(cls, word, alphabet_size: int) -> "Observable":
        w = parse_word(word)
        return cls(len(w), alphabet_size, {w: Fraction(1)}, f"1[{format_word(w)}]")

    def value(self, word) -> object:
        return self.table.get(tuple(word), Fraction(0))

    def code_array(self) -> np.ndarray:
        """Float values indexed by word code."""
        out = np.zeros(self.alphabet_size ** self.window)
        for w, v in self.table.items():
            out[word_code(w, self.alphabet_size)] = float(v)
        return out

    def integer_table(self):
        """``(ints, D)`` with ``value = ints[code] / D`` when every value is rational."""
        if not all(isinstance(v, (int, Fraction)) for v in self.table.values()):
            return None
        D = math.lcm(*(Fraction(v).denominator for v in self.table.values())) if self.table else 1
        out = np.zeros(self.alphabet_size ** self.window, dtype=np.int64)
        for w, v in self.table.items():
            out[word_code(w, self.alphabet_size)] = int(Fraction(v) * D)
        return out, D

    def bounds(self) -> tuple:
        vals = list(self.table.values())
        if len(self.table) < self.alphabet_size ** self.window:
            vals.append(Fraction(0))
        return min(vals), max(vals)

    def perturbed(self, word, delta) -> "Observable":
        w = tuple(parse_word(word))
        tab = dict(self.table)
        tab[w] = self.value(w) + delta
        return Observable(self.window, self.alphabet_size, tab, f"{self.label}+{delta}*1[{format_word(w)}]")

    def to_json(self) -> dict:
        return {"window": self.window, "alphabet_size": self.alphabet_size, "label": self.label,
                "table": {format_word(w): str(v) for w, v in sorted(self.table.items())}}

    @classmethod
    def from_json(cls, data: dict) -> "Observable":
        a = int(data["alphabet_size"])
        if "coordinate" in data:
            return cls.coordinate(a, int(data["coordinate"]), data.get("label", ""))
        tab = {}
        for k, v in data.get("table", {}).items():
            try:
                tab[parse_word(k)] = Fraction(v) if isinstance(v, (str, int)) else v
            except (ValueError, ZeroDivisionError) as exc:
                raise ObservableError(f"bad table entry {k!r}: {v!r}") from exc
        return cls(int(data["window"]), a, tab, data.get("label", ""))


def _code_word(code, length, a):
    out = []
    for _ in range(length):
        code, r = divmod(code, a)
        out.append(r)
    return tuple(reversed(out))


def spread(obs: Observable, mu: Measure):
    """``integral phi d mu`` from the depth-``window`` cylinder masses."""
    if mu.alphabet_size != obs.alphabet_size:
        raise ObservableError("observable and measure use different alphabets")
    T = mu.mass_tables(obs.window)[obs.window - 1]
    total = 0
    for w, v in obs.table.items():
        m = T[word_code(w, obs.alphabet_size)]
        if m:
            total = total + v * m
    return total


# ---------------------------------------------------------------------------
# extremal invariant measures of a locally constant observable


def _cycle_graph(X: ShiftSystem, window: int):
    r = max(window - 1, 1)
    verts = list(X.words(r))
    index = {v: i for i, v in enumerate(verts)}
    succ = [[] for _ in verts]
    for i, v in enumerate(verts):
        for s in range(X.alphabet_size):
            if X.transitions[v[-1]][s]:
                succ[i].append(index[v[1:] + (s,)])
    return verts, succ


def simple_cycles(X: ShiftSystem, window: int):
    """Periodic words from the simple cycles of the ``(window-1)``-block graph.

    Every ergodic optimum of a window-``window`` observable is attained on
    one of these orbits.
    """
    verts, succ = _cycle_graph(X, window)
    found = 0
    for root in range(len(verts)):
        stack = [(root, iter(succ[root]))]
        path = [root]
        on = {root}
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                on.discard(path.pop())
                continue
            if nxt == root:
                found += 1
                if found > MAX_CYCLES:
                    raise ObservableError("too many cycles; shorten the observable window")
                yield tuple(verts[p][0] for p in path)
            elif nxt > root and nxt not in on:
                stack.append((nxt, iter(succ[nxt])))
                path.append(nxt)
                on.add(nxt)


def periodic_spread(obs: Observable, word) -> Fraction:
    p = len(word)
    ext = tuple(word[i % p] for i in range(p + obs.window - 1))
    return sum((Fraction(obs.value(ext[i:i + obs.window])) for i in range(p)), Fraction(0)) / p


@dataclass
class SpreadRange:
    low: Fraction
    high: Fraction
    low_orbit: tuple
    high_orbit: tuple

    @property
    def width(self):
        return self.high - self.low


def spread_range(obs: Observable, X: ShiftSystem) -> SpreadRange:
    """Exact ``min`` and ``max`` of the spread over invariant measures of ``X``."""
    best = None
    for w in simple_cycles(X, obs.window):
        v = periodic_spread(obs, w)
        if best is None:
            best = [v, v, w, w]
            continue
        if v < best[0] or (v == best[0] and (len(w), w) < (len(best[2]), best[2])):
            best[0], best[2] = v, w
        if v > best[1] or (v == best[1] and (len(w), w) < (len(best[3]), best[3])):
            best[1], best[3] = v, w
    if best is None:
        raise ObservableError("level has no periodic orbit")
    return SpreadRange(best[0], best[1], best[2], best[3])


def zero_spread_witness(obs: Observable, X: ShiftSystem, delta) -> tuple:
    """Perturb one table entry of a zero-spread observable by ``delta``.

    Returns ``(word, new_range)`` with ``new_range.width > 0``.  The word is
    the first admissible one whose frequency differs between two cycles,
    so the perturbed integrals differ by ``delta`` times that gap.
    """
    delta = Fraction(delta)
    if delta == 0:
        raise ObservableError("delta must be nonzero")
    cycles = list(simple_cycles(X, obs.window))
    for w in X.words(obs.window):
        ind = Observable.indicator(w, obs.alphabet_size)
        freqs = {periodic_spread(ind, c) for c in cycles}
        if len(freqs) > 1:
            new = spread_range(obs.perturbed(w, delta), X)
            if new.width > 0:
                return w, new
    raise ObservableError("every cycle sees every word equally often (level is periodic)")


# ---------------------------------------------------------------------------
# targets


@dataclass
class IrregularTarget:
    variant: str
    path: TargetPath
    spreads: list
    theta: object = None
    theta_pair: tuple = ()
    s: object = None
    level: int = 1
    notes: list = field(default_factory=list)

    def to_json(self):
        return {"variant": self.variant, "spreads": [str(x) if isinstance(x, Fraction) else float(x)
                                                     for x in self.spreads],
                "theta": None if self.theta is None else str(self.theta),
                "theta_pair": [str(t) for t in self.theta_pair],
                "s": None if self.s is None else str(self.s), "level": self.level, "notes": self.notes,
                "entropies": [v.entropy() for v in self.path.vertices]}


def _grid():
    return [THETA_GRID * i for i in range(1, int(1 / THETA_GRID))]


def _smallest_theta(h_mu: float, h_low: Sequence[float], eta: float):
    """Smallest grid ``theta`` with ``(1 - theta)(h_mu - h_i) <= eta`` for every ``i``."""
    for th in _grid():
        if all((1 - float(th)) * (h_mu - h) <= eta + 1e-12 for h in h_low):
            return th
    return _grid()[-1]


def irregular_target(obs: Observable, family: NestedFamily, n0: int, variant: str,
                     eta: float) -> IrregularTarget:
    """Targets whose generic points are irregular for ``obs`` (or regular for ``b``/``e``).

    ``mu`` is the Parry measure of ``X_{n0}``; ``mu_1``/``mu_2`` are the
    periodic orbits minimizing and maximizing the spread.  Then
    ``nu_i = theta mu + (1 - theta) mu_i`` with ``theta`` the smallest grid
    value whose entropy loss is at most ``eta``.  The full-support measure
    is ``omega = s nu_2 + (1 - s) w`` with ``w`` charging every level, and
    ``omega_i = theta_i nu_1 + (1 - theta_i) omega``.
    """
    if variant not in VARIANTS:
        raise ObservableError(f"unknown variant {variant!r}")
    if not 1 <= n0 <= family.top:
        raise ObservableError(f"level {n0} outside the family")
    X = family.level(n0)
    mu = MarkovMeasure.parry(X, f"parry(X{n0})")
    if variant == "b":
        return IrregularTarget("b", TargetPath([mu]), [spread(obs, mu)], level=n0)
    rng = spread_range(obs, X)
    if rng.width == 0:
        raise ObservableError(f"observable has zero spread on level {n0}")
    a = family.alphabet_size
    mu1 = MarkovMeasure.periodic_orbit(rng.low_orbit, a, label=f"orbit({format_word(rng.low_orbit)})")
    mu2 = MarkovMeasure.periodic_orbit(rng.high_orbit, a, label=f"orbit({format_word(rng.high_orbit)})")
    h = mu.entropy()
    theta = _smallest_theta(h, [0.0, 0.0], eta)
    nu1, nu2 = combine(theta, mu, mu1), combine(theta, mu, mu2)
    s1, s2 = spread(obs, nu1), spread(obs, nu2)
    if variant == "a":
        return IrregularTarget("a", TargetPath([nu1, nu2]), [s1, s2], theta, level=n0)
    w = full_support_measure(family.levels)
    gap = (s2 - s1) / 2
    s = None
    for cand in _grid():
        om = combine(cand, nu2, w)
        if abs(spread(obs, om) - s2) < gap:
            s = cand
            break
    if s is None:
        raise ObservableError("no full-support measure close to nu_2 on the grid")
    omega = combine(s, nu2, w)
    h_nu1, h_om = nu1.entropy(), omega.entropy()
    floor = h - 2 * eta
    ok = [t for t in _grid() if float(t) * h_nu1 + (1 - float(t)) * h_om >= floor - 1e-12]
    pair = None
    if len(ok) >= 2:
        # spread the pair apart so the two endpoints are distinguishable
        t1 = ok[0]
        t2 = max(t for t in ok if t <= t1 + Fraction(1, 2) and t > t1) if any(t > t1 for t in ok) else None
        pair = (t1, t2) if t2 is not None else None
    if pair is None:
        raise ObservableError("no theta pair keeps the entropy within 2 eta")
    om1, om2 = combine(pair[0], nu1, omega), combine(pair[1], nu1, omega)
    notes = []
    if family.top == n0:
        notes.append("ambient equals X_n0: full support is not distinguishable from level support")
    if variant == "c":
        return IrregularTarget("c", TargetPath([nu1, om1]), [s1, spread(obs, om1)], theta, pair, s, n0, notes)
    if variant == "d":
        return IrregularTarget("d", TargetPath([om1, om2]), [spread(obs, om1), spread(obs, om2)],
                               theta, pair, s, n0, notes)
    return IrregularTarget("e", TargetPath([omega]), [spread(obs, omega)], theta, pair, s, n0, notes)


# ---------------------------------------------------------------------------
# Birkhoff traces


@dataclass
class BirkhoffTrace:
    checkpoints: np.ndarray
    averages: np.ndarray
    running_liminf: np.ndarray
    running_limsup: np.ndarray
    bands: np.ndarray

    @property
    def liminf(self) -> float:
        return float(self.running_liminf[-1]) if len(self.averages) else math.nan

    @property
    def limsup(self) -> float:
        return float(self.running_limsup[-1]) if len(self.averages) else math.nan

    @property
    def oscillation(self) -> float:
        return self.limsup - self.liminf

    def band_estimates(self) -> dict:
        """``{b: (liminf, limsup)}`` using checkpoints of bands ``<= b``."""
        out = {}
        for b in sorted(set(self.bands.tolist())):
            idx = np.flatnonzero(self.bands <= b)
            last = idx[-1]
            out[b] = (float(self.running_liminf[last]), float(self.running_limsup[last]))
        return out

    def rows(self):
        for M, v, lo, hi in zip(self.checkpoints, self.averages, self.running_liminf, self.running_limsup):
            yield int(M), float(v), float(lo), float(hi)


def birkhoff_trace(stream: SymbolStream, obs: Observable, horizon: int | None = None,
                   checkpoints: Sequence[int] | None = None, bands: Sequence[int] | None = None) -> BirkhoffTrace:
    """Averages ``(1/M) sum_{i<M} phi(f^i z)`` at the checkpoints that fit in the prefix.

    Checkpoints default to the stream's own (skipping ``M_0``, the end of
    the initial cylinder word).
    """
    z = np.asarray(stream.symbols)
    a = stream.alphabet_size
    if a != obs.alphabet_size:
        raise ObservableError("observable and stream use different alphabets")
    limit = len(z) if horizon is None else min(int(horizon), len(z))
    if checkpoints is None:
        cps = np.asarray(stream.checkpoints, dtype=np.int64)[1:]
        bs = np.asarray(stream.bands, dtype=np.int64)[1:] if stream.bands is not None else np.ones(len(cps), int)
    else:
        cps = np.asarray(checkpoints, dtype=np.int64)
        bs = np.asarray(bands if bands is not None else np.ones(len(cps), int), dtype=np.int64)
    keep = (cps >= 1) & (cps + obs.window - 1 <= limit)
    cps, bs = cps[keep], bs[keep]
    if len(cps) == 0:
        empty = np.zeros(0)
        return BirkhoffTrace(cps, empty, empty, empty, bs)
    top = int(cps[-1])
    codes = window_codes(z[:top + obs.window - 1], obs.window, a)
    scaled = obs.integer_table()
    if scaled is not None and scaled[1] * max(1, int(np.abs(scaled[0]).max())) * top < 2 ** 62:
        # exact partial sums: one rounding per checkpoint
        ints, D = scaled
        csum = np.concatenate([[0], np.cumsum(ints[codes])])
        avg = np.array([float(Fraction(int(csum[m]), int(m) * D)) for m in cps])
    else:
        vals = obs.code_array()[codes]
        csum = np.concatenate([[0.0], np.cumsum(vals)])
        avg = csum[cps] / cps
    return BirkhoffTrace(cps, avg, np.minimum.accumulate(avg), np.maximum.accumulate(avg), bs)


# ---------------------------------------------------------------------------
# limit-set classification


@dataclass
class Cluster:
    leader: int
    members: list
    center: list
    out_mass: float
    min_mass: float
    kind: str  # "level" | "ambient" | "unclear"

    def to_json(self, a: int):
        return {"leader_checkpoint": self.leader, "size": len(self.members), "kind": self.kind,
                "out_of_level_mass": self.out_mass, "min_ambient_mass": self.min_mass,
                "center": [[float(x) for x in t] for t in self.center]}


@dataclass
class Classification:
    tag: str | None
    clusters: list
    radius: float
    threshold: float
    declared: str | None
    consistent: bool | None
    inconclusive: str | None
    strict: bool

    def to_json(self, a: int) -> dict:
        return {"tag": self.tag, "declared": self.declared, "consistent": self.consistent,
                "inconclusive": self.inconclusive, "radius": self.radius, "threshold": self.threshold,
                "ambient_strictly_larger": self.strict,
                "clusters": [c.to_json(a) for c in self.clusters]}


def _level_masks(family: NestedFamily, depth: int, n0: int | None):
    a = family.alphabet_size
    levels = (family.levels[:-1] or family.levels[:1]) if n0 is None else [family.level(n0)]
    masks = []
    for X in levels:
        m = np.ones(a ** depth, dtype=bool)
        for w in X.words(depth):
            m[word_code(w, a)] = False
        masks.append(m)
    amb = np.zeros(a ** depth, dtype=bool)
    for w in family.ambient.words(depth):
        amb[word_code(w, a)] = True
    return masks, amb


def overhead_fraction(s: Schedule, depth: int = AUDIT_DEPTH) -> float:
    """Largest per-band share of windows not inside a typical block.

    Counts net visits, connectors and the ``depth - 1`` windows straddling
    each segment boundary, over the band's block mass ``N n``.
    """
    worst = 0.0
    for b in s.bands[:s.B]:
        segs = b.N + b.t
        extra = b.t * b.c + b.N * (b.K - 1) + segs * (depth - 1)
        worst = max(worst, extra / (b.N * b.n))
    return worst


def classify_limit_set(stream: SymbolStream, family: NestedFamily, horizon: int | None = None,
                       tolerance: float | None = None, schedule: Schedule | None = None,
                       declared: str | None = None, threshold: float | None = None,
                       first_band: int = 1, depth: int = AUDIT_DEPTH, n0: int | None = None) -> Classification:
    """Cluster ``E_{M_j}`` over bands ``>= first_band`` and tag the limit set.

    A cluster is level supported when its center puts at most ``threshold``
    mass on ``depth``-words outside some level below the ambient, ambient
    supported when every admissible ambient ``depth``-word carries more
    than ``threshold``.  A cluster that is neither (its support straddles
    the threshold) makes the result inconclusive.
    """
    z = np.asarray(stream.symbols)
    a = stream.alphabet_size
    limit = len(z) if horizon is None else min(int(horizon), len(z))
    cps = np.asarray(stream.checkpoints, dtype=np.int64)
    bs = np.asarray(stream.bands, dtype=np.int64)
    if schedule is not None:
        tolerance = float(schedule.band(schedule.B).zeta) if tolerance is None else tolerance
        threshold = overhead_fraction(schedule, depth) if threshold is None else threshold
    if tolerance is None or threshold is None:
        raise ObservableError("tolerance and threshold need a schedule or explicit values")
    sel = np.flatnonzero((bs >= first_band) & (cps + depth - 1 <= limit) & (cps > 0))
    if len(sel) == 0:
        return Classification(None, [], tolerance, threshold, declared, None, "no checkpoints in range", False)
    tabs = checkpoint_tables(z[:limit], [int(cps[j]) for j in sel], depth, a)
    clusters: list = []
    for j, t in zip(sel, tabs):
        best, bd = None, math.inf
        for c in clusters:
            d = table_distance(t, c.center, a)
            if d < bd:
                best, bd = c, d
        if best is not None and bd <= tolerance:
            best.members.append(int(j))
        else:
            clusters.append(Cluster(int(j), [int(j)], t, 0.0, 0.0, "unclear"))
    strict = all(not X.contains(family.ambient) for X in family.levels[:-1]) and family.top > 1
    masks, amb = _level_masks(family, depth, n0)
    for c in clusters:
        member_tabs = [tabs[list(sel).index(j)][depth - 1] for j in c.members]
        mean = np.mean(member_tabs, axis=0)
        c.out_mass = min((float(mean[m].sum()) for m in masks), default=math.inf)
        c.min_mass = float(mean[amb].min())
        if c.out_mass <= threshold:
            c.kind = "level"
        elif c.min_mass > threshold:
            c.kind = "ambient"
    note = None
    if any(c.kind == "unclear" for c in clusters):
        note = note or "a cluster is neither level nor ambient supported at this threshold"
    tag = None
    if note is None:
        kinds = {c.kind for c in clusters}
        if len(clusters) == 1:
            tag = "b" if kinds == {"level"} else "e"
        elif kinds == {"level"}:
            tag = "a"
        elif kinds == {"ambient"}:
            tag = "d"
        else:
            tag = "c"
        if tag in ("c", "d", "e") and not strict:
            note = "ambient does not strictly exceed every level; full-support tags not applicable"
            tag = None
    consistent = None if declared is None or tag is None else tag == declared
    return Classification(tag, clusters, tolerance, threshold, declared, consistent, note, strict)
