"""Semi-conjugacy of an injective map onto an interval exchange.

The factor ``h(x) = mu([0, x])`` comes from an empirical measure.  Reading
``T(h(x)) = h(f(x))`` on sample points of each piece and fitting the two
isometries ``t -> t + c`` and ``t -> c - t`` recovers the interval exchange
transformation (IET) ``T``, flips included.
"""
from __future__ import annotations

import csv
import heapq
import io
import json
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpq

from .core import AffineBranch, PiecewiseMap, evaluate_many, piece_indices, step
from .errors import DomainError, InjectivityError
from .measure import EmpiricalMeasure, largest_atom
from .scalar import EXACT, format_scalar, to_scalar

ATOMIC_FACTOR = "ATOMIC_FACTOR"
DEGENERATE = "DEGENERATE"


@dataclass(frozen=True, eq=False)
class MonotoneFactor:
    """Nondecreasing ``h`` on [0, 1] given by nodes ``(xs[j], hs[j])``.

    With ``interpolate`` off, ``h`` is the right-continuous step function
    through the nodes (0 left of the first node).  With it on, nodes are
    joined linearly.
    """

    xs: tuple
    hs: tuple
    interpolate: bool
    backend: str
    sample_count: int | None = None
    atom: object = 0

    @classmethod
    def identity(cls, backend: str = EXACT) -> "MonotoneFactor":
        one, zero = to_scalar(1, backend), to_scalar(0, backend)
        return cls((zero, one), (zero, one), True, backend)

    def __call__(self, x):
        xs, hs = self.xs, self.hs
        k = bisect_right(xs, x) - 1
        if k < 0:
            return hs[0] * 0
        if not self.interpolate or k == len(xs) - 1:
            return hs[k]
        x0, x1 = xs[k], xs[k + 1]
        return hs[k] + (hs[k + 1] - hs[k]) * (x - x0) / (x1 - x0)

    def many(self, points):
        """Vectorised evaluation in floats."""
        pts = np.asarray(points, dtype=float)
        xs = np.array([float(v) for v in self.xs])
        hs = np.array([float(v) for v in self.hs])
        if self.interpolate:
            out = np.interp(pts, xs, hs)
            out[pts < xs[0]] = 0.0
            return out
        k = np.searchsorted(xs, pts, side="right") - 1
        return np.where(k >= 0, hs[np.clip(k, 0, None)], 0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "h"])
        for x, h in zip(self.xs, self.hs):
            w.writerow([format_scalar(x), format_scalar(h)])
        return buf.getvalue()


def build_h(mu: EmpiricalMeasure, interpolate: bool = True) -> MonotoneFactor:
    """The empirical factor ``h_n(x) = mu_n([0, x])``.

    Nodes sit at the distinct sample values carrying the CDF value there.
    With ``interpolate`` the nodes ``(0, 0)`` and ``(1, 1)`` are added when
    missing and the steps are joined linearly, giving a continuous ``h``
    that is strictly increasing between distinct samples.
    """
    s = list(mu.samples)
    xs, hs = [], []
    count = 0
    for i, v in enumerate(s):
        count += 1
        if i + 1 < len(s) and s[i + 1] == v:
            continue
        xs.append(v)
        hs.append(mu.mass(count))
    zero, one = to_scalar(0, mu.backend), to_scalar(1, mu.backend)
    if interpolate:
        if xs[0] > 0:
            xs.insert(0, zero)
            hs.insert(0, zero)
        if xs[-1] < 1:
            xs.append(one)
            hs.append(one)
    elif xs[-1] < 1:
        xs.append(one)
        hs.append(one)
    return MonotoneFactor(tuple(xs), tuple(hs), interpolate, mu.backend, mu.n, largest_atom(mu))


@dataclass
class IETData:
    """An interval exchange with flips on [0, 1].

    Piece ``i`` is ``[t_{i-1}, t_i)`` (the last one closed) and acts by
    ``t + c_i``, or by ``c_i - t`` when flipped.  Degenerate pieces carry no
    offset.
    """

    breakpoints: tuple
    offsets: tuple
    flips: tuple
    residuals: tuple = ()
    degenerate: tuple = ()
    backend: str = EXACT

    def __post_init__(self):
        k = len(self.breakpoints) - 1
        if not self.residuals:
            self.residuals = (to_scalar(0, self.backend),) * k
        if not self.degenerate:
            self.degenerate = (False,) * k

    @classmethod
    def from_permutation(cls, lengths, permutation, flips, backend: str = EXACT) -> "IETData":
        """Build from piece lengths, target positions (1-based) and flips."""
        lam = [to_scalar(v, backend) for v in lengths]
        total = sum(lam, to_scalar(0, backend))
        lam = [v / total for v in lam]
        t = [to_scalar(0, backend)]
        for v in lam:
            t.append(t[-1] + v)
        t[-1] = to_scalar(1, backend)
        order = sorted(range(len(lam)), key=lambda i: permutation[i])
        start = {}
        pos = to_scalar(0, backend)
        for i in order:
            start[i] = pos
            pos += lam[i]
        offsets = tuple(start[i] + t[i + 1] if flips[i] else start[i] - t[i] for i in range(len(lam)))
        return cls(tuple(t), offsets, tuple(bool(f) for f in flips), backend=backend)

    @property
    def lengths(self) -> tuple:
        t = self.breakpoints
        return tuple(b - a for a, b in zip(t, t[1:]))

    def image_interval(self, i: int):
        lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
        c = self.offsets[i]
        return (c - hi, c - lo) if self.flips[i] else (lo + c, hi + c)

    @property
    def permutation(self) -> tuple:
        """1-based rank of each piece's image, left to right (None if degenerate)."""
        live = [i for i, dg in enumerate(self.degenerate) if not dg]
        ranked = sorted(live, key=lambda i: self.image_interval(i)[0])
        rank = {i: r + 1 for r, i in enumerate(ranked)}
        return tuple(rank.get(i) for i in range(len(self.offsets)))

    def to_dict(self) -> dict:
        f = format_scalar
        return {
            "breakpoints": [f(v) for v in self.breakpoints],
            "lengths": [f(v) for v in self.lengths],
            "offsets": [None if c is None else f(c) for c in self.offsets],
            "flips": list(self.flips),
            "permutation": list(self.permutation),
            "residuals": [None if r is None else f(r) for r in self.residuals],
            "degenerate": list(self.degenerate),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def iet_as_map(iet: IETData) -> PiecewiseMap:
    """The IET as a piecewise affine map (slopes +-1, RIGHT convention)."""
    one = to_scalar(1, iet.backend)
    branches = [AffineBranch(-one if fl else one, c) for c, fl in zip(iet.offsets, iet.flips)]
    return PiecewiseMap(iet.breakpoints, tuple(branches), backend=iet.backend)


def _iet_piece(iet: IETData, t) -> int:
    i = bisect_right(iet.breakpoints[1:-1], t)
    while iet.offsets[i] is None and i > 0:
        i -= 1  # degenerate piece: continue the isometry from the left
    return i


def iet_evaluate(iet: IETData, t):
    if not 0 <= t <= 1:
        raise DomainError(f"point {format_scalar(t)} outside [0, 1]")
    i = _iet_piece(iet, t)
    c = iet.offsets[i]
    if c is None:
        return t
    return c - t if iet.flips[i] else t + c


def _piece_samples(m: PiecewiseMap, i: int, k: int):
    lo, hi = m.partition[i], m.partition[i + 1]
    return [lo + (hi - lo) * m.scalar(j) / (k + 1) for j in range(1, k + 1)]


def extract_iet(m: PiecewiseMap, h: MonotoneFactor, samples_per_piece: int = 64,
                threshold=None) -> IETData:
    """Recover ``T`` with ``T∘h = h∘f`` piece by piece.

    ``t_i = h(x_i)``.  A piece with length ``<= threshold`` (default ``2/n``
    for an empirical ``h``, 0 otherwise) is marked degenerate.  On the others
    the pairs ``(h(x), h(f(x)))`` at interior sample points are fitted by
    ``t + c`` and by ``c - t`` in the max norm (the optimal ``c`` is the
    midrange); the model with the smaller residual wins, ties going to no flip.
    Raises :class:`InjectivityError` if two samples of a piece share an image.
    """
    backend = m.backend
    zero, one = m.scalar(0), m.scalar(1)
    if threshold is None:
        threshold = mpq(2, h.sample_count) if h.sample_count else 0
    threshold = to_scalar(threshold, backend)
    t = [zero] + [to_scalar(h(x), backend) for x in m.interior] + [one]
    offsets, flips, residuals, degenerate = [], [], [], []
    for i in range(m.d + 1):
        lam = t[i + 1] - t[i]
        if lam <= threshold:
            offsets.append(None)
            flips.append(False)
            residuals.append(None)
            degenerate.append(True)
            continue
        xs = _piece_samples(m, i, samples_per_piece)
        fx = [step(m, x)[0] for x in xs]
        if len(set(fx)) < len(fx):
            seen = {}
            for x, y in zip(xs, fx):
                if y in seen:
                    raise InjectivityError(
                        f"piece {i + 1}: f({format_scalar(seen[y])}) = f({format_scalar(x)}) = {format_scalar(y)}")
                seen[y] = x
        if backend == EXACT:
            ts = [h(x) for x in xs]
            us = [h(y) for y in fx]
        else:
            ts = list(h.many(xs))
            us = list(h.many(fx))
        shift = [u - s for s, u in zip(ts, us)]
        refl = [u + s for s, u in zip(ts, us)]
        c_shift, r_shift = (min(shift) + max(shift)) / 2, (max(shift) - min(shift)) / 2
        c_refl, r_refl = (min(refl) + max(refl)) / 2, (max(refl) - min(refl)) / 2
        if r_refl < r_shift:
            offsets.append(to_scalar(c_refl, backend))
            flips.append(True)
            residuals.append(to_scalar(r_refl, backend))
        else:
            offsets.append(to_scalar(c_shift, backend))
            flips.append(False)
            residuals.append(to_scalar(r_shift, backend))
        degenerate.append(False)
    return IETData(tuple(t), tuple(offsets), tuple(flips), tuple(residuals), tuple(degenerate), backend)


@dataclass
class ConjugacyDefect:
    value: object
    points: int
    flags: list = field(default_factory=list)


def _factor_flags(h: MonotoneFactor, iet: IETData) -> list:
    flags = []
    if h.sample_count and h.atom > mpq(2, h.sample_count):
        flags.append(ATOMIC_FACTOR)
    if any(iet.degenerate):
        flags.append(DEGENERATE)
    return flags


def _merged(a, b):
    """Sorted union of two sorted sequences (no hashing: denominators can be huge)."""
    out = []
    for x in heapq.merge(a, b):
        if not out or x != out[-1]:
            out.append(x)
    return out


def conjugacy_defect(m: PiecewiseMap, h: MonotoneFactor, iet: IETData, sample_count: int = 10_000,
                     exclusion=None) -> ConjugacyDefect:
    """``max |T(h(x)) - h(f(x))|`` over a uniform grid plus the nodes of ``h``.

    Points within ``exclusion`` (default ``10 / sample_count``) of a
    breakpoint, and points in degenerate pieces, are skipped.
    Flags: ``ATOMIC_FACTOR`` when ``h`` comes from a measure with an atom
    heavier than ``2/n``, ``DEGENERATE`` when ``T`` has degenerate pieces.
    """
    delta = to_scalar(exclusion if exclusion is not None else 10 / sample_count, m.backend)
    part = m.partition
    degenerate = iet.degenerate
    flags = _factor_flags(h, iet)
    if m.exact:
        grid = [m.scalar(j) / sample_count for j in range(sample_count + 1)]
        kept = [x for x in _merged(grid, h.xs)
                if min(abs(x - v) for v in part) >= delta and not degenerate[step(m, x)[1]]]
        worst = m.scalar(0)
        for x in kept:
            worst = max(worst, abs(iet_evaluate(iet, h(x)) - h(step(m, x)[0])))
        return ConjugacyDefect(worst, len(kept), flags)
    grid = np.arange(sample_count + 1) / sample_count
    xs = np.unique(np.concatenate([grid, np.array(h.xs, dtype=float)]))
    far = np.min(np.abs(xs[:, None] - np.array(part, dtype=float)[None, :]), axis=1) >= delta
    xs = xs[far]
    xs = xs[~np.array(degenerate)[piece_indices(m, xs)]]
    if xs.size == 0:
        return ConjugacyDefect(0.0, 0, flags)
    lhs = _iet_many(iet, h.many(xs))
    rhs = h.many(evaluate_many(m, xs))
    return ConjugacyDefect(float(np.max(np.abs(lhs - rhs))), int(xs.size), flags)


def _iet_many(iet: IETData, ts: np.ndarray) -> np.ndarray:
    return np.array([iet_evaluate(iet, float(t)) for t in ts])


def isometry_defect(m: PiecewiseMap, h: MonotoneFactor, pair_count: int = 1000, seed: int = 0,
                    resolution: int = 2**20) -> list:
    """Per piece, ``max ||h(f(x)) - h(f(y))| - |h(x) - h(y)||`` over random
    interior pairs drawn from a grid of ``resolution`` cells per piece."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(m.d + 1):
        lo, hi = m.partition[i], m.partition[i + 1]
        js = rng.integers(1, resolution, size=(pair_count, 2))
        if m.exact:
            worst = m.scalar(0)
            for a, b in js:
                x = lo + (hi - lo) * mpq(int(a), resolution)
                y = lo + (hi - lo) * mpq(int(b), resolution)
                d = abs(abs(h(step(m, x)[0]) - h(step(m, y)[0])) - abs(h(x) - h(y)))
                worst = max(worst, d)
            out.append(worst)
            continue
        x = lo + (hi - lo) * js[:, 0] / resolution
        y = lo + (hi - lo) * js[:, 1] / resolution
        hx, hy = h.many(x), h.many(y)
        hfx, hfy = h.many(evaluate_many(m, x)), h.many(evaluate_many(m, y))
        out.append(float(np.max(np.abs(np.abs(hfx - hfy) - np.abs(hx - hy)))))
    return out
