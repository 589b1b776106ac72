"""Piecewise continuous interval maps.

A map is a partition ``0 = x_0 < x_1 < ... < x_d < x_{d+1} = 1`` together
with ``d + 1`` branches, each continuous on the closed hull of its piece, and
a side flag per interior breakpoint saying whose branch defines ``f(x_i)``.
``RIGHT`` (the default) means the pieces are ``[x_{i-1}, x_i)`` with the last
one closed.
"""
from __future__ import annotations

import functools
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as _expr
from .errors import DomainError
from .scalar import EXACT, FLOAT, FLOAT_RANGE_TOL, check_backend, format_scalar, to_scalar

LEFT = "left"
RIGHT = "right"

# Sample count for range validation of non-affine branches.
RANGE_SAMPLES = 1024


@functools.lru_cache(maxsize=256)
def _compiled(tree, vectorized):
    return _expr.compile_expr(tree, vectorized)


@dataclass(frozen=True)
class AffineBranch:
    slope: object
    intercept: object
    kind = "affine"

    def __call__(self, x):
        return self.slope * x + self.intercept

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        return float(self.slope) * xs + float(self.intercept)

    def interval(self, lo, hi):
        a, b = self(lo), self(hi)
        return (a, b) if a <= b else (b, a)

    def converted(self, backend):
        return AffineBranch(to_scalar(self.slope, backend), to_scalar(self.intercept, backend))


@dataclass(frozen=True)
class PolyBranch:
    """Polynomial ``c0 + c1 x + c2 x^2 + ...`` (coefficients ascending)."""

    coeffs: tuple
    kind = "poly"

    def __call__(self, x):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(xs, [float(c) for c in self.coeffs])

    def interval(self, lo, hi):
        lo, hi = float(lo), float(hi)
        a = b = float(self.coeffs[-1])
        for c in reversed(self.coeffs[:-1]):
            prods = (a * lo, a * hi, b * lo, b * hi)
            a, b = min(prods) + float(c), max(prods) + float(c)
        return a, b

    def converted(self, backend):
        return PolyBranch(tuple(to_scalar(c, backend) for c in self.coeffs))


@dataclass(frozen=True)
class ExprBranch:
    tree: _expr.Node
    kind = "expr"

    def __post_init__(self):
        # compiled once per branch; hashing the tree on every call is costly
        object.__setattr__(self, "_scalar_fn", _compiled(self.tree, False))

    def __reduce__(self):
        return (ExprBranch, (self.tree,))

    @classmethod
    def from_text(cls, text: str) -> "ExprBranch":
        return cls(_expr.parse_expr(text))

    @property
    def text(self) -> str:
        return _expr.to_text(self.tree)

    def __call__(self, x):
        return self._scalar_fn(float(x))

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.asarray(_compiled(self.tree, True)(xs), dtype=float)

    def interval(self, lo, hi):
        return _expr.interval_eval(self.tree, float(lo), float(hi))

    def converted(self, backend):
        return self


@dataclass(frozen=True)
class LateralLimit:
    value: object
    index: int
    side: str  # "+" or "-"

    @property
    def tag(self) -> str:
        return f"w_{self.index}^{self.side}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class PiecewiseMap:
    """A piecewise continuous self-map of [0, 1].

    ``partition`` holds every point of the critical set including 0 and 1;
    ``sides[i]`` applies to the interior breakpoint ``partition[i + 1]``.
    Scalars are converted to ``backend`` on construction; nothing else is
    checked here (see :func:`validate_map`).
    """

    partition: tuple
    branches: tuple
    sides: tuple = None
    backend: str = EXACT

    def __post_init__(self):
        check_backend(self.backend)
        part = tuple(to_scalar(v, self.backend) for v in self.partition)
        object.__setattr__(self, "partition", part)
        object.__setattr__(self, "branches", tuple(b.converted(self.backend) for b in self.branches))
        sides = self.sides
        if sides is None:
            sides = (RIGHT,) * max(len(part) - 2, 0)
        sides = tuple(s.lower() for s in sides)
        for s in sides:
            if s not in (LEFT, RIGHT):
                raise ValueError(f"breakpoint side must be left or right, got {s!r}")
        object.__setattr__(self, "sides", sides)

    @classmethod
    def from_interior(cls, interior: Sequence, branches: Sequence, sides=None, backend=EXACT):
        return cls((0, *interior, 1), tuple(branches), None if sides is None else tuple(sides), backend)

    @property
    def d(self) -> int:
        return len(self.partition) - 2

    @property
    def interior(self) -> tuple:
        return self.partition[1:-1]

    @property
    def exact(self) -> bool:
        return self.backend == EXACT

    def scalar(self, value):
        return to_scalar(value, self.backend)

    def __call__(self, x):
        return evaluate(self, x)

    def describe(self) -> str:
        parts = ", ".join(format_scalar(v) for v in self.interior)
        return f"PiecewiseMap(d={self.d}, backend={self.backend}, interior=[{parts}])"


def affine_map(interior, slopes_intercepts, sides=None, backend=EXACT) -> PiecewiseMap:
    """Shorthand: ``affine_map(["1/2"], [("1/2", "1/8"), ("1/2", "3/8")])``."""
    branches = [AffineBranch(to_scalar(a, backend), to_scalar(b, backend)) for a, b in slopes_intercepts]
    return PiecewiseMap.from_interior([to_scalar(v, backend) for v in interior], branches, sides, backend)


def piece_index(m: PiecewiseMap, x) -> int:
    """0-based index of the piece whose branch defines ``f(x)``."""
    interior = m.interior
    j = bisect_right(interior, x)
    if j > 0 and interior[j - 1] == x and m.sides[j - 1] == LEFT:
        j -= 1
    return j


def _clamp(y: float) -> float:
    # float round-off may push a branch value just outside [0, 1]
    return 0.0 if y < 0.0 else (1.0 if y > 1.0 else y)


def evaluate(m: PiecewiseMap, x):
    x = m.scalar(x)
    if not 0 <= x <= 1:
        raise DomainError(f"point {format_scalar(x)} outside [0, 1]")
    y = m.branches[piece_index(m, x)](x)
    return y if m.exact else _clamp(y)


def step(m: PiecewiseMap, x):
    """Return ``(f(x), piece)`` with a 0-based piece index; no domain check."""
    j = piece_index(m, x)
    y = m.branches[j](x)
    if not m.exact:
        y = _clamp(y)
    return y, j


def piece_indices(m: PiecewiseMap, xs: np.ndarray) -> np.ndarray:
    interior = np.array([float(v) for v in m.interior])
    idx = np.searchsorted(interior, xs, side="right")
    for i, side in enumerate(m.sides):
        if side == LEFT:
            idx[xs == interior[i]] = i
    return idx


def evaluate_many(m: PiecewiseMap, xs):
    """Evaluate on many points; float maps use numpy, exact maps a loop."""
    if m.exact:
        return [evaluate(m, m.scalar(x)) for x in xs]
    xs = np.asarray(xs, dtype=float)
    if xs.size and (xs.min() < 0 or xs.max() > 1):
        raise DomainError("points outside [0, 1]")
    idx = piece_indices(m, xs)
    out = np.empty_like(xs)
    for j, br in enumerate(m.branches):
        mask = idx == j
        if mask.any():
            out[mask] = br.eval_array(xs[mask])
    return np.clip(out, 0.0, 1.0)


def lateral_limits(m: PiecewiseMap) -> list[LateralLimit]:
    """All ``2d + 2`` one-sided limits, as closed-hull branch evaluations.

    Order: ``w_0^+``, then ``w_i^-, w_i^+`` for each interior breakpoint,
    then ``w_{d+1}^-``.
    """
    def val(branch, x):
        y = branch(x)
        return y if m.exact else _clamp(y)

    part, br = m.partition, m.branches
    out = [LateralLimit(val(br[0], part[0]), 0, "+")]
    for i in range(1, m.d + 1):
        out.append(LateralLimit(val(br[i - 1], part[i]), i, "-"))
        out.append(LateralLimit(val(br[i], part[i]), i, "+"))
    out.append(LateralLimit(val(br[-1], part[-1]), m.d + 1, "-"))
    return out


def critical_set(m: PiecewiseMap) -> list:
    return list(m.partition)


def _check_range(m, i, br, lo, hi, report, tol):
    label = f"branch {i + 1}"
    if br.kind == "affine":
        a, b = br.interval(lo, hi)
        if a < -tol or b > 1 + tol:
            report.violations.append(
                f"{label} range exceeds [0,1]: image is [{format_scalar(a)}, {format_scalar(b)}]")
        return
    xs = np.linspace(float(lo), float(hi), RANGE_SAMPLES)
    ys = br.eval_array(xs)
    if not np.all(np.isfinite(ys)):
        bad = xs[~np.isfinite(ys)][0]
        report.violations.append(f"{label} undefined at x={bad!r} (sqrt of negative or division by zero)")
        return
    if ys.min() < -tol or ys.max() > 1 + tol:
        report.violations.append(
            f"{label} range exceeds [0,1]: sampled values reach [{ys.min()!r}, {ys.max()!r}]")
        return
    try:
        a, b = br.interval(lo, hi)
    except _expr.IntervalDomainError as exc:
        report.warnings.append(f"{label}: interval bound failed ({exc}); range verified by sampling only (heuristic)")
        return
    if a < -tol or b > 1 + tol:
        report.warnings.append(
            f"{label}: interval bound [{a!r}, {b!r}] is inconclusive; range verified by sampling only (heuristic)")


def validate_map(m: PiecewiseMap) -> ValidationReport:
    """Collect every violation of the standing assumptions; never raises."""
    report = ValidationReport()
    part = m.partition
    tol = 0 if m.exact else FLOAT_RANGE_TOL
    if len(part) < 2 or part[0] != 0 or part[-1] != 1:
        report.violations.append("partition must start at 0 and end at 1")
    if any(b <= a for a, b in zip(part, part[1:])):
        report.violations.append("partition not strictly increasing")
    if len(m.branches) != len(part) - 1:
        report.violations.append(
            f"expected {len(part) - 1} branches for {len(part) - 1} pieces, got {len(m.branches)}")
        return report
    if len(m.sides) != len(part) - 2:
        report.violations.append(f"expected {len(part) - 2} breakpoint sides, got {len(m.sides)}")
    for i, br in enumerate(m.branches):
        if m.exact and br.kind != "affine":
            report.violations.append(f"branch {i + 1}: exact backend admits only affine branches, got {br.kind}")
            continue
        lo, hi = part[i], part[i + 1]
        if hi < lo:
            continue
        _check_range(m, i, br, lo, hi, report, tol)
    return report


__all__ = [
    "AffineBranch", "PolyBranch", "ExprBranch", "LateralLimit", "PiecewiseMap", "ValidationReport",
    "LEFT", "RIGHT", "EXACT", "FLOAT", "affine_map", "evaluate", "evaluate_many", "step", "piece_index",
    "piece_indices", "lateral_limits", "critical_set", "validate_map",
]
