"""Empirical orbit measures ``mu_n = (1/n) sum_{k<n} delta_{f^k(p)}``.

Everything here is computed from the finite sample multiset: integrals are
sample averages (never quadrature), the Wasserstein-1 distance is an exact
finite sum over the merged sample grid, and the invariance residual is checked
against its telescoped closed form.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np
from gmpy2 import gcd, lcm, mpq, mpz

from .core import PiecewiseMap, piece_index, step
from .errors import BasePointError, DomainError, MeasureMismatchError
from .orbits import iterate_points, orbit_stream
from .scalar import DEFAULT_BIT_BUDGET, EXACT, format_scalar, to_scalar

# Slack (in ulps of the result) allowed on the float telescoping identity.
TELESCOPING_ULPS = 8


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Orbit samples with implicit weight ``1/n`` each.

    ``points`` keeps the orbit order; ``samples`` is the sorted array used for
    CDF queries, built on first access.  ``endpoint`` is ``f^n(p)``, the first
    point past the samples, when known.
    """

    base: object
    n: int
    points: tuple
    backend: str
    endpoint: object = None

    @classmethod
    def from_points(cls, points, base, backend: str, endpoint=None) -> "EmpiricalMeasure":
        if backend == EXACT:
            pts = tuple(to_scalar(x, backend) for x in points)
        else:
            pts = tuple(float(x) for x in points)
        return cls(base, len(pts), pts, backend, endpoint)

    @cached_property
    def samples(self) -> np.ndarray:
        if not self.exact:
            return np.sort(np.asarray(self.points, dtype=float))
        arr = np.empty(self.n, dtype=object)
        arr[:] = _sorted_exact(list(self.points))
        return arr

    @property
    def exact(self) -> bool:
        return self.backend == EXACT

    def mass(self, count: int):
        return mpq(count, self.n) if self.exact else count / self.n


def _sorted_exact(points) -> list:
    """Sort rationals by float value, comparing exactly only within float ties.

    Conversion to float is monotone, so this is the exact order; it avoids
    cross-multiplying long numerators in every comparison.
    """
    keys = np.array([float(x) for x in points])
    order = np.argsort(keys, kind="stable")
    out = [points[i] for i in order]
    sk = keys[order]
    ties = np.flatnonzero(sk[1:] == sk[:-1])
    i = 0
    while i < len(ties):
        start = ties[i]
        j = i
        while j + 1 < len(ties) and ties[j + 1] == ties[j] + 1:
            j += 1
        stop = ties[j] + 2
        out[start:stop] = sorted(out[start:stop])
        i = j + 1
    return out


class TestFunction:
    """A continuous test function on [0, 1] with a sup-norm bound ``M``.

    Build with :meth:`polynomial` (coefficients ascending) or
    :meth:`piecewise_linear` (nodes ``(x, y)`` with x from 0 to 1).
    """

    __test__ = False  # not a pytest class

    def __init__(self, kind: str, data: tuple, bound, backend: str):
        self.kind = kind
        self.data = data
        self.bound = bound
        self.backend = backend

    @classmethod
    def polynomial(cls, coeffs, backend: str = "float") -> "TestFunction":
        cs = tuple(to_scalar(c, backend) for c in coeffs)
        if not cs:
            raise ValueError("polynomial needs at least one coefficient")
        fc = [float(c) for c in cs]
        candidates = [0.0, 1.0]
        if len(fc) > 2:
            deriv = np.polynomial.polynomial.polyder(fc)
            if np.any(deriv):
                roots = np.polynomial.polynomial.polyroots(deriv)
                candidates += [r.real for r in roots if abs(r.imag) < 1e-9 and 0 <= r.real <= 1]
        peak = max(abs(float(np.polynomial.polynomial.polyval(c, fc))) for c in candidates)
        # inflate: the critical points are only known to float accuracy
        bound = to_scalar(repr(peak * (1 + 1e-9) + 1e-15), backend)
        return cls("poly", cs, bound, backend)

    @classmethod
    def piecewise_linear(cls, nodes, backend: str = "float") -> "TestFunction":
        pts = tuple((to_scalar(x, backend), to_scalar(y, backend)) for x, y in nodes)
        if len(pts) < 2 or pts[0][0] != 0 or pts[-1][0] != 1:
            raise ValueError("piecewise-linear nodes must run from x=0 to x=1")
        if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise ValueError("piecewise-linear nodes must be strictly increasing in x")
        bound = max(abs(y) for _, y in pts)
        return cls("pl", pts, bound, backend)

    def __call__(self, x):
        if self.kind == "poly":
            acc = self.data[-1]
            for c in reversed(self.data[:-1]):
                acc = acc * x + c
            return acc
        pts = self.data
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return pts[-1][1]


def choose_base_point(m: PiecewiseMap, q, max_skip: int = 16, depth: int = 10_000, tol=1e-12,
                      return_skip: bool = False, bit_budget: int = DEFAULT_BIT_BUDGET):
    """Smallest ``l <= max_skip`` such that ``p = f^l(q)`` and its next
    ``depth - 1`` images all stay off the critical set.

    "Off" means not a member (exact backend) or at distance greater than
    ``tol`` (float backend).  The point ``p`` itself is included in the check.
    Raises :class:`BasePointError` when no such ``l`` exists.
    """
    part = m.partition
    hits = []
    for k, x, _ in orbit_stream(m, q, max_skip + depth, bit_budget):
        if m.exact:
            near = x in part
        else:
            near = min(abs(x - v) for v in part) <= tol
        if near:
            hits.append(k)
    skip = 0
    for h in hits:
        if h < skip:
            continue
        if h >= skip + depth:
            break
        skip = h + 1
        if skip > max_skip:
            raise BasePointError(
                f"every orbit tail f^l(q), l <= {max_skip}, meets the critical set within {depth} steps "
                f"(last hit at step {h}); the map may have a connection")
    p = iterate_points(m, q, skip + 1, bit_budget)[-1]
    return (p, skip) if return_skip else p


def empirical_measure(m: PiecewiseMap, p, n: int, bit_budget: int = DEFAULT_BIT_BUDGET) -> EmpiricalMeasure:
    if n < 1:
        raise ValueError("n must be at least 1")
    pts = iterate_points(m, p, n + 1, bit_budget)
    return EmpiricalMeasure.from_points(pts[:n], pts[0], m.backend, pts[n])


def _point(mu: EmpiricalMeasure, x):
    x = to_scalar(x, mu.backend)
    if not 0 <= x <= 1:
        raise DomainError(f"point {format_scalar(x)} outside [0, 1]")
    return x


def cdf_eval(mu: EmpiricalMeasure, x):
    """``mu_n([0, x])``: right-continuous, values in ``{0, 1/n, ..., 1}``."""
    return mu.mass(int(np.searchsorted(mu.samples, _point(mu, x), side="right")))


def cdf_left(mu: EmpiricalMeasure, x):
    """``mu_n([0, x))``, the left limit of the CDF at ``x``."""
    return mu.mass(int(np.searchsorted(mu.samples, _point(mu, x), side="left")))


def cdf_many(mu: EmpiricalMeasure, xs) -> np.ndarray:
    """Float CDF values on an array of points (for grids and plots)."""
    xs = np.asarray(xs, dtype=float)
    samples = mu.samples.astype(float) if mu.exact else mu.samples
    return np.searchsorted(samples, xs, side="right") / mu.n


def wasserstein1(m1: EmpiricalMeasure, m2: EmpiricalMeasure):
    """``int_0^1 |F_1 - F_2| dx`` as an exact sum over the merged sample grid."""
    if m1.backend != m2.backend:
        raise ValueError("measures use different backends")
    if not m1.exact:
        z = np.sort(np.concatenate([m1.samples, m2.samples]))
        f1 = np.searchsorted(m1.samples, z[:-1], side="right") / m1.n
        f2 = np.searchsorted(m2.samples, z[:-1], side="right") / m2.n
        return float(np.sum(np.abs(f1 - f2) * np.diff(z)))
    a, b = list(m1.samples), list(m2.samples)
    n1, n2 = m1.n, m2.n
    i = j = 0
    total = mpq(0)
    prev = None
    # integer numerator |c1*n2 - c2*n1| of the CDF gap on [prev, z)
    while i < n1 or j < n2:
        z = a[i] if j >= n2 or (i < n1 and a[i] <= b[j]) else b[j]
        if prev is not None and z != prev:
            total += abs(i * n2 - j * n1) * (z - prev)
        while i < n1 and a[i] == z:
            i += 1
        while j < n2 and b[j] == z:
            j += 1
        prev = z
    return total / (n1 * n2)


def invariance_residual(m: PiecewiseMap, mu: EmpiricalMeasure, phi: TestFunction,
                        bit_budget: int = DEFAULT_BIT_BUDGET):
    """``|int phi∘f dmu_n - int phi dmu_n|``.

    Both integrals are sample averages and the difference is taken as one
    sum (exactly rounded via ``math.fsum`` on floats).  The result is checked
    against the telescoped form ``|phi(f^n(p)) - phi(p)| / n``: exactly under
    the exact backend, within 8 ulps under floats.
    """
    if mu.backend != m.backend:
        raise MeasureMismatchError("measure and map use different backends")
    points = mu.points
    p = to_scalar(mu.base, m.backend)
    if not any(x == p for x in points):
        raise MeasureMismatchError("base point is not among the samples")
    if mu.n > 1:
        fp, _ = step(m, p)
        if not any(x == fp for x in points):
            raise MeasureMismatchError("f(p) is not among the samples: measure was built from another map")
    last = mu.endpoint
    if last is None:
        last = iterate_points(m, p, mu.n + 1, bit_budget)[-1]
    telescoped = phi(last) - phi(p)
    if m.exact:
        if phi.kind == "poly" and all(br.kind == "affine" for br in m.branches):
            diff = _affine_poly_diff(m, phi.data, points)
        else:
            diff = sum((phi(step(m, s)[0]) - phi(s) for s in points), mpq(0))
        if diff != telescoped:
            raise RuntimeError(f"telescoping identity failed: {diff} != {telescoped}")
        return abs(diff) / mu.n
    diff = math.fsum([phi(step(m, s)[0]) for s in points] + [-phi(s) for s in points])
    if abs(diff - telescoped) > TELESCOPING_ULPS * math.ulp(abs(telescoped)):
        raise RuntimeError(f"telescoping identity failed: {diff!r} vs {telescoped!r}")
    return abs(diff) / mu.n


def _pullback_minus(coeffs, slope, intercept) -> list:
    """Coefficients of ``phi(slope * x + intercept) - phi(x)``."""
    comp = [mpq(0)]
    for c in reversed(coeffs):
        nxt = [mpq(0)] * (len(comp) + 1)
        for k, v in enumerate(comp):
            nxt[k] += v * intercept
            nxt[k + 1] += v * slope
        nxt[0] += c
        comp = nxt
    return [comp[k] - coeffs[k] for k in range(len(coeffs))]


def _power_sums(xs, deg: int):
    """``(D, [S_0, ..., S_deg])`` with ``sum x^j = S_j / D^j`` in integers.

    Samples are taken in order of denominator size and ``D`` grows to each new
    denominator in turn.  Orbit denominators under contracting branches are
    usually nested, so the rescaling factor is small and the accumulators are
    only ever multiplied by short integers; otherwise ``D`` becomes the lcm.
    """
    big_d = mpz(1)
    sums = [mpz(0)] * (deg + 1)
    for x in sorted(xs, key=lambda v: v.denominator):
        den = x.denominator
        q, r = divmod(den, big_d)
        if r:
            g = gcd(big_d, den)
            q, scale = den // g, big_d // g
        else:
            scale = mpz(1)
        if q != 1:
            qp = q
            for j in range(1, deg + 1):
                sums[j] *= qp
                qp *= q
            big_d *= q
        a = x.numerator * scale
        ap = a
        sums[0] += 1
        for j in range(1, deg + 1):
            sums[j] += ap
            if j < deg:
                ap *= a
    return big_d, sums


def _affine_poly_diff(m: PiecewiseMap, coeffs, samples):
    """``sum_k (phi∘f - phi)(x_k)`` for polynomial ``phi`` and affine ``f``.

    On piece ``i`` the integrand is one polynomial ``psi_i``, so the sum is
    ``sum_j psi_ij * sum_k x_k^j`` over the samples in that piece.  The power
    sums are accumulated in integers; per-term mpq arithmetic would reduce by
    a gcd at every step, which dominates once orbit denominators reach
    thousands of bits.
    """
    polys = [_pullback_minus(coeffs, br.slope, br.intercept) for br in m.branches]
    groups = [[] for _ in polys]
    for x in samples:
        groups[piece_index(m, x)].append(x)
    deg = len(coeffs) - 1
    total = mpq(0)
    for poly, xs in zip(polys, groups):
        if not xs:
            continue
        big_d, sums = _power_sums(xs, deg)
        c_den = reduce(lcm, (c.denominator for c in poly), mpz(1))
        acc = mpz(0)
        for j, c in enumerate(poly):
            acc += c.numerator * (c_den // c.denominator) * sums[j] * big_d ** (deg - j)
        total += mpq(acc, c_den * big_d ** deg)
    return total


def invariance_bound(phi: TestFunction, n: int):
    """``2 M / n``, the telescoping bound on :func:`invariance_residual`."""
    return 2 * phi.bound / n


def max_local_mass(mu: EmpiricalMeasure, delta):
    """Largest mass ``mu_n([x - delta, x + delta])`` over sample centres ``x``."""
    delta = to_scalar(delta, mu.backend)
    if not delta > 0:
        raise ValueError("delta must be positive")
    s = mu.samples
    hi = np.searchsorted(s, s + delta, side="right")
    lo = np.searchsorted(s, s - delta, side="left")
    return mu.mass(int(np.max(hi - lo)))


def largest_atom(mu: EmpiricalMeasure):
    """Largest multiplicity of one sample value, as a mass."""
    s = mu.samples
    best = run = 1
    for a, b in zip(s[:-1], s[1:]):
        run = run + 1 if a == b else 1
        best = max(best, run)
    return mu.mass(best)


def convergence_diag(m: PiecewiseMap, p, schedule, bit_budget: int = DEFAULT_BIT_BUDGET) -> list[tuple]:
    """``[(n_j, W1(mu_{n_j}, mu_{n_{j-1}}))]`` for ``j >= 1`` along ``schedule``.

    The orbit is computed once, up to the last entry of the schedule.
    """
    schedule = list(schedule)
    if len(schedule) < 2 or any(b <= a for a, b in zip(schedule, schedule[1:])) or schedule[0] < 1:
        raise ValueError("schedule must hold at least two strictly increasing positive counts")
    pts = iterate_points(m, p, schedule[-1], bit_budget)
    measures = [EmpiricalMeasure.from_points(pts[:n], pts[0], m.backend, pts[n] if n < len(pts) else None)
                for n in schedule]
    return [(n, wasserstein1(cur, prev)) for n, prev, cur in zip(schedule[1:], measures, measures[1:])]


def samples_csv(mu: EmpiricalMeasure) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x"])
    for s in mu.samples:
        w.writerow([format_scalar(s)])
    return buf.getvalue()


def cdf_grid_csv(mu: EmpiricalMeasure, resolution: int = 1000) -> str:
    """Plot-ready ``x,cdf`` rows on ``x = j / resolution``, as floats."""
    xs = np.arange(resolution + 1) / resolution
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "cdf"])
    for x, c in zip(xs, cdf_many(mu, xs)):
        w.writerow([repr(float(x)), repr(float(c))])
    return buf.getvalue()
