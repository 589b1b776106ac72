"""Forward orbits, itineraries and periodic points."""
from __future__ import annotations

import csv
import io
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterator

from .core import PiecewiseMap, step
from .errors import DomainError, ResourceBudgetError
from .scalar import DEFAULT_BIT_BUDGET, format_scalar, hash_key

# Default cap on itinerary words examined by find_periodic_affine.
DEFAULT_MAX_WORDS = 1_000_000


@dataclass(frozen=True)
class Orbit:
    """``points[k] = f^k(base)``; ``itinerary[k]`` is the 1-based piece used at step k."""

    base: object
    points: tuple
    itinerary: tuple

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class PeriodicOrbitRecord:
    point: object
    period: int
    certified: bool


def orbit_stream(m: PiecewiseMap, p, n: int, bit_budget: int = DEFAULT_BIT_BUDGET) -> Iterator[tuple]:
    """Yield ``(k, f^k(p), piece_k)`` for ``k < n`` with 0-based pieces.

    Exact maps raise :class:`ResourceBudgetError` as soon as a denominator
    exceeds ``bit_budget`` bits.
    """
    x = m.scalar(p)
    if not 0 <= x <= 1:
        raise DomainError(f"base point {format_scalar(x)} outside [0, 1]")
    exact = m.exact
    for k in range(n):
        if exact and x.denominator.bit_length() > bit_budget:
            raise ResourceBudgetError(
                f"iterate {k}: denominator has {x.denominator.bit_length()} bits, budget is {bit_budget}")
        y, j = step(m, x)
        yield k, x, j
        x = y


def iterate_points(m: PiecewiseMap, p, n: int, bit_budget: int = DEFAULT_BIT_BUDGET) -> list:
    return [x for _, x, _ in orbit_stream(m, p, n, bit_budget)]


def iterate_orbit(m: PiecewiseMap, p, n: int, bit_budget: int = DEFAULT_BIT_BUDGET) -> Orbit:
    if n < 1:
        raise ValueError("n must be at least 1")
    points, itinerary = [], []
    for _, x, j in orbit_stream(m, p, n, bit_budget):
        points.append(x)
        itinerary.append(j + 1)
    return Orbit(points[0], tuple(points), tuple(itinerary))


def itinerary_word(orbit: Orbit) -> str:
    if max(orbit.itinerary) < 10:
        return "".join(str(i) for i in orbit.itinerary)
    return ",".join(str(i) for i in orbit.itinerary)


def orbit_csv(orbit: Orbit) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "x_k", "piece_k"])
    for k, (x, j) in enumerate(zip(orbit.points, orbit.itinerary)):
        w.writerow([k, format_scalar(x), j])
    return buf.getvalue()


def detect_cycle(m: PiecewiseMap, p, max_iter: int, tol=0,
                 bit_budget: int = DEFAULT_BIT_BUDGET) -> PeriodicOrbitRecord | None:
    """First recurrence ``f^k(p) ~ f^j(p)`` with ``j < k <= max_iter``.

    Exact maps test equality and certify the record.  Float maps accept
    ``|f^k(p) - f^j(p)| < tol`` (or exact float equality) and never
    certify; among several matching ``j`` the largest wins, i.e. the
    smallest period.
    """
    stream = orbit_stream(m, p, max_iter + 1, bit_budget)
    if m.exact:
        seen = {}
        for k, x, _ in stream:
            key = hash_key(x)
            j = seen.get(key)
            if j is not None:
                return PeriodicOrbitRecord(x, k - j, True)
            seen[key] = k
        return None
    tol = float(tol)
    values, indices = [], []
    for k, x, _ in stream:
        lo = bisect_left(values, x - tol)
        hi = bisect_right(values, x + tol)
        best = None
        for pos in range(lo, hi):
            dist = abs(values[pos] - x)
            if dist < tol or dist == 0:
                j = indices[pos]
                if best is None or j > best[0]:
                    best = (j, values[pos])
        if best is not None:
            return PeriodicOrbitRecord(best[1], k - best[0], False)
        pos = bisect_right(values, x)
        values.insert(pos, x)
        indices.insert(pos, k)
    return None


def _verify_periodic(m, x, word):
    """Return the orbit of ``x`` if its itinerary is ``word`` and it closes up minimally."""
    orbit = []
    y = x
    for symbol in word:
        if orbit and y == x:
            return None  # shorter period: found under its primitive word
        y_next, j = step(m, y)
        if j != symbol:
            return None
        orbit.append(y)
        y = y_next
    return orbit if y == x else None


def _family(m, word, lo, hi):
    """Representative of an interval of period-``len(word)`` points.

    Points of lower period in the interval are isolated (at most one per
    proper sub-period), so one of ``len(word) + 2`` interior candidates works.
    The family is keyed by the smallest left end of its cylinder orbit, which
    is the same for every word along the orbit.
    """
    n = len(word)
    cands = [(lo + hi) / 2] + [lo + (hi - lo) * k / (n + 3) for k in range(1, n + 3)]
    for x in cands:
        orbit = _verify_periodic(m, x, word)
        if orbit is not None:
            break
    else:
        return None
    ends, (u, v) = [], (lo, hi)
    for symbol in word:
        ends.append(u)
        br = m.branches[symbol]
        u, v = sorted((br(u), br(v)))
    return ("family", min(ends)), PeriodicOrbitRecord(min(orbit), n, True)


def find_periodic_affine(m: PiecewiseMap, max_period: int,
                         max_words: int = DEFAULT_MAX_WORDS) -> list[PeriodicOrbitRecord]:
    """All periodic orbits of period ``<= max_period`` of an exact affine map.

    Enumerates itinerary words breadth-first.  For each word ``w`` the set
    ``J_w`` of points following ``w`` is tracked as a closed interval together
    with the composed affine map ``A_w``; words with empty ``J_w`` are pruned.
    Fixed points of ``A_w`` inside ``J_w`` are verified by exact iteration.
    When ``A_w`` is the identity (a whole interval of periodic points, as for
    rational rotations) one interior point represents the family.  Each orbit
    is reported once, by its smallest point.
    """
    if not m.exact or any(b.kind != "affine" for b in m.branches):
        raise ValueError("find_periodic_affine needs an exact map with affine branches")
    part = m.partition
    hulls = [(part[i], part[i + 1]) for i in range(m.d + 1)]
    coeffs = [(b.slope, b.intercept) for b in m.branches]
    level = [((i,), lo, hi, a, b) for i, ((lo, hi), (a, b)) in enumerate(zip(hulls, coeffs))]
    found = {}
    words = 0
    for length in range(1, max_period + 1):
        nxt = []
        for word, lo, hi, a, b in level:
            words += 1
            if words > max_words:
                raise ResourceBudgetError(f"word budget exhausted after examining {words - 1} itinerary words")
            if a != 1:
                cand = b / (1 - a)
                if lo <= cand <= hi:
                    orbit = _verify_periodic(m, cand, word)
                    if orbit is not None:
                        found.setdefault(min(orbit), PeriodicOrbitRecord(min(orbit), length, True))
            elif b == 0 and lo < hi:
                rec = _family(m, word, lo, hi)
                if rec is not None:
                    found.setdefault(rec[0], rec[1])
            if length == max_period:
                continue
            for j, ((plo, phi), (s, t)) in enumerate(zip(hulls, coeffs)):
                # J' = J ∩ A^{-1}(hull_j)
                if a == 0:
                    if not plo <= b <= phi:
                        continue
                    nlo, nhi = lo, hi
                else:
                    u, v = (plo - b) / a, (phi - b) / a
                    if u > v:
                        u, v = v, u
                    nlo, nhi = max(lo, u), min(hi, v)
                    if nlo > nhi:
                        continue
                nxt.append((word + (j,), nlo, nhi, s * a, s * b + t))
        level = nxt
    return sorted(found.values(), key=lambda r: (r.period, r.point))
