"""The no-connections condition and orbit mass near breakpoints.

A map has no connections when no forward image ``f^k(x_i)`` (``k >= 1``) of
a breakpoint and no forward image ``f^k(w)`` (``k >= 0``) of a lateral limit
lands in the critical set ``D``.  Only finitely many steps can be checked, so
the clean verdict is ``NO_CONNECTION_UP_TO_DEPTH``.  Under the float backend a
near hit cannot be told apart from a real one and is reported as
``UNDECIDED``.
"""
from __future__ import annotations

import csv
import io
import json
from bisect import bisect_left
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import PiecewiseMap, lateral_limits, step
from .orbits import iterate_points, orbit_stream
from .scalar import DEFAULT_BIT_BUDGET, format_scalar, hash_key

CONNECTED = "CONNECTED"
NO_CONNECTION = "NO_CONNECTION_UP_TO_DEPTH"
UNDECIDED = "UNDECIDED"

DEFAULT_DEPTH = 10_000
DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class Witness:
    source: str      # "x_i" or "w_i^±"
    step: int
    hit: int         # index of the breakpoint reached
    hit_value: object
    distance: object


@dataclass
class ConnectionReport:
    verdict: str
    depth: int
    tol: float | None
    witnesses: list = field(default_factory=list)
    include_endpoints: bool = True

    def to_dict(self) -> dict:
        out = asdict(self)
        out["witnesses"] = [
            {**asdict(w), "hit_value": format_scalar(w.hit_value), "distance": format_scalar(w.distance)}
            for w in self.witnesses
        ]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _sources(m: PiecewiseMap):
    """Seed orbits in report order: breakpoints first (from step 1), then lateral limits."""
    out = [(f"x_{i}", x, 1) for i, x in enumerate(m.partition)]
    out += [(w.tag, w.value, 0) for w in lateral_limits(m)]
    return out


def _scan(m, start, first_step, depth, targets, tol, bit_budget):
    """First step in ``[first_step, depth]`` where the orbit of ``start`` meets the targets.

    An orbit that revisits a value already examined is periodic from there
    on, so the scan stops early without changing the outcome.
    """
    values = [v for _, v in targets]
    seen = set()
    for k, x, _ in orbit_stream(m, start, depth + 1, bit_budget):
        if k < first_step:
            continue
        key = hash_key(x)
        if key in seen:
            return None
        seen.add(key)
        if m.exact:
            for idx, v in targets:
                if x == v:
                    return k, idx, v, x - x
        else:
            pos = bisect_left(values, x)
            for cand in (pos - 1, pos):
                if 0 <= cand < len(values):
                    dist = abs(values[cand] - x)
                    if dist <= tol:
                        return k, targets[cand][0], values[cand], dist
    return None


def check_no_connections(m: PiecewiseMap, depth: int = DEFAULT_DEPTH, tol=DEFAULT_TOL,
                         include_endpoints: bool = True,
                         bit_budget: int = DEFAULT_BIT_BUDGET) -> ConnectionReport:
    """Check both conditions of the no-connections property up to ``depth``.

    Every breakpoint is iterated for steps ``1..depth`` and every lateral
    limit for steps ``0..depth``; each seed contributes at most one witness
    (its first hit).  ``include_endpoints=False`` drops 0 and 1 from the
    target set, which is the usual convention for rotations and IETs whose
    lateral limits at the wrap-around point are 0 and 1 themselves.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    targets = list(enumerate(m.partition))
    if not include_endpoints:
        targets = targets[1:-1]
    tol_used = None if m.exact else float(tol)
    witnesses = []
    for tag, start, first_step in _sources(m):
        hit = _scan(m, start, first_step, depth, targets, tol_used, bit_budget)
        if hit is not None:
            k, idx, value, dist = hit
            witnesses.append(Witness(tag, k, idx, value, dist))
    if not witnesses:
        verdict = NO_CONNECTION
    else:
        verdict = CONNECTED if m.exact else UNDECIDED
    return ConnectionReport(verdict, depth, tol_used, witnesses, include_endpoints)


def breakpoint_mass(m: PiecewiseMap, p, n: int, radius,
                    bit_budget: int = DEFAULT_BIT_BUDGET) -> list[tuple]:
    """``mu_n`` of the closed ball of ``radius`` around each breakpoint.

    Returns ``(x_i, #{k < n : |f^k(p) - x_i| <= radius} / n)`` pairs; the
    mass is an exact rational under the exact backend.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    r = m.scalar(radius)
    if not r > 0:
        raise ValueError("radius must be positive")
    part = m.partition
    if m.exact:
        bounds = [(x - r, x + r) for x in part]
        counts = [0] * len(part)
        for _, y, _ in orbit_stream(m, p, n, bit_budget):
            for i, (lo, hi) in enumerate(bounds):
                if lo <= y <= hi:
                    counts[i] += 1
        return [(x, m.scalar(c) / n) for x, c in zip(part, counts)]
    ys = np.array(iterate_points(m, p, n), dtype=float)
    return [(x, int(np.count_nonzero(np.abs(ys - x) <= r)) / n) for x in part]


def breakpoint_mass_csv(masses) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["breakpoint", "mass"])
    for x, mass in masses:
        w.writerow([format_scalar(x), format_scalar(mass)])
    return buf.getvalue()


def avoidance_radius(m: PiecewiseMap, x, steps: int, samples: int = 65,
                     start_radius=0.1, min_radius=1e-9):
    """Largest radius ``r`` (halving from ``start_radius``) such that every
    sampled ``y`` in the ball ``|y - x| <= r`` keeps ``f(y), ..., f^steps(y)``
    outside that ball.  Returns ``None`` if none down to ``min_radius``.

    This is a sampled check, not a proof.  When it succeeds, an orbit spends
    at most one step in ``steps + 1`` inside the ball, so
    ``breakpoint_mass`` there is at most ``1/(steps+1) + 1/n``.
    """
    x = m.scalar(x)
    r = m.scalar(start_radius)
    floor = m.scalar(min_radius)
    while r >= floor:
        lo, hi = max(x - r, m.scalar(0)), min(x + r, m.scalar(1))
        ok = True
        for j in range(samples):
            y = lo + (hi - lo) * j / (samples - 1) if samples > 1 else x
            z = y
            for _ in range(steps):
                z, _ = step(m, z)
                if abs(z - x) <= r:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return r
        r = r / 2
    return None
