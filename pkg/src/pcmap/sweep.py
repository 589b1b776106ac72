"""Monte Carlo sweep over partitions for a fixed family of branches.

Each sample draws ``0 < x_1 < ... < x_d < 1`` uniformly, builds the map
``f = phi_i`` on ``[x_{i-1}, x_i)`` (last piece closed) and records the
connection verdict.  Sample ``i`` uses its own generator seeded from
``(seed, i)``, so results do not depend on how samples are spread over
workers.
"""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .connections import CONNECTED, NO_CONNECTION, UNDECIDED, check_no_connections
from .core import PiecewiseMap
from .expr import IntervalDomainError
from .scalar import FLOAT

VERDICTS = (CONNECTED, NO_CONNECTION, UNDECIDED)


@dataclass(frozen=True)
class SweepConfig:
    branches: tuple
    samples: int = 1000
    depth: int = 1000
    tol: float = 1e-12
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(b.converted(FLOAT) for b in self.branches))
        if len(self.branches) < 2:
            raise ValueError("a sweep needs at least two branches (d >= 1)")
        if self.samples < 1 or self.depth < 1 or self.workers < 1:
            raise ValueError("samples, depth and workers must be positive")
        for i, br in enumerate(self.branches):
            _check_template(i, br)

    @property
    def d(self) -> int:
        return len(self.branches) - 1


def _check_template(i, br):
    """Branch templates must map all of [0, 1] into the open interval (0, 1)."""
    xs = np.linspace(0.0, 1.0, 1025)
    ys = br.eval_array(xs)
    bad = not np.all(np.isfinite(ys)) or ys.min() <= 0 or ys.max() >= 1
    if not bad and br.kind != "affine":
        try:
            lo, hi = br.interval(0.0, 1.0)
            bad = lo <= 0 or hi >= 1
        except IntervalDomainError:
            bad = True
    if bad:
        raise ValueError(f"branch template {i + 1} does not map [0, 1] into (0, 1)")


@dataclass(frozen=True)
class SweepRecord:
    index: int
    params: tuple
    verdict: str
    witness: str


@dataclass
class SweepResult:
    records: list
    seed: int
    depth: int
    tol: float
    counts: dict = field(default_factory=dict)

    @property
    def fractions(self) -> dict:
        n = len(self.records)
        return {v: self.counts.get(v, 0) / n for v in VERDICTS}

    def to_csv(self) -> str:
        d = len(self.records[0].params) if self.records else 0
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", *[f"x_{i}" for i in range(1, d + 1)], "verdict", "witness"])
        for r in self.records:
            w.writerow([r.index, *[repr(p) for p in r.params], r.verdict, r.witness])
        return buf.getvalue()

    def to_json(self) -> str:
        agg = {
            "samples": len(self.records),
            "seed": self.seed,
            "depth": self.depth,
            "tol": self.tol,
            "counts": {v: self.counts.get(v, 0) for v in VERDICTS},
            "fractions": self.fractions,
        }
        return json.dumps(agg, indent=2) + "\n"


def sample_partition(d: int, rng: np.random.Generator) -> tuple:
    """``d`` sorted uniform variates in (0, 1); redrawn on ties or a zero."""
    if d < 1:
        raise ValueError("d must be at least 1")
    while True:
        xs = np.sort(rng.random(d))
        if xs[0] > 0 and np.all(np.diff(xs) > 0):
            return tuple(float(x) for x in xs)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _one(config: SweepConfig, index: int) -> SweepRecord:
    params = sample_partition(config.d, sample_rng(config.seed, index))
    try:
        m = PiecewiseMap.from_interior(params, config.branches, backend=FLOAT)
        report = check_no_connections(m, config.depth, config.tol)
    except Exception as exc:  # recorded, never fatal to the sweep
        return SweepRecord(index, params, UNDECIDED, f"error: {exc}")
    witness = ""
    if report.witnesses:
        w = report.witnesses[0]
        witness = f"{w.source} step {w.step} -> x_{w.hit} (distance {w.distance!r})"
    return SweepRecord(index, params, report.verdict, witness)


def _chunk(args):
    config, indices = args
    return [_one(config, i) for i in indices]


def run_sweep(config: SweepConfig) -> SweepResult:
    indices = list(range(config.samples))
    if config.workers == 1:
        records = _chunk((config, indices))
    else:
        chunks = [indices[w::config.workers] for w in range(config.workers)]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_chunk, [(config, c) for c in chunks]))
        records = sorted((r for part in parts for r in part), key=lambda r: r.index)
    counts = Counter(r.verdict for r in records)
    return SweepResult(records, config.seed, config.depth, config.tol, dict(counts))
