import numpy as np
import pytest

from pcmap import CONNECTED, NO_CONNECTION, UNDECIDED, AffineBranch, ExprBranch, SweepConfig, run_sweep
from pcmap.sweep import sample_partition, sample_rng

CONSTANTS = [AffineBranch(0.0, c) for c in (0.2, 0.5, 0.7)]
HALF_SLOPE = [AffineBranch(0.5, 0.125), AffineBranch(0.5, 0.375)]


def test_sample_partition_shapes():
    (x,) = sample_partition(1, sample_rng(0, 0))
    assert 0 < x < 1
    a = sample_partition(3, sample_rng(42, 7))
    assert a == sample_partition(3, sample_rng(42, 7))
    assert list(a) == sorted(a) and len(set(a)) == 3


def test_sample_partition_uniform_on_simplex():
    rng = np.random.default_rng(1)
    hits = sum(sample_partition(2, rng)[0] < 0.5 for _ in range(10 ** 5))
    assert 0.74 <= hits / 10 ** 5 <= 0.76


def test_config_validation():
    with pytest.raises(ValueError, match="template 1"):
        SweepConfig([AffineBranch(1.0, 0.0), AffineBranch(0.0, 0.5)])
    with pytest.raises(ValueError):
        SweepConfig(CONSTANTS, samples=0)
    with pytest.raises(ValueError, match="template 2"):
        SweepConfig([AffineBranch(0.0, 0.5), ExprBranch.from_text("x * x")])
    SweepConfig([AffineBranch(0.0, 0.5), ExprBranch.from_text("0.1 + 0.8 * x * x")])


def test_constant_family():
    result = run_sweep(SweepConfig(CONSTANTS, samples=300, depth=1000, seed=3))
    assert result.counts.get(CONNECTED, 0) == 0
    assert result.fractions[NO_CONNECTION] + result.fractions[UNDECIDED] == 1
    assert len(result.records) == 300
    assert sum(result.fractions.values()) == pytest.approx(1)


def test_half_slope_family():
    result = run_sweep(SweepConfig(HALF_SLOPE, samples=1000, depth=64, tol=1e-12))
    assert result.fractions[CONNECTED] < 0.01


def test_determinism_and_worker_independence():
    config = SweepConfig(HALF_SLOPE, samples=40, depth=64, seed=11)
    one = run_sweep(config)
    assert one.to_csv() == run_sweep(config).to_csv()
    assert one.to_json() == run_sweep(config).to_json()
    parallel = run_sweep(SweepConfig(HALF_SLOPE, samples=40, depth=64, seed=11, workers=3))
    assert parallel.to_csv() == one.to_csv()


def test_single_sample_repeat():
    config = SweepConfig(CONSTANTS, samples=1, depth=10, seed=5)
    assert run_sweep(config).to_csv() == run_sweep(config).to_csv()


def test_undecided_nonincreasing_as_tol_shrinks():
    counts = []
    for tol in (1e-2, 1e-4, 1e-8, 1e-12):
        result = run_sweep(SweepConfig(HALF_SLOPE, samples=200, depth=64, tol=tol, seed=2))
        counts.append(result.counts.get(UNDECIDED, 0))
        assert result.counts.get(CONNECTED, 0) == 0
    assert counts == sorted(counts, reverse=True)


def test_csv_layout():
    text = run_sweep(SweepConfig(CONSTANTS, samples=2, depth=5)).to_csv()
    lines = text.splitlines()
    assert lines[0] == "index,x_1,x_2,verdict,witness"
    assert len(lines) == 3


def test_instantiated_maps_are_valid():
    from pcmap import PiecewiseMap, validate_map
    for i in range(50):
        params = sample_partition(2, sample_rng(0, i))
        assert validate_map(PiecewiseMap.from_interior(params, CONSTANTS, backend="float")).ok
