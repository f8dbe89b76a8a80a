"""Unit tests for the Monte-Carlo runner and the curve emitter."""

import csv
import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from gslms.config import AlgorithmSpec, ExperimentConfig, config_hash, parse_config
from gslms.harness import (
    STEADY_STATE_WINDOW,
    LearningCurve,
    emit_curves,
    experiment_schedule,
    run_experiment,
    stage_windows,
    steady_state_db,
)
from gslms.signals import benchmark_schedule


def _small_cfg(**kw):
    defaults = dict(
        experiment="unit",
        runs=3,
        iterations=300,
        master_seed=4242,
        algorithms=(
            AlgorithmSpec(name="lms", mu=0.02),
            AlgorithmSpec(name="grza", mode="grza", mu=0.02, rho=1e-4),
        ),
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


# ---------------------------------------------------------------------------
# run_experiment


def test_zero_iterations_gives_empty_curves():
    cfg = _small_cfg(runs=1, iterations=0)
    curves = run_experiment(cfg)
    assert len(curves) == 2
    for c in curves:
        assert c.msd.shape == (0,)
        assert c.runs_used == 1
        assert c.metadata["master_seed"] == 4242
        assert c.metadata["iterations"] == 0


def test_no_algorithms_rejected():
    with pytest.raises(ValueError):
        run_experiment(_small_cfg(algorithms=()))


def test_paired_streams_make_identical_algorithms_agree():
    cfg = _small_cfg(
        algorithms=(
            AlgorithmSpec(name="a", mu=0.02),
            AlgorithmSpec(name="b", mu=0.02),
        )
    )
    a, b = run_experiment(cfg)
    assert_array_equal(a.msd, b.msd)


def test_run_average_is_deterministic():
    cfg = _small_cfg()
    first = run_experiment(cfg)
    second = run_experiment(cfg)
    for c1, c2 in zip(first, second):
        assert_array_equal(c1.msd, c2.msd)


def test_master_seed_changes_results():
    base = run_experiment(_small_cfg())[0]
    other = run_experiment(_small_cfg(master_seed=999))[0]
    assert not np.array_equal(base.msd, other.msd)


def test_worker_count_invariance():
    """Partial sums merge in run-index order, so workers cannot change bits."""
    cfg = _small_cfg(
        runs=4,
        algorithms=(
            AlgorithmSpec(name="lms", mu=0.02),
            AlgorithmSpec(name="vp-gza", mode="gza", variable=True),
        ),
    )
    serial = run_experiment(cfg, workers=1)
    pooled = run_experiment(cfg, workers=2)
    for c1, c2 in zip(serial, pooled):
        assert c1.name == c2.name
        assert_array_equal(c1.msd, c2.msd)
        if c1.mu_trace is not None:
            assert_array_equal(c1.mu_trace, c2.mu_trace)
            assert_array_equal(c1.lambda_trace, c2.lambda_trace)


def test_variable_algorithm_produces_traces():
    cfg = _small_cfg(
        algorithms=(
            AlgorithmSpec(name="vp-grza", mode="grza", variable=True),
            AlgorithmSpec(name="lms", mu=0.02),
        )
    )
    vp, lms = run_experiment(cfg)
    assert vp.mu_trace is not None and vp.lambda_trace is not None
    assert vp.mu_trace.shape == (300,)
    assert np.all(vp.mu_trace >= 0.0)
    assert lms.mu_trace is None and lms.lambda_trace is None


def test_diverged_runs_are_counted_and_excluded():
    # mu = 1.0 at L = 35 grows the weights by roughly half a decade per
    # iteration; they cross the double-precision ceiling only around
    # iteration six hundred, so the horizon must reach past that
    cfg = _small_cfg(
        runs=2,
        iterations=800,
        algorithms=(
            AlgorithmSpec(name="unstable", mu=1.0),
            AlgorithmSpec(name="stable", mu=0.01),
        ),
    )
    with np.errstate(over="ignore", invalid="ignore"):
        unstable, stable = run_experiment(cfg)
    assert unstable.diverged_runs == 2
    assert unstable.runs_used == 0
    assert stable.diverged_runs == 0
    assert stable.runs_used == 2
    assert np.all(np.isfinite(stable.msd))


def test_measured_input_power_recorded():
    cfg = _small_cfg(runs=4, iterations=2000)
    power = run_experiment(cfg)[0].metadata["measured_input_power"]
    assert abs(power - 1.0) < 0.1


def test_learning_curve_rejects_negative_msd():
    with pytest.raises(ValueError):
        LearningCurve(
            name="x", msd=np.array([-1.0]), mu_trace=None, lambda_trace=None,
            runs_used=1, diverged_runs=0, metadata={},
        )


# ---------------------------------------------------------------------------
# schedule helpers


def test_experiment_schedule_trims_switches():
    assert [s for s, _ in experiment_schedule(_small_cfg(iterations=5000)).segments] == [1]
    assert [s for s, _ in experiment_schedule(_small_cfg(iterations=9000)).segments] == [1, 8000]
    assert [s for s, _ in experiment_schedule(_small_cfg(iterations=24000)).segments] == [1, 8000, 16000]


def test_stage_windows_cover_stage_tails():
    sched = benchmark_schedule()
    assert stage_windows(sched) == [(6999, 7999), (14999, 15999), (23000, 24000)]


def test_stage_windows_clip_to_short_stages():
    sched = benchmark_schedule((1, 8000), total_iterations=8300)
    assert stage_windows(sched) == [(6999, 7999), (7999, 8300)]


def test_steady_state_db_piecewise_levels():
    sched = benchmark_schedule()
    msd = np.empty(24000)
    for k, (lo, hi) in enumerate(sched.stage_bounds()):
        msd[lo:hi] = 10.0 ** (-(k + 1))
    assert steady_state_db(msd, sched) == pytest.approx([-10.0, -20.0, -30.0])


def test_steady_state_excludes_transition_sample():
    """The error spike on the switch sample must not leak into the window
    of the stage that just ended."""
    sched = benchmark_schedule()
    msd = np.full(24000, 1e-3)
    for lo, _ in sched.stage_bounds()[1:]:
        msd[lo] = 1e6  # plant jump: huge deviation on the first new sample
    values = steady_state_db(msd, sched)
    assert values[0] == pytest.approx(-30.0)
    # stages 2 and 3 contain their own opening spike only outside the tail
    assert values[1] == pytest.approx(-30.0)
    assert values[2] == pytest.approx(-30.0)


def test_parameter_traces_spike_at_plant_switch():
    """Both adapted-parameter traces jump when the plant changes."""
    cfg = _small_cfg(
        runs=2,
        iterations=9000,
        algorithms=(AlgorithmSpec(name="vp-grza", mode="grza", variable=True),),
    )
    (curve,) = run_experiment(cfg)
    for trace in (curve.mu_trace, curve.lambda_trace):
        before = trace[7000:7999].mean()
        spike = trace[7999:8999].max()
        assert spike > 3.0 * before


# ---------------------------------------------------------------------------
# emit_curves


def _read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows)


def test_emit_csv_round_trip(tmp_path):
    cfg = _small_cfg(
        algorithms=(
            AlgorithmSpec(name="lms", mu=0.02),
            AlgorithmSpec(name="vp-gza", mode="gza", variable=True),
        )
    )
    curves = run_experiment(cfg)
    paths = emit_curves(curves, cfg, tmp_path)
    assert sorted(p.split("/")[-1] for p in paths) == [
        "config.ini", "lms.csv", "manifest.json", "vp-gza.csv",
    ]

    header, data = _read_csv(tmp_path / "lms.csv")
    assert header == ["iter", "msd_linear", "msd_db"]
    assert_array_equal(data[:, 0], np.arange(1, 301))  # 1-based iterations
    assert_array_equal(data[:, 1], curves[0].msd)  # repr round trip is exact

    header, data = _read_csv(tmp_path / "vp-gza.csv")
    assert header == ["iter", "msd_linear", "msd_db", "mu", "lambda"]
    assert_array_equal(data[:, 3], curves[1].mu_trace)
    assert_array_equal(data[:, 4], curves[1].lambda_trace)


def test_emitted_db_column_is_definitional(tmp_path):
    cfg = _small_cfg()
    curves = run_experiment(cfg)
    emit_curves(curves, cfg, tmp_path)
    _, data = _read_csv(tmp_path / "lms.csv")
    assert_array_equal(data[:, 2], 10.0 * np.log10(data[:, 1]))


def test_emit_json_mirror(tmp_path):
    cfg = _small_cfg(format="json")
    curves = run_experiment(cfg)
    emit_curves(curves, cfg, tmp_path)
    payload = json.loads((tmp_path / "grza.json").read_text())
    assert payload["iter"] == list(range(1, 301))
    assert_array_equal(np.array(payload["msd_linear"]), curves[1].msd)
    assert payload["metadata"]["algorithm"] == "grza"
    assert payload["metadata"]["master_seed"] == 4242


def test_manifest_records_reproduction_inputs(tmp_path):
    cfg = _small_cfg()
    curves = run_experiment(cfg)
    emit_curves(curves, cfg, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["master_seed"] == cfg.master_seed
    assert manifest["runs"] == cfg.runs
    assert manifest["config_hash"] == config_hash(cfg)
    assert {c["algorithm"] for c in manifest["curves"]} == {"lms", "grza"}
    # the emitted config parses back to the exact experiment that ran
    assert parse_config((tmp_path / "config.ini").read_text()) == cfg


def test_emit_rejects_empty_and_unknown_format(tmp_path):
    cfg = _small_cfg()
    with pytest.raises(ValueError):
        emit_curves([], cfg, tmp_path)
    curves = run_experiment(cfg)
    with pytest.raises(ValueError):
        emit_curves(curves, cfg, tmp_path, fmt="yaml")


def test_emit_surfaces_io_errors(tmp_path):
    cfg = _small_cfg()
    curves = run_experiment(cfg)
    target = tmp_path / "blocked"
    target.write_text("a file, not a directory")
    with pytest.raises(OSError):
        emit_curves(curves, cfg, target)


def test_steady_state_window_constant():
    # the analysis window is the documented final-1000-sample stretch
    assert STEADY_STATE_WINDOW == 1000
