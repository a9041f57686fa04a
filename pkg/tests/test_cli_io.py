import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from pirtrack import fileio
from pirtrack.cli import main
from pirtrack.evaluation import (EmptyAfterBurnIn, EvalReport, PipelineConfig, PipelineError,
                                 evaluate, run_pipeline, sweep)
from pirtrack.scenarios import Trajectory, make_trajectory, waypoint_trajectory
from pirtrack.sensor_dynamics import SensorParams, SignalTrace, step_response
from pirtrack.tracker import MotionState

DATA = fileio.DATA_DIR


def shifted(traj, dx, dy):
    return [(t, MotionState(x + dx, y + dy)) for t, x, y in zip(traj.t, traj.x, traj.y)]


# --- evaluate -------------------------------------------------------------------------

def test_constant_offset():
    truth = waypoint_trajectory([(1.0, 1.0), (6.0, 1.0)], 1.0)
    rep = evaluate(shifted(truth, 0.3, 0.4), truth)
    assert rep.mean_error == pytest.approx(0.5, abs=1e-12)
    assert rep.std_error == pytest.approx(0.0, abs=1e-12)


def test_single_estimate_same_cell():
    truth = waypoint_trajectory([(1.2, 1.2), (3.0, 1.2)], 1.0)
    rep = evaluate([(1.0, 2.5, 1.7)], truth, burn_in=0.0)
    assert rep.accuracy_rate == 1.0 and rep.n == 1


def test_hand_statistics():
    rep = EvalReport.from_errors([0.2, 0.4, 0.6])
    assert rep.mean_error == pytest.approx(0.4)
    assert rep.std_error == pytest.approx(math.sqrt(0.08 / 3), abs=1e-12)
    assert rep.std_error == pytest.approx(0.1633, abs=1e-4)


def test_truth_against_itself():
    truth = make_trajectory("square", repeats=1)
    rep = evaluate(shifted(truth, 0.0, 0.0), truth)
    assert rep.mean_error == 0.0 and rep.accuracy_rate == 1.0
    assert rep.cdf[-1] == (0.0, 1.0)


def test_burn_in_and_range_checks():
    truth = waypoint_trajectory([(1.0, 1.0), (3.0, 1.0)], 1.0)
    with pytest.raises(EmptyAfterBurnIn):
        evaluate([(0.5, 1.5, 1.0)], truth, burn_in=1.0)
    with pytest.raises(ValueError):
        evaluate([(5.0, 1.5, 1.0)], truth, burn_in=0.0)
    with pytest.raises(ValueError):
        evaluate([(0.5, 1.5, 1.0)], truth, burn_in=-1.0)


def test_cdf_grid():
    rep = EvalReport.from_errors([0.01, 0.12, 0.12, 0.5])
    radii = [r for r, _ in rep.cdf]
    assert radii[0] == 0.0 and radii[-1] == 0.5
    assert np.allclose(np.diff(radii), 0.05)
    assert rep.prob_within(0.1) == 0.25 and rep.prob_within(0.15) == 0.75


# --- configuration ----------------------------------------------------------------------

def test_bundled_pipeline_file_matches_defaults():
    assert PipelineConfig.from_file(DATA / "pipeline.cfg") == PipelineConfig()


def test_missing_sensor_file_names_the_path(tmp_path):
    doc = yaml.safe_load((DATA / "pipeline.cfg").read_text())
    doc.update(lens=str(DATA / "reference_lens.cfg"), sensor=str(tmp_path / "nope.cfg"),
               poses=str(DATA / "corner_sensors.cfg"), tracker=str(DATA / "tracker.cfg"))
    cfg = tmp_path / "pipeline.cfg"
    cfg.write_text(yaml.safe_dump(doc))
    with pytest.raises(fileio.ConfigError, match="nope.cfg"):
        PipelineConfig.from_file(cfg)
    bad = replace(PipelineConfig(), sensor_path=tmp_path / "gone.cfg")
    with pytest.raises(PipelineError, match="gone.cfg") as info:
        run_pipeline(bad, "lines")
    assert info.value.stage == "config"


def test_schema_violation_is_a_config_error(tmp_path):
    p = tmp_path / "tracker.cfg"
    p.write_text("n_particles: ten\n")
    with pytest.raises(fileio.ConfigError):
        fileio.load_tracker(p)


def test_nonpositive_period_rejected():
    with pytest.raises(fileio.ConfigError):
        PipelineConfig(period=0.0)


# --- pipeline -----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def square_run():
    return run_pipeline(PipelineConfig(), "square")


def test_pipeline_result_shape(square_run):
    res = square_run
    assert len(res.observations) == 4
    assert len(res.estimates) == len(res.observations[0])
    assert res.report.n == res.errors.size
    assert 0.0 <= res.report.accuracy_rate <= 1.0


def test_lines_scenario_reference_level():
    assert run_pipeline(PipelineConfig(), "lines").report.mean_error <= 0.7


def test_sweep_single_value():
    cfg = replace(PipelineConfig(), tracker=replace(PipelineConfig().tracker, n_particles=500))
    out = sweep(cfg, "square", "n_sensors", [2])
    assert len(out) == 1 and out[0][0] == 2
    with pytest.raises(ValueError):
        sweep(cfg, "square", "n_sensors", [])
    with pytest.raises(ValueError):
        sweep(cfg, "square", "lambda", [1e-3])


# --- CSV --------------------------------------------------------------------------------

def test_reader_errors(tmp_path):
    with pytest.raises(fileio.DataError):
        fileio.read_trace(tmp_path / "missing.csv")
    p = tmp_path / "bad.csv"
    p.write_text("time,value\n0,1\n")
    with pytest.raises(fileio.DataError):
        fileio.read_trace(p)
    p.write_text("t_s,v\n0,1\n0.01,x\n")
    with pytest.raises(fileio.DataError):
        fileio.read_trace(p)
    p.write_text("t_s,v\n0,1\n0.01,2\n0.03,3\n")
    with pytest.raises(fileio.DataError):
        fileio.read_trace(p)


def test_csv_format(tmp_path):
    p = tmp_path / "x.csv"
    fileio.write_trace(p, SignalTrace(np.array([0.1, -2.5]), 100.0))
    raw = p.read_bytes()
    assert raw.startswith(b"t_s,v\n") and b"\r" not in raw


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=2, max_size=300),
       st.sampled_from([1.0, 10.0, 50.0, 100.0, 250.0, 1000.0]), st.floats(-1e4, 1e4))
def test_trace_round_trip_bit_exact(tmp_path_factory, samples, rate, t0):
    p = tmp_path_factory.mktemp("rt") / "trace.csv"
    tr = SignalTrace(np.array(samples), rate, t0)
    fileio.write_trace(p, tr)
    back = fileio.read_trace(p, sample_rate=rate)
    assert np.array_equal(back.samples, tr.samples)
    assert back.t0 == tr.t0


@given(st.lists(st.floats(0.0, 50.0), min_size=1, max_size=200),
       st.lists(st.booleans(), min_size=1, max_size=200))
def test_eval_report_invariants(errors, cells):
    cells = (cells * len(errors))[:len(errors)]
    rep = EvalReport.from_errors(errors, cells)
    probs = [p for _, p in rep.cdf]
    assert all(a <= b for a, b in zip(probs[:-1], probs[1:]))
    assert probs[-1] == 1.0
    assert rep.prob_within(max(errors)) == 1.0
    assert 0.0 <= rep.accuracy_rate <= 1.0


# --- command line -----------------------------------------------------------------------

def run_cli(*argv):
    return main([str(a) for a in argv])


def test_cli_layout(tmp_path, capsys):
    assert run_cli("--out-dir", tmp_path, "layout") == 0
    assert "zones 20" in capsys.readouterr().out
    rows = (tmp_path / "zones.csv").read_text().splitlines()
    assert rows[0] == "start_deg,end_deg,polarity"
    assert (tmp_path / "zones_axes.csv").is_file() and (tmp_path / "zones.png").is_file()


def test_cli_identify(tmp_path):
    trace = tmp_path / "step.csv"
    fileio.write_trace(trace, step_response(SensorParams(1.0, 0.01, 0.2), 3.0))
    out = tmp_path / "fit.cfg"
    assert run_cli("identify", "--traces", trace, "--guess", "0.5,0.005,0.1", "--out", out) == 0
    params, fs = fileio.load_sensor(out)
    assert params.b_coef == pytest.approx(0.01, rel=0.01) and fs == 100.0
    assert out.with_suffix(".png").is_file()


def test_cli_chain_matches_pipeline(tmp_path, square_run):
    d = tmp_path
    assert run_cli("synth", "--scenario", "square", "--seed", 0, "--out-dir", d) == 0
    for sid in ("s1", "s2", "s3", "s4"):
        assert run_cli("dhf", "--in", d / f"output_{sid}.csv", "--out-dir", d) == 0
        assert run_cli("azimuth", "--in", d / f"dhf_{sid}.csv", "--sensor-id", sid,
                       "--out-dir", d) == 0
    obs = [d / f"azimuth_{sid}.csv" for sid in ("s1", "s2", "s3", "s4")]
    assert run_cli("track", "--obs", *obs, "--truth", d / "truth.csv", "--seed", 0,
                   "--out-dir", d) == 0
    assert run_cli("eval", "--estimates", d / "estimates.csv", "--truth", d / "truth.csv",
                   "--out-dir", d) == 0
    row = (d / "report.csv").read_text().splitlines()[1].split(",")
    assert float(row[2]) == pytest.approx(square_run.report.mean_error, rel=1e-12)
    for name in ("outputs.png", "estimates.png", "cdf.png", "cdf.csv"):
        assert (d / name).is_file()


def test_cli_run_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("run", "square", "--seed", 3, "--out-dir", a) == 0
    assert run_cli("--seed", 3, "--out-dir", b, "run", "square") == 0
    for name in ("square/estimates.csv", "square/output_s2.csv", "report.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "square" / "trajectory.png").is_file() and (a / "cdf.png").is_file()


def test_cli_synth_seed_changes_noise(tmp_path):
    assert run_cli("synth", "--scenario", "refwalk", "--seed", 1, "--out-dir", tmp_path / "a") == 0
    assert run_cli("synth", "--scenario", "refwalk", "--seed", 2, "--out-dir", tmp_path / "b") == 0
    a = (tmp_path / "a" / "output_s1.csv").read_bytes()
    b = (tmp_path / "b" / "output_s1.csv").read_bytes()
    assert a != b


def test_cli_sweep(tmp_path):
    cfg = tmp_path / "pipeline.cfg"
    doc = yaml.safe_load((DATA / "pipeline.cfg").read_text())
    doc.update(lens=str(DATA / "reference_lens.cfg"), sensor=str(DATA / "reference_sensor.cfg"),
               poses=str(DATA / "corner_sensors.cfg"), tracker=str(DATA / "tracker.cfg"))
    cfg.write_text(yaml.safe_dump(doc))
    assert run_cli("sweep", "--parameter", "n_sensors", "--values", 4, "--scenarios", "square",
                   "--config", cfg, "--out-dir", tmp_path) == 0
    rows = (tmp_path / "sweep_n_sensors.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("4,")
    assert (tmp_path / "sweep_n_sensors.png").is_file()


def test_exit_code_config(tmp_path, capsys):
    assert run_cli("run", "square", "--config", tmp_path / "none.cfg", "--out-dir", tmp_path) == 2
    assert "none.cfg" in capsys.readouterr().err
    assert run_cli("run", "square", "--n-sensors", 9, "--out-dir", tmp_path) == 2


def test_exit_code_data(tmp_path):
    assert run_cli("dhf", "--in", tmp_path / "missing.csv", "--out-dir", tmp_path) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("t_s,v\n0,1\n0.01,2\n")
    assert run_cli("dhf", "--in", bad, "--out-dir", tmp_path) == 3  # too short to invert
    est = tmp_path / "est.csv"
    est.write_text("t,x,y,vx,vy\n0.5,1,1,0,0\n")
    truth = tmp_path / "truth.csv"
    fileio.write_truth(truth, waypoint_trajectory([(1, 1), (3, 1)], 1.0))
    assert run_cli("eval", "--estimates", est, "--truth", truth, "--out-dir", tmp_path) == 3


def test_exit_code_numerical(tmp_path):
    trace = tmp_path / "step.csv"
    fileio.write_trace(trace, step_response(SensorParams(1.0, 0.01, 0.2), 2.0))
    assert run_cli("identify", "--traces", trace, "--guess", "1,0.01,-0.2",
                   "--out-dir", tmp_path) == 4


def test_exit_code_usage():
    with pytest.raises(SystemExit) as info:
        run_cli("synth", "--scenario", "spiral")
    assert info.value.code == 2
