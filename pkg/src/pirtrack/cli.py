"""
Command-line front end.

Every subcommand writes CSV tables and PNG figures into ``--out-dir``.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import fileio, plotting
from .azimuth import ProminencePolicy, windowed_azimuth
from .dhf_recovery import InverseFilterSpec, TraceTooShort, recover_dhf
from .evaluation import (SWEEP_PARAMETERS, EmptyAfterBurnIn, PipelineConfig, PipelineError,
                         evaluate, load_setup, run_pipeline, sweep)
from .fileio import ConfigError, DataError
from .lens_optics import DegenerateLayout, neighbor_angles, sweep_zones
from .scenarios import (DESK_POSE, DESK_SCENARIOS, ROOM_SCENARIOS, ROTATING_SOURCE, SCENARIOS,
                        NoiseModel, UnknownScenario, default_noise_std, make_trajectory,
                        synth_dhf, synth_outputs, true_azimuth_series)
from .sensor_dynamics import (NoConvergence, SensorParams, UnstableParams, detect_onset,
                              identify_params, simulate_output)
from .tracker import DegenerateGeometry, track

log = logging.getLogger("pirtrack")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
PIPELINE_CFG = fileio.DATA_DIR / "pipeline.cfg"


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        if exc.stage == "config":
            return EXIT_CONFIG
        return _exit_code(exc.cause)
    if isinstance(exc, (ConfigError, UnknownScenario, DegenerateLayout)):
        return EXIT_CONFIG
    if isinstance(exc, (DataError, EmptyAfterBurnIn, TraceTooShort, OSError)):
        return EXIT_DATA
    if isinstance(exc, (ArithmeticError, NoConvergence, UnstableParams, DegenerateGeometry)):
        return EXIT_NUMERIC
    if isinstance(exc, ValueError):
        # remaining ValueErrors come from invalid parameter values
        return EXIT_CONFIG
    raise exc


# --- helpers -----------------------------------------------------------------

def _pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config or PIPELINE_CFG)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "period", None) is not None:
        cfg = replace(cfg, period=args.period)
    return cfg


def _target(args, default_name: str) -> Path:
    """CSV path from ``--out``, else ``default_name`` inside ``--out-dir``."""
    return Path(args.out) if getattr(args, "out", None) else args.out_dir / default_name


def _write_yaml(path: Path, doc: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")


def _parse_triple(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected A,B,C")
    try:
        return tuple(float(v) for v in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


REPORT_HEADER = ["scenario", "n", "mean_error_m", "std_error_m", "accuracy_rate", "p_within_1m"]


def _report_row(name, rep):
    return [name, rep.n, rep.mean_error, rep.std_error, rep.accuracy_rate, rep.prob_within(1.0)]


def _write_cdf(path, reports: dict):
    rows = [[name, r, p] for name, rep in reports.items() for r, p in rep.cdf]
    fileio.write_table(path, ["scenario", "error_m", "cum_prob"], rows)


def _layout_from(lens_path):
    lens = fileio.load_lens(lens_path)
    kw = {"fov": lens.fov}
    if lens.angular_resolution:
        kw["angular_resolution"] = lens.angular_resolution
    return sweep_zones(lens.lenses, lens.geometry, **kw)


# --- subcommands -------------------------------------------------------------

def cmd_layout(args) -> int:
    layout = _layout_from(args.lens)
    out = _target(args, "zones.csv")
    fileio.write_table(out, ["start_deg", "end_deg", "polarity"],
                       [[math.degrees(s.start), math.degrees(s.end), s.polarity.name.lower()]
                        for s in layout.sectors])
    gaps = [math.degrees(g) for g in neighbor_angles(layout)] + [""]
    fileio.write_table(out.with_name(out.stem + "_axes.csv"),
                       ["axis_deg", "polarity", "gap_to_next_deg"],
                       [[math.degrees(a), p.name.lower(), g] for (a, p), g in zip(layout.axes, gaps)])
    plotting.plot_layout(layout, out.with_suffix(".png"), seed=args.seed or 0)
    print(f"zones {len(layout.zones)}  theta_c {math.degrees(layout.theta_c):.4f} deg")
    return EXIT_OK


def cmd_identify(args) -> int:
    traces = [fileio.read_trace(p) for p in args.traces]
    if args.trim_onset:
        trimmed = []
        for tr in traces:
            try:
                i = detect_onset(tr.samples)
            except ValueError as exc:
                raise DataError(f"step onset: {exc}") from exc
            trimmed.append(tr.with_samples(tr.samples[i:] - tr.samples[:i].mean()))
        traces = trimmed
    fit = identify_params(traces, SensorParams(*args.guess))
    p = fit.params
    out = _target(args, "sensor.cfg")
    _write_yaml(out, {"a_gain": p.a_gain, "b_coef": p.b_coef, "c_coef": p.c_coef,
                      "sample_rate_hz": traces[0].sample_rate})
    model = simulate_output(traces[0].with_samples(np.ones(len(traces[0]))), p)
    plotting.plot_traces({"measured": traces[0], "model": model}, out.with_suffix(".png"),
                         title="step response fit")
    print(f"A {p.a_gain:.6g}  B {p.b_coef:.6g}  C {p.c_coef:.6g}  "
          f"rms {fit.residual_rms:.3g}  iterations {fit.iterations}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _pipeline_config(args)
    if args.lens:
        cfg = replace(cfg, lens_path=Path(args.lens))
    if args.sensors:
        cfg = replace(cfg, poses_path=Path(args.sensors))
    if args.speed is not None:
        cfg = replace(cfg, speed=args.speed)
    layout, params, fs, poses = load_setup(cfg)
    body = cfg.body
    if args.scenario in DESK_SCENARIOS:
        poses = [replace(DESK_POSE, theta_c=layout.theta_c)]
        if args.scenario == "rotating":
            body = ROTATING_SOURCE
    elif args.n_sensors is not None:
        poses = poses[:args.n_sensors]
    truth = make_trajectory(args.scenario, speed=cfg.speed, dt=1.0 / fs, trace=args.trace,
                            layout=layout)
    noise = cfg.noise_std if cfg.noise_std is not None else default_noise_std(layout, params, body)
    if args.noiseless:
        noise = 0.0
    outputs = synth_outputs(truth, [(p, layout, params) for p in poses], body,
                            NoiseModel(noise, cfg.seed))
    out = args.out_dir
    fileio.write_truth(out / "truth.csv", truth)
    panels = {}
    for p, o in zip(poses, outputs):
        fileio.write_trace(out / f"output_{p.sensor_id}.csv", o)
        fileio.write_trace(out / f"dhf_true_{p.sensor_id}.csv", synth_dhf(truth, p, layout, body))
        panels[p.sensor_id] = o
    true_az = [[p.sensor_id, t0, t1, math.degrees(th)] for p in poses
               for t0, t1, th in true_azimuth_series(truth, p, cfg.period)]
    fileio.write_table(out / "azimuth_true.csv", ["sensor_id", "t_start", "t_end", "theta_deg"],
                       true_az)
    plotting.plot_traces(panels, out / "outputs.png", title=f"{truth.scenario_tag} outputs")
    print(f"{truth.scenario_tag}: {len(truth)} samples, {len(poses)} sensor(s), "
          f"noise std {noise:.3g}")
    return EXIT_OK


def cmd_dhf(args) -> int:
    params, fs = fileio.load_sensor(args.sensor)
    output = fileio.read_trace(args.input)
    if abs(output.sample_rate - fs) > 1e-6 * fs:
        raise DataError(f"{args.input}: sample rate {output.sample_rate} Hz does not match "
                        f"the sensor config ({fs} Hz)")
    dhf = recover_dhf(output, InverseFilterSpec(params, args.reg_lambda, output.sample_rate))
    if not np.all(np.isfinite(dhf.samples)):
        raise FloatingPointError("recovered DHF is not finite")
    stem = Path(args.input).stem
    out = _target(args, (stem.replace("output", "dhf", 1) if "output" in stem else f"dhf_{stem}")
                  + ".csv")
    fileio.write_trace(out, dhf)
    plotting.plot_traces({"output": output, "dhf": dhf}, out.with_suffix(".png"))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_azimuth(args) -> int:
    dhf = fileio.read_trace(args.input)
    if args.theta_c is not None:
        theta_c = math.radians(args.theta_c)
    else:
        poses = {p.sensor_id: p for p in fileio.load_poses(args.sensors)}
        if args.sensor_id not in poses:
            raise ConfigError(f"{args.sensors}: no sensor {args.sensor_id!r}; pass --theta-c")
        theta_c = poses[args.sensor_id].theta_c
    policy = ProminencePolicy(fixed=args.prominence) if args.prominence else ProminencePolicy()
    obs = windowed_azimuth(dhf, args.period, theta_c, policy, args.sensor_id)
    out = _target(args, f"azimuth_{args.sensor_id}.csv")
    fileio.write_azimuth(out, obs)
    plotting.plot_azimuth(obs, out.with_suffix(".png"))
    print(f"{len(obs)} windows, summed azimuth change "
          f"{math.degrees(sum(o.theta for o in obs)):.2f} deg")
    return EXIT_OK


def cmd_track(args) -> int:
    poses = fileio.load_poses(args.sensors)
    tcfg = fileio.load_tracker(args.config)
    obs = [o for p in args.obs for o in fileio.read_azimuth(p)]
    if not obs:
        raise DataError("no azimuth observations")
    windows = fileio.group_windows(obs)
    period = windows[0][0].window_end - windows[0][0].window_start
    estimates = track(windows, poses, replace(tcfg, period=period), args.seed or 0)
    out = _target(args, "estimates.csv")
    fileio.write_estimates(out, estimates)
    if args.truth:
        plotting.plot_trajectory(fileio.read_truth(args.truth), estimates, poses,
                                 out.with_suffix(".png"), tcfg.area_bounds)
    print(f"{len(estimates)} estimates")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _pipeline_config(args)
    out = args.out_dir
    poses = load_setup(cfg)[3][:args.n_sensors]
    reports = {}
    for sc in args.scenarios:
        res = run_pipeline(cfg, sc, n_sensors=args.n_sensors, persist_dir=out / sc)
        reports[sc] = rep = res.report
        plotting.plot_trajectory(res.truth, res.estimates, poses, out / sc / "trajectory.png",
                                 cfg.tracker.area_bounds)
        print(f"{sc:8s} mean {rep.mean_error:.3f} m  std {rep.std_error:.3f} m  "
              f"P(<1 m) {rep.prob_within(1.0):.2f}  grid {rep.accuracy_rate:.2f}")
    fileio.write_table(out / "report.csv", REPORT_HEADER,
                       [_report_row(k, v) for k, v in reports.items()])
    _write_cdf(out / "cdf.csv", reports)
    plotting.plot_cdf(reports, out / "cdf.png")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _pipeline_config(args)
    values = [int(v) for v in args.values] if args.parameter == "n_sensors" else args.values
    results = sweep(cfg, args.scenarios, args.parameter, values)
    out = args.out_dir / f"sweep_{args.parameter}.csv"
    fileio.write_table(out, [args.parameter] + REPORT_HEADER[1:],
                       [[v] + _report_row(v, r)[1:] for v, r in results])
    plotting.plot_sweep(args.parameter, results, out.with_suffix(".png"))
    for v, r in results:
        print(f"{args.parameter}={v:g}: mean {r.mean_error:.3f} m")
    return EXIT_OK


def cmd_eval(args) -> int:
    est = fileio.read_estimates(args.estimates)
    truth = fileio.read_truth(args.truth)
    try:
        rep = evaluate(est, truth, args.burn_in)
    except EmptyAfterBurnIn:
        raise
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    name = Path(args.estimates).stem
    out = _target(args, "report.csv")
    fileio.write_table(out, REPORT_HEADER, [_report_row(name, rep)])
    _write_cdf(out.with_name("cdf.csv"), {name: rep})
    plotting.plot_cdf({name: rep}, out.with_name("cdf.png"))
    print(f"mean {rep.mean_error:.3f} m  std {rep.std_error:.3f} m  grid {rep.accuracy_rate:.2f}")
    return EXIT_OK


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # accepted before or after the subcommand; SUPPRESS keeps the global value
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="random seed (default: the config seed)")
    common.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--out-dir", type=Path, default=argparse.SUPPRESS,
                        help="directory for outputs and figures (default: pirtrack_out)")

    ap = argparse.ArgumentParser(prog="pirtrack", description=__doc__.strip().splitlines()[0])
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--verbose", "-v", action="store_true")
    ap.add_argument("--out-dir", type=Path, default=Path("pirtrack_out"))
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=func)
        return p

    def pipeline_config(p):
        p.add_argument("--config", type=Path, default=None,
                       help="pipeline YAML (default: bundled pipeline.cfg)")

    data = fileio.DATA_DIR
    p = add("layout", cmd_layout, "sweep a lens config into its zone layout")
    p.add_argument("--lens", type=Path, default=data / "reference_lens.cfg")
    p.add_argument("--out", type=Path, default=None, help="sector table CSV")

    p = add("identify", cmd_identify, "fit (A, B, C) to step-response CSVs")
    p.add_argument("--traces", nargs="+", type=Path, required=True)
    p.add_argument("--guess", type=_parse_triple, default=(1.0, 0.02, 0.3), metavar="A,B,C")
    p.add_argument("--trim-onset", action="store_true",
                   help="cut each trace at the detected step onset and remove the baseline")
    p.add_argument("--out", type=Path, default=None, help="fitted sensor config (YAML)")

    p = add("synth", cmd_synth, "synthesize truth and sensor outputs for a scenario")
    p.add_argument("--scenario", choices=SCENARIOS, required=True)
    p.add_argument("--sensors", type=Path, default=None, help="sensor poses config")
    p.add_argument("--lens", type=Path, default=None)
    p.add_argument("--speed", type=float, default=None, help="m/s")
    p.add_argument("--trace", type=int, default=0, help="walk index of the desk families")
    p.add_argument("--n-sensors", type=int, default=None)
    p.add_argument("--period", type=float, default=None, help="window of azimuth_true.csv")
    p.add_argument("--noiseless", action="store_true")
    pipeline_config(p)

    p = add("dhf", cmd_dhf, "recover the DHF from a sensor output CSV")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--sensor", type=Path, default=data / "reference_sensor.cfg")
    p.add_argument("--lambda", dest="reg_lambda", type=float, default=1e-3)
    p.add_argument("--out", type=Path, default=None)

    p = add("azimuth", cmd_azimuth, "windowed azimuth change from a DHF CSV")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--theta-c", type=float, default=None,
                   help="degrees (default: the sensor's entry in --sensors)")
    p.add_argument("--sensors", type=Path, default=data / "corner_sensors.cfg")
    p.add_argument("--sensor-id", default="s1")
    p.add_argument("--period", type=float, default=0.5)
    p.add_argument("--prominence", type=float, default=None, help="fixed minimum prominence")
    p.add_argument("--out", type=Path, default=None)

    p = add("track", cmd_track, "particle filter over azimuth CSVs")
    p.add_argument("--obs", nargs="+", type=Path, required=True)
    p.add_argument("--sensors", type=Path, default=data / "corner_sensors.cfg")
    p.add_argument("--config", type=Path, default=data / "tracker.cfg", help="tracker config")
    p.add_argument("--truth", type=Path, default=None, help="truth CSV for the trajectory figure")
    p.add_argument("--out", type=Path, default=None)

    p = add("run", cmd_run, "end-to-end pipeline with report and figures")
    p.add_argument("scenarios", nargs="*", default=list(ROOM_SCENARIOS))
    p.add_argument("--n-sensors", type=int, default=None)
    p.add_argument("--period", type=float, default=None)
    pipeline_config(p)

    p = add("sweep", cmd_sweep, "sweep the estimation period or the sensor count")
    p.add_argument("--parameter", choices=SWEEP_PARAMETERS, required=True)
    p.add_argument("--values", nargs="+", type=float, required=True)
    p.add_argument("--scenarios", nargs="+", default=list(ROOM_SCENARIOS))
    pipeline_config(p)

    p = add("eval", cmd_eval, "error statistics of an estimates CSV against truth")
    p.add_argument("--estimates", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--burn-in", type=float, default=2.0, help="s")
    p.add_argument("--out", type=Path, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        code = _exit_code(exc)
        print(f"pirtrack: error: {exc}", file=sys.stderr)
        if args.verbose:
            log.exception("details")
        return code


if __name__ == "__main__":
    sys.exit(main())
