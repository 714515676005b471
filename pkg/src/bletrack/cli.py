"""Command-line entry point: simulate, calibrate, localize, evaluate, coverage.

Exit codes: 0 success, 2 usage error, 3 data error (I/O, schema, or any
documented library error), 4 internal invariant violation. All outputs are
deterministic for a given seed and are written atomically.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .deadreckoning import PdrConfig, dead_reckon, integrate_trajectory
from .errors import BletrackError
from .evaluation import (
    EvalConfig,
    compare_methods,
    coverage_heatmap,
    grid_to_csv,
    grid_to_pgm,
)
from .fusion import FusedTrack, TrackFix, run_tracker
from .ingest import (
    atomic_write_bytes,
    atomic_write_text,
    load_bundle_dir,
    load_registry,
    load_scenario,
    load_truth,
    save_hits,
    save_imu,
    save_plan,
    save_registry,
    save_track,
    save_truth,
)
from .layouts import probe_grid
from .pathloss import calibrate_n
from .simulator import build_ground_truth, simulate_ble, simulate_coverage_probe, simulate_imu
from .trilateration import adaptive_track, baseline_track


def _show_config() -> dict:
    sim_defaults = {
        "duration_s": 600.0,
        "ble_rate_hz": 2.0,
        "imu_rate_hz": 42.0,
        "rssi_noise_sigma_db": 4.0,
        "dropout_prob": 0.0,
        "detection_range_m": 15.0,
        "m_rssi_db": -70.0,
        "n_factor": 2.0,
    }
    eval_defaults = dataclasses.asdict(EvalConfig())
    return {"simulate": sim_defaults, "evaluate": eval_defaults, "pdr": dataclasses.asdict(PdrConfig())}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bletrack",
        description="BLE+IMU indoor localization: simulate, calibrate, localize, evaluate, coverage.",
    )
    parser.add_argument("--version", action="version", version=f"bletrack {__version__}")
    parser.add_argument(
        "--show-config", action="store_true", help="print all defaults as JSON and exit"
    )
    sub = parser.add_subparsers(dest="command")

    p_sim = sub.add_parser("simulate", help="generate hits, IMU and truth files from a scenario")
    p_sim.add_argument("--scenario", required=True, help="scenario JSON file")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, help="override the scenario seed")
    p_sim.add_argument("--sigma", type=float, help="override RSSI noise sigma (dB)")
    p_sim.add_argument("--dropout", type=float, help="override dropout probability")

    p_cal = sub.add_parser("calibrate", help="fit per-device path-loss exponents from samples")
    p_cal.add_argument("--registry", required=True, help="device registry JSON")
    p_cal.add_argument(
        "--samples",
        action="append",
        required=True,
        metavar="DEVICE=CSV",
        help="device id and its (distance_m,rssi_db) sample file; repeatable",
    )
    p_cal.add_argument("--out", required=True, help="path for the updated registry")

    p_loc = sub.add_parser("localize", help="compute per-beacon tracks from a data directory")
    p_loc.add_argument("--in", dest="indir", required=True, help="simulate output directory")
    p_loc.add_argument("--out", required=True, help="directory for track files")
    p_loc.add_argument(
        "--method",
        choices=["baseline", "adaptive", "fused", "all"],
        default="all",
    )
    _add_pipeline_flags(p_loc)

    p_eval = sub.add_parser("evaluate", help="compare methods against ground truth")
    p_eval.add_argument("--in", dest="indir", required=True, help="simulate output directory")
    p_eval.add_argument("--report", help="report JSON path (default <in>/report.json)")
    _add_pipeline_flags(p_eval)

    p_cov = sub.add_parser("coverage", help="probe signal reception and render heatmap grids")
    p_cov.add_argument("--scenario", required=True, help="scenario JSON file")
    p_cov.add_argument("--out", required=True, help="output directory")
    p_cov.add_argument("--dwell", type=float, default=30.0, help="seconds per probe point")
    p_cov.add_argument("--points", type=int, default=131, help="target probe count")
    p_cov.add_argument(
        "--grid-spacing", type=float, default=1.0, help="heatmap cell size (m)"
    )
    return parser


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=float, default=10.0, help="trilateration window (s)")
    p.add_argument("--stride", type=float, default=1.0, help="window stride (s)")
    p.add_argument("--tumbling", action="store_true", help="tumbling windows (stride = window)")
    p.add_argument("--rssi-floor", type=float, default=-95.0, help="discard weaker hits (dB)")
    p.add_argument("--step-length", type=float, default=0.7, help="PDR step length (m)")
    p.add_argument("--beta", type=float, default=0.1, help="orientation filter gain")
    p.add_argument("--tick", type=float, default=1.0, help="fused track tick (s)")
    p.add_argument(
        "--offset",
        action="append",
        default=[],
        metavar="STREAM=SECONDS",
        help="clock-skew correction per stream (hits file stem or subject id); repeatable",
    )


def _parse_offsets(specs: list[str]) -> dict[str, float]:
    offsets = {}
    for spec in specs:
        if "=" not in spec:
            raise BletrackError(f"--offset expects STREAM=SECONDS, got {spec!r}")
        name, value = spec.split("=", 1)
        offsets[name] = float(value)
    return offsets


def _eval_config(args, ble_rate: float) -> EvalConfig:
    return EvalConfig(
        window_s=args.window,
        stride_s=args.stride,
        rssi_floor_db=args.rssi_floor,
        tumbling=args.tumbling,
        ble_rate=ble_rate,
        tick_s=args.tick,
        pdr=PdrConfig(step_length_m=args.step_length, beta=args.beta),
    )


def _cmd_simulate(args) -> int:
    config = load_scenario(args.scenario)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.sigma is not None:
        overrides["rssi_noise_sigma"] = args.sigma
    if args.dropout is not None:
        overrides["dropout_prob"] = args.dropout
    if overrides:
        config = dataclasses.replace(config, **overrides)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    truth = build_ground_truth(config)
    hits = simulate_ble(config, truth)
    imu = simulate_imu(config, truth)

    save_hits(out / "hits.csv", hits)
    for subject_id, samples in imu.items():
        save_imu(out / f"imu_{subject_id}.csv", samples)
    save_truth(out / "truth.csv", {sid: truth.records(sid) for sid in truth.subject_ids()})
    save_plan(out / "plan.json", config.plan)
    save_registry(out / "registry.json", config.devices)
    meta = {
        "seed": config.seed,
        "duration_s": config.duration_s,
        "ble_rate_hz": config.ble_rate,
        "imu_rate_hz": config.imu_rate,
        "bindings": [
            {"subject_id": s.subject_id, "beacon_id": s.beacon_id}
            for s in config.subjects
        ],
    }
    atomic_write_text(out / "metadata.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(hits)} hits, {len(imu)} IMU streams to {out}")
    return 0


def _cmd_calibrate(args) -> int:
    registry = load_registry(args.registry)
    for spec in args.samples:
        if "=" not in spec:
            print(f"error: --samples expects DEVICE=CSV, got {spec!r}", file=sys.stderr)
            return 2
        device_id, path = spec.split("=", 1)
        samples = []
        with open(path) as f:
            header = f.readline().rstrip("\n")
            if header != "distance_m,rssi_db":
                raise BletrackError(f"bad calibration header in {path}")
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                d, rssi = line.split(",")
                samples.append((float(d), float(rssi)))
        m_rssi = registry.params_of(device_id).m_rssi
        n = calibrate_n(m_rssi, samples)
        registry = registry.with_n_factor(device_id, n)
        print(f"{device_id}: n_factor = {n:.4f} ({len(samples)} samples)")
    save_registry(args.out, registry)
    return 0


def _ble_fix_track(beacon_id: str, fixes) -> FusedTrack:
    return FusedTrack(
        beacon_id, tuple(TrackFix(f.timestamp, f.position, "ble_only") for f in fixes)
    )


def _cmd_localize(args) -> int:
    bundle = load_bundle_dir(args.indir, offsets=_parse_offsets(args.offset))
    registry = load_registry(Path(args.indir) / "registry.json")
    ble_rate = float(bundle.meta.get("ble_rate_hz", 2.0))
    cfg = _eval_config(args, ble_rate)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    written = []
    for beacon_id in bundle.beacon_ids():
        hits = bundle.hits[beacon_id]
        adaptive = adaptive_track(
            hits, registry, cfg.window_s, cfg.stride_s,
            rssi_floor=cfg.rssi_floor_db, tumbling=cfg.tumbling,
        ).get(beacon_id, [])
        if args.method in ("baseline", "all"):
            base = baseline_track(hits, registry, ble_rate).get(beacon_id, [])
            path = out / f"track_baseline_{beacon_id}.csv"
            save_track(path, _ble_fix_track(beacon_id, base))
            written.append(path)
        if args.method in ("adaptive", "all"):
            path = out / f"track_adaptive_{beacon_id}.csv"
            save_track(path, _ble_fix_track(beacon_id, adaptive))
            written.append(path)
        if args.method in ("fused", "all"):
            subject_id = bundle.bindings.get(beacon_id)
            steps = dead_reckon(bundle.imu.get(subject_id, []), cfg.pdr)
            trajectory = integrate_trajectory(steps)
            if adaptive:
                fused = run_tracker(
                    adaptive, trajectory, adaptive[0].timestamp, adaptive[0].position,
                    tick=cfg.tick_s, beacon_id=beacon_id,
                )
            else:
                fused = FusedTrack(beacon_id, ())
            path = out / f"track_fused_{beacon_id}.csv"
            save_track(path, fused)
            written.append(path)
    print(f"wrote {len(written)} track files to {out}")
    return 0


def _cmd_evaluate(args) -> int:
    indir = Path(args.indir)
    bundle = load_bundle_dir(indir, offsets=_parse_offsets(args.offset))
    registry = load_registry(indir / "registry.json")
    from .ingest import load_plan  # local import keeps the top tidy

    plan = load_plan(indir / "plan.json")
    truth = load_truth(indir / "truth.csv")
    ble_rate = float(bundle.meta.get("ble_rate_hz", 2.0))
    cfg = _eval_config(args, ble_rate)

    report = compare_methods(bundle, registry, plan, truth, cfg)
    print(report.to_table())
    report_path = Path(args.report) if args.report else indir / "report.json"
    atomic_write_text(
        report_path, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    print(f"report written to {report_path}")
    return 0


def _cmd_coverage(args) -> int:
    config = load_scenario(args.scenario)
    points = probe_grid(config.plan, args.points)
    probes = simulate_coverage_probe(config, points, args.dwell)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    lines = ["x,y,hit_count,unique_devices,mean_rssi"]
    for p in probes:
        rssi = "" if p.mean_rssi is None else repr(p.mean_rssi)
        lines.append(f"{p.position.x!r},{p.position.y!r},{p.hit_count},{p.unique_devices},{rssi}")
    atomic_write_text(out / "probes.csv", "\n".join(lines) + "\n")

    grid = coverage_heatmap(probes, config.plan, args.grid_spacing)
    for metric in ("hit_count", "unique_devices", "mean_rssi"):
        atomic_write_text(out / f"coverage_{metric}.csv", grid_to_csv(grid, metric))
        atomic_write_bytes(out / f"coverage_{metric}.pgm", grid_to_pgm(grid, metric))
    print(f"probed {len(probes)} locations; grids written to {out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
    "localize": _cmd_localize,
    "evaluate": _cmd_evaluate,
    "coverage": _cmd_coverage,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.show_config:
        print(json.dumps(_show_config(), indent=2, sort_keys=True))
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except (BletrackError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # invariant violation — anything undeclared
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
