"""Command line interface.

Subcommands: calibrate, touch-test, slip-test, sweep, run, replay, report.
Every command honours ``--config`` (YAML overrides) and the GRASPSIM_*
environment variables; file outputs land under ``--output-dir``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from .colormap import render_spatial_map
from .config import load_config
from .experiments import (
    calibrate_contact_threshold,
    calibrate_grip_quality,
    perturbation_weight_sweep,
    slip_resistance_test,
    touch_sensitivity_test,
)
from .fingertips import FingertipKind
from .filtering import NormalizedFrame
from .objects import object_library
from .recording import (
    read_log,
    record_from_csv,
    record_to_csv,
    verify_replay,
    write_log,
)
from .report import (
    save_colormap_figure,
    save_run_figure,
    save_slip_figure,
    summarize_records,
    write_colormap_text,
    write_slip_coefficients,
    write_slip_samples_csv,
    write_summary_csv,
    write_sweep_csv,
)

KIND_CHOICES = [kind.value for kind in FingertipKind]
OBJECT_CHOICES = [spec.name for spec in object_library()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graspsim",
        description="Tactile fingertip emulation and grasp assessment harness")
    parser.add_argument("--config", help="YAML config overriding the calibrated defaults")
    parser.add_argument("--output-dir", default="graspsim_output",
                        help="directory for logs, CSV files and figures")
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="calibrate contact thresholds (and grip quality)")
    cal.add_argument("--kind", required=True, choices=KIND_CHOICES)
    cal.add_argument("--grid", type=float, nargs="+", help="candidate thresholds, ascending")
    cal.add_argument("--grip", action="store_true",
                     help="also fit the per-object grip quality factors")
    cal.add_argument("--reps", type=int, default=3)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--write", help="write the resulting overlay YAML here")

    touch = sub.add_parser("touch-test", help="minimum detectable indentation sweep")
    touch.add_argument("--kind", required=True, choices=KIND_CHOICES)

    slip = sub.add_parser("slip-test", help="slip distance vs pull force with quadratic fit")
    slip.add_argument("--kind", required=True, choices=KIND_CHOICES)
    slip.add_argument("--object", required=True, choices=OBJECT_CHOICES)
    slip.add_argument("--seed", type=int, default=0)

    sweep = sub.add_parser("sweep", help="perturbation weight sweep for one object")
    sweep.add_argument("--object", required=True, choices=OBJECT_CHOICES)
    sweep.add_argument("--kind", required=True, choices=KIND_CHOICES)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--reps", type=int)
    sweep.add_argument("--increment", type=float)

    run = sub.add_parser("run", help="one full grasp assessment run with telemetry")
    run.add_argument("--object", required=True, choices=OBJECT_CHOICES)
    run.add_argument("--kind", required=True, choices=KIND_CHOICES)
    run.add_argument("--mass", type=float, default=0.0, help="added mass in grams")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--mode", choices=["single", "threaded"], default="single")
    run.add_argument("--no-figure", action="store_true")

    replay = sub.add_parser("replay", help="verify a recorded run reproduces itself")
    replay.add_argument("log")

    report = sub.add_parser("report", help="summary table and figures from logs")
    report.add_argument("logs", nargs="+", help="binary .log or exported .csv run records")
    report.add_argument("--figures", action="store_true", help="render per-run figures")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    out_dir = Path(args.output_dir)
    handler = {
        "calibrate": _cmd_calibrate,
        "touch-test": _cmd_touch,
        "slip-test": _cmd_slip,
        "sweep": _cmd_sweep,
        "run": _cmd_run,
        "replay": _cmd_replay,
        "report": _cmd_report,
    }[args.command]
    return handler(args, config, out_dir)


def _ensure(out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _cmd_calibrate(args, config, out_dir) -> int:
    threshold = calibrate_contact_threshold(config, args.kind, grid=args.grid,
                                            reps=args.reps, seed=args.seed)
    print(f"calibrated contact threshold for {args.kind}: {threshold:g}")
    overlay = {"contact": {args.kind: {"threshold": float(threshold)}}}
    if args.grip:
        config = config.with_overrides(overlay)
        from .experiments import REFERENCE_MAX_MASS_G

        targets = {cell: mass for cell, mass in REFERENCE_MAX_MASS_G.items()
                   if cell[1] == args.kind}
        quality = calibrate_grip_quality(config, seed=args.seed, targets=targets,
                                         reps=args.reps)
        overlay.setdefault("plant", {})["grip_quality"] = quality
        for key, value in sorted(quality.items()):
            print(f"  grip quality {key}: {value:g}")
    if args.write:
        Path(args.write).write_text(yaml.safe_dump(overlay, sort_keys=True))
        print(f"wrote overlay to {args.write}")
    return 0


def _cmd_touch(args, config, out_dir) -> int:
    depth = touch_sensitivity_test(args.kind, config)
    print(f"touch sensitivity ({args.kind}): contact registered at {depth:g} mm")
    return 0


def _cmd_slip(args, config, out_dir) -> int:
    result = slip_resistance_test(args.kind, args.object, config, seed=args.seed)
    a, b, c = result.coefficients
    print(f"slip resistance ({args.kind}, {args.object}): onset {result.onset_n:.2f} N, "
          f"fit a={a:.4f} b={b:.4f} c={c:.4f}")
    _ensure(out_dir)
    stem = f"slip_{args.object.replace(' ', '_')}_{args.kind}"
    print("wrote", write_slip_samples_csv(result, out_dir / f"{stem}.csv"))
    print("wrote", write_slip_coefficients(result, out_dir / f"{stem}_fit.csv"))
    print("wrote", save_slip_figure([result], out_dir / f"{stem}.png"))
    return 0


def _cmd_sweep(args, config, out_dir) -> int:
    result = perturbation_weight_sweep(args.object, args.kind, config, seed=args.seed,
                                       reps=args.reps, increment_g=args.increment)
    note = f"  ({result.annotation})" if result.annotation else ""
    print(f"max held mass ({args.object}, {args.kind}): "
          f"{result.max_held_total_g:.0f} g{note}  [{result.runtime_s:.1f}s]")
    _ensure(out_dir)
    stem = f"sweep_{args.object.replace(' ', '_')}_{args.kind}_seed{args.seed}"
    print("wrote", write_sweep_csv(result, out_dir / f"{stem}.csv"))
    return 0


def _cmd_run(args, config, out_dir) -> int:
    from .sequence import GraspSequenceEngine

    engine = GraspSequenceEngine(args.object, args.kind, config, seed=args.seed,
                                 added_mass_g=args.mass, record_rows=True)
    outcome, record = engine.run_threaded() if args.mode == "threaded" else engine.run()
    print(f"outcome: {outcome.status.value} (slip {outcome.slip_distance_mm:.1f} mm, "
          f"peak load factor {outcome.peak_load_factor:.4f})"
          + (f" [{outcome.annotation}]" if outcome.annotation else ""))
    _ensure(out_dir)
    stem = record.run_id
    log_path = out_dir / f"{stem}.log"
    write_log(log_path, record.meta(), engine.messages)
    print("wrote", log_path)
    csv_path = out_dir / f"{stem}.csv"
    record_to_csv(record, csv_path)
    print("wrote", csv_path)
    if not args.no_figure:
        print("wrote", save_run_figure(record, out_dir / f"{stem}.png"))
        _write_peak_colormap(record, config, args.kind, out_dir / f"{stem}_map")
    return 0


def _write_peak_colormap(record, config, kind, stem: Path):
    layout = config.layout(kind)
    if not record.rows:
        return
    peak_row = max(record.rows, key=lambda row: max(max(f) for f in row.normalized))
    frame = NormalizedFrame(kind=layout.kind, timestamp_us=peak_row.timestamp_us,
                            values=np.asarray(peak_row.normalized[0]))
    grid = render_spatial_map(frame, layout)
    print("wrote", write_colormap_text(grid, stem.with_suffix(".txt")))
    print("wrote", save_colormap_figure(grid, stem.with_suffix(".png"),
                                        title=f"{record.object_name} thumb peak"))


def _cmd_replay(args, config, out_dir) -> int:
    meta, mismatches = verify_replay(args.log, config)
    print(f"replayed {args.log}: run {meta.get('run_id', '?')}")
    if mismatches:
        for line in mismatches:
            print("MISMATCH:", line)
        return 1
    print("replay verified: contact vectors and outcome reproduce exactly")
    return 0


def _cmd_report(args, config, out_dir) -> int:
    records = []
    for path in args.logs:
        path = Path(path)
        if path.suffix == ".csv":
            records.append(record_from_csv(path))
        else:
            records.append(_record_from_log(path, config))
    rows = summarize_records(records)
    _ensure(out_dir)
    summary = write_summary_csv(rows, out_dir / "summary.csv")
    print(f"{'object':13s} {'kind':7s} {'max mass':>9s}  note")
    for row in rows:
        print(f"{row['object']:13s} {row['kind']:7s} {row['max_mass_g']:8.0f}g  {row['annotation']}")
    print("wrote", summary)
    if args.figures:
        for record in records:
            if record.rows:
                out = out_dir / f"{record.run_id}.png"
                print("wrote", save_run_figure(record, out))
    return 0


def _record_from_log(path, config):
    from .recording import ExperimentRecord, TOPIC_OUTCOME, replay_streams, rows_from_messages

    meta, messages = read_log(path)
    streams = replay_streams(messages)
    outcome = streams[TOPIC_OUTCOME][0].payload if streams[TOPIC_OUTCOME] else None
    return ExperimentRecord(
        run_id=meta["run_id"], object_name=meta["object"], kind=meta["kind"],
        added_mass_g=float(meta["added_mass_g"]), seed=int(meta["seed"]),
        config_digest=meta["config_digest"], rows=rows_from_messages(messages),
        outcome=outcome)


if __name__ == "__main__":
    sys.exit(main())
