"""Command-line front end: merge, calibrate, detect, trace, synth, evaluate.

Exit codes: 0 success, 1 usage error, 2 data error.  Outputs are written
atomically (temp file + rename).  ``DUALPOL_LEAP_SECONDS`` overrides the
GPS-UTC leap second default of 18.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import detector, evaluation, obs, satgeo
from .errors import DualpolError
from .raytrace import scene as scene_mod
from .raytrace import trace as trace_mod

log = logging.getLogger("dualpol")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(
        dir=target.parent or Path("."), prefix=target.name, suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise DualpolError(f"input file not found: {path}") from None


def _leap_seconds(args) -> float:
    if args.leap_seconds is not None:
        return args.leap_seconds
    env = os.environ.get("DUALPOL_LEAP_SECONDS")
    if env is not None:
        return float(env)
    return satgeo.DEFAULT_LEAP_SECONDS


def _add_rx_flags(p):
    p.add_argument("--rx-lat", type=float, required=True, help="receiver latitude, degrees")
    p.add_argument("--rx-lon", type=float, required=True, help="receiver longitude, degrees")
    p.add_argument("--rx-height", type=float, default=0.0, help="receiver ellipsoidal height, m")


def _add_leap_flag(p):
    p.add_argument(
        "--leap-seconds",
        type=float,
        default=None,
        help="GPS-UTC leap seconds (default 18, env DUALPOL_LEAP_SECONDS)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dualpol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("merge", help="join two single-channel logs on (epoch, prn)")
    p.add_argument("--rhcp", required=True, help="RHCP channel CSV")
    p.add_argument("--lhcp", required=True, help="LHCP channel CSV")
    p.add_argument("--out", required=True, help="merged observation CSV")

    p = sub.add_parser("calibrate", help="build the elevation-dependent threshold curve")
    p.add_argument("--obs", required=True, help="merged observation CSV (clean site)")
    p.add_argument("--almanac", required=True, help="YUMA almanac file")
    _add_rx_flags(p)
    _add_leap_flag(p)
    p.add_argument("--bin-width", type=float, default=detector.DEFAULT_BIN_WIDTH_DEG)
    p.add_argument("--out", required=True, help="threshold curve JSON")

    p = sub.add_parser("detect", help="classify observations against a threshold curve")
    p.add_argument("--obs", required=True, help="merged observation CSV")
    p.add_argument("--curve", required=True, help="threshold curve JSON")
    p.add_argument("--almanac", required=True, help="YUMA almanac file")
    _add_rx_flags(p)
    _add_leap_flag(p)
    p.add_argument("--ratio", type=float, default=detector.DEFAULT_AGGREGATION_RATIO,
                   help="per-satellite multipath fraction that raises the flag")
    p.add_argument("--out", required=True, help="decision CSV")
    p.add_argument("--verdicts-out", default=None, help="per-satellite verdict JSON")

    p = sub.add_parser("trace", help="ray-trace a scene and emit ground-truth labels")
    p.add_argument("--scene", required=True, help="scene JSON")
    p.add_argument("--almanac", required=True, help="YUMA almanac file")
    p.add_argument("--epochs", required=True,
                   help="Unix epochs as start:stop:step or comma list")
    p.add_argument("--rx-height", type=float, default=trace_mod.DEFAULT_RX_HEIGHT_M,
                   help="receiver height above local ground, m")
    _add_leap_flag(p)
    p.add_argument("--max-order", type=int, default=2, choices=(0, 1, 2))
    p.add_argument("--prns", default=None, help="comma list of PRNs (default: all in almanac)")
    p.add_argument("--out", required=True, help="labels JSON")

    p = sub.add_parser("synth", help="synthesize observations from ground-truth labels")
    p.add_argument("--labels", required=True, help="labels JSON from trace")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.5, help="noise spread, dB")
    p.add_argument("--penalty", type=float, default=8.0,
                   help="multipath channel-difference penalty, dB")
    p.add_argument("--out", required=True, help="merged observation CSV")

    p = sub.add_parser("evaluate", help="score decisions against ground-truth labels")
    p.add_argument("--decisions", required=True, help="decision CSV from detect")
    p.add_argument("--labels", required=True, help="labels JSON from trace")
    p.add_argument("--out", required=True, help="evaluation report JSON")

    return parser


def _parse_epochs(spec: str):
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DualpolError(f"--epochs range must be start:stop:step, got {spec!r}")
        start, stop, step = (int(p) for p in parts)
        if step <= 0 or stop < start:
            raise DualpolError(f"bad epoch range {spec!r}")
        return list(range(start, stop, step))
    return [int(p) for p in spec.split(",") if p.strip()]


def _annotated_records(args):
    parsed = obs.parse_observations(_read(args.obs))
    if parsed.n_dropped:
        log.info("dropped %d single-channel rows", parsed.n_dropped)
    almanac = satgeo.parse_yuma(_read(args.almanac))
    rx = satgeo.GeodeticPosition(args.rx_lat, args.rx_lon, args.rx_height)
    return satgeo.annotate_elevations(
        parsed.records, almanac, rx, leap_seconds=_leap_seconds(args)
    )


def cmd_merge(args) -> int:
    merged = obs.merge_channels(_read(args.rhcp), _read(args.lhcp))
    if merged.n_dropped:
        log.info("dropped %d unmatched single-channel rows", merged.n_dropped)
    _atomic_write(args.out, obs.serialize_observations(merged.records))
    log.info("wrote %d merged records to %s", len(merged.records), args.out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    records = _annotated_records(args)
    curve = detector.calibrate(records, bin_width_deg=args.bin_width)
    _atomic_write(args.out, curve.to_json())
    log.info(
        "calibrated %d bins over %.1f-%.1f deg from %d records",
        len(curve.bins), curve.valid_range[0], curve.valid_range[1], len(records),
    )
    return EXIT_OK


def cmd_detect(args) -> int:
    records = _annotated_records(args)
    curve = detector.ThresholdCurve.from_json(_read(args.curve))
    decisions = [detector.classify(r, curve) for r in records]
    _atomic_write(args.out, detector.decisions_to_csv(decisions))
    verdicts = detector.aggregate(decisions, ratio=args.ratio)
    for v in verdicts:
        log.info(
            "PRN %d: %d/%d multipath (%.2f) -> %s",
            v.prn, v.n_multipath, v.n_multipath + v.n_clean,
            v.fraction_multipath, "FLAGGED" if v.flagged else "clean",
        )
    if args.verdicts_out:
        doc = [
            {
                "prn": v.prn,
                "window": list(v.window),
                "n_multipath": v.n_multipath,
                "n_clean": v.n_clean,
                "fraction_multipath": v.fraction_multipath,
                "flagged": v.flagged,
            }
            for v in verdicts
        ]
        _atomic_write(args.verdicts_out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_trace(args) -> int:
    scene = scene_mod.load_scene(_read(args.scene))
    almanac = satgeo.parse_yuma(_read(args.almanac))
    if args.prns:
        wanted = {int(p) for p in args.prns.split(",")}
        almanac = [e for e in almanac if e.prn in wanted]
    rx_geo = satgeo.GeodeticPosition(scene.origin_lat, scene.origin_lon, 0.0)
    rx_enu = (0.0, 0.0, args.rx_height)
    leap = _leap_seconds(args)
    entries = []
    for epoch in _parse_epochs(args.epochs):
        for entry in almanac:
            state = satgeo.satellite_state(entry, epoch, rx_geo, leap_seconds=leap)
            if state.elevation_deg <= 0.0:
                continue
            sat_dir = trace_mod.direction_from_angles(
                state.elevation_deg, state.azimuth_deg
            )
            paths = trace_mod.trace_paths(
                scene, rx_enu, sat_dir, max_order=args.max_order, prn=entry.prn
            )
            entries.append(
                trace_mod.label_entry(
                    epoch, entry.prn, state.elevation_deg, state.azimuth_deg, paths
                )
            )
    _atomic_write(args.out, trace_mod.dump_labels(entries))
    log.info("traced %d (epoch, prn) pairs to %s", len(entries), args.out)
    return EXIT_OK


def _labels_from_file(path):
    entries = trace_mod.load_labels(_read(path))
    return [
        (e["epoch"], e["prn"], e["elevation_deg"], e["label"]) for e in entries
    ]


def cmd_synth(args) -> int:
    labels = _labels_from_file(args.labels)
    model = evaluation.SynthesisModel(
        multipath_diff_penalty_db=args.penalty,
        noise_sigma_db=args.sigma,
        seed=args.seed,
    )
    records = evaluation.synthesize(labels, model)
    _atomic_write(args.out, obs.serialize_observations(records))
    log.info("synthesized %d records to %s", len(records), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    decisions = detector.decisions_from_csv(_read(args.decisions))
    labels = _labels_from_file(args.labels)
    report = evaluation.score(decisions, labels)
    _atomic_write(args.out, report.to_json())
    sys.stdout.write(report.to_text())
    return EXIT_OK


_COMMANDS = {
    "merge": cmd_merge,
    "calibrate": cmd_calibrate,
    "detect": cmd_detect,
    "trace": cmd_trace,
    "synth": cmd_synth,
    "evaluate": cmd_evaluate,
}


def run(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except DualpolError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
