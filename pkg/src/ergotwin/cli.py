"""Command-line entry point: simulate, train, evaluate, sweep.

Each command writes its artifacts plus a ``manifest.json`` recording the
invocation, tool version, and content hashes, so identical inputs and
seeds reproduce identical bytes.  Report-producing commands render a
PNG figure next to the delimited output.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, report
from .estimator import (RmsReport, TargetScaler, TrainConfig, evaluate_rms,
                        load_weights, save_weights, train)
from .protocol import (ORIENTATIONS_DEG, build_repetition_protocol,
                       run_session, split_dataset)
from .recording import load_recording, save_recording
from .sessioncfg import ConfigError, SessionConfig, SplitPolicy, load_config

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4

SWEEP_REPETITIONS = 6


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Provenance record written once per invocation.

    Hashes cover both the inputs consumed and the artifacts produced;
    everything is derived from file contents and arguments, never from
    clocks, so a rerun with the same inputs writes the same manifest.
    """

    command: str
    argv: tuple[str, ...]
    tool_version: str
    config_path: str | None
    seeds: tuple[int, ...]
    out_dir: str
    input_hashes: dict[str, str]
    output_hashes: dict[str, str]

    def write(self, path: str) -> None:
        body = dataclasses.asdict(self)
        body["argv"] = list(self.argv)
        body["seeds"] = list(self.seeds)
        with open(path, "w", newline="\n") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_files(paths: dict[str, str]) -> dict[str, str]:
    return {name: _sha256(p) for name, p in sorted(paths.items())}


def _write_manifest(args: argparse.Namespace, seeds: tuple[int, ...],
                    inputs: dict[str, str], outputs: dict[str, str]) -> None:
    manifest = RunManifest(
        command=args.command,
        argv=tuple(args.raw_argv),
        tool_version=__version__,
        config_path=args.config,
        seeds=seeds,
        out_dir=args.out,
        input_hashes=_hash_files(inputs),
        output_hashes=_hash_files(outputs),
    )
    manifest.write(os.path.join(args.out, "manifest.json"))


def _parse_seeds(text: str) -> list[int]:
    """Seed list syntax: "4", "0,1,5", or inclusive ranges "0-9"."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            cut = part.index("-", 1)
            lo, hi = int(part[:cut]), int(part[cut + 1:])
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"empty seed list: {text!r}")
    return seeds


def _seed_list(text: str) -> list[int]:
    try:
        return _parse_seeds(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sidecar_path(csv_path: str) -> str:
    root = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return root + "_emg.bin"


def _scaler_for(cfg: SessionConfig) -> TargetScaler:
    """Affine target scaler spanning the admissible label ranges."""
    if not cfg.stiffness_high > cfg.stiffness_low:
        raise ConfigError("stiffness_high must exceed stiffness_low")
    return TargetScaler(
        np.array([cfg.stiffness_low, min(ORIENTATIONS_DEG)]),
        np.array([cfg.stiffness_high, max(ORIENTATIONS_DEG)]))


def _policy_for(cfg: SessionConfig, args: argparse.Namespace,
                mode: str | None = None) -> SplitPolicy:
    fraction = cfg.split.fraction
    if args.split_fraction is not None:
        fraction = args.split_fraction
    return SplitPolicy(mode=mode if mode is not None else cfg.split.mode,
                       fraction=fraction,
                       per_trial_average=cfg.split.per_trial_average)


def _train_config(cfg: SessionConfig, args: argparse.Namespace,
                  seed: int) -> TrainConfig:
    return TrainConfig(
        lr=args.lr if args.lr is not None else cfg.lr,
        epochs=args.epochs if args.epochs is not None else cfg.epochs,
        batch_size=cfg.batch_size,
        seed=seed)


def _rms_rows(rep: RmsReport) -> list[list[str]]:
    rows = []
    for j, label in enumerate(("K (N*m/rad)", "theta (deg)")):
        row = [label]
        for name in RmsReport.SECTION_ORDER:
            if name in rep.sections:
                row.append(f"{rep.sections[name][j]:.17g}")
            else:
                row.append("")
        rows.append(row)
    return rows


RMS_HEADER = ["output", "First", "Second", "Third", "Whole"]


def _format_csv(header: list[str], rows: list[list[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def _short(cell: str) -> str:
    try:
        return f"{float(cell):.3f}"
    except ValueError:
        return cell


def _format_table(header: list[str], rows: list[list[str]],
                  title: str) -> str:
    display = [[_short(c) for c in row] for row in rows]
    widths = [max(len(header[i]), *(len(r[i]) for r in display))
              for i in range(len(header))]
    lines = [title]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in display:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    rec = run_session(seed=args.seed, cfg=cfg)
    csv_path = os.path.join(args.out, "session.csv")
    sidecar = _sidecar_path(csv_path)
    save_recording(rec, csv_path, sidecar)
    inputs = {"config": args.config} if args.config else {}
    _write_manifest(args, (args.seed,), inputs,
                    {"session.csv": csv_path, "session_emg.bin": sidecar})
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    sidecar = _sidecar_path(args.recording)
    rec = load_recording(args.recording, sidecar)
    train_set, _ = split_dataset(rec, _policy_for(cfg, args))
    scaler = _scaler_for(cfg)
    weights, curve = train(train_set, scaler, _train_config(cfg, args,
                                                            args.seed))
    weights_path = os.path.join(args.out, "weights.txt")
    save_weights(weights_path, weights, scaler, args.seed)
    curve_path = os.path.join(args.out, "loss_curve.csv")
    with open(curve_path, "w", newline="\n") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(curve):
            fh.write(f"{i},{loss:.17g}\n")
    figure_path = os.path.join(args.out, "loss_curve.png")
    report.loss_curve_figure(curve, figure_path)
    inputs = {"recording": args.recording, "recording_emg": sidecar}
    if args.config:
        inputs["config"] = args.config
    _write_manifest(args, (args.seed,), inputs,
                    {"weights.txt": weights_path,
                     "loss_curve.csv": curve_path,
                     "loss_curve.png": figure_path})
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    weights, scaler, _seed = load_weights(args.weights)
    sidecar = _sidecar_path(args.recording)
    rec = load_recording(args.recording, sidecar)
    _, test_set = split_dataset(rec, _policy_for(cfg, args))
    rep = evaluate_rms(weights, scaler, test_set)

    rows = _rms_rows(rep)
    csv_text = _format_csv(RMS_HEADER, rows)
    csv_path = os.path.join(args.out, "rms.csv")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(csv_text)
    figure_path = os.path.join(args.out, "rms.png")
    report.section_figure(rep, figure_path)
    if args.format == "table":
        sys.stdout.write(_format_table(
            RMS_HEADER, rows,
            "RMS error by test section (K in N*m/rad, theta in deg)"))
    else:
        sys.stdout.write(csv_text)
    inputs = {"weights": args.weights, "recording": args.recording,
              "recording_emg": sidecar}
    if args.config:
        inputs["config"] = args.config
    _write_manifest(args, (), inputs,
                    {"rms.csv": csv_path, "rms.png": figure_path})
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Longitudinal accuracy experiment over several seeded subjects.

    Runs an extended session of repeated task factorials, trains on the
    first part and evaluates on the rest, so the contiguous test thirds
    cover identical task mixes at increasing amounts of accumulated
    fatigue.  With ``--fatigue off`` all accumulation rates are zeroed.
    """
    cfg = load_config(args.config)
    if args.fatigue == "off":
        cfg = cfg.without_fatigue()
    os.makedirs(args.out, exist_ok=True)
    protocol = build_repetition_protocol(repetitions=SWEEP_REPETITIONS,
                                         duration_s=cfg.duration_s,
                                         rest_s=cfg.rest_s)
    policy = SplitPolicy(
        mode="session-temporal",
        fraction=args.split_fraction if args.split_fraction is not None
        else 0.5)
    scaler = _scaler_for(cfg)

    seeds = list(args.seed)
    section_rows = np.empty((len(seeds), 3, 2))
    whole_rows = np.empty((len(seeds), 2))
    for i, seed in enumerate(seeds):
        rec = run_session(seed=seed, cfg=cfg, protocol=protocol)
        train_set, test_set = split_dataset(rec, policy)
        weights, _ = train(train_set, scaler, _train_config(cfg, args, seed))
        rep = evaluate_rms(weights, scaler, test_set)
        for s, name in enumerate(("first", "second", "third")):
            section_rows[i, s] = rep.sections[name]
        whole_rows[i] = rep.sections["whole"]

    header = ["seed", "output", "First", "Second", "Third", "Whole"]
    rows = []
    for i, seed in enumerate(seeds):
        for j, label in enumerate(("K (N*m/rad)", "theta (deg)")):
            rows.append([str(seed), label]
                        + [f"{v:.17g}" for v in section_rows[i, :, j]]
                        + [f"{whole_rows[i, j]:.17g}"])
    med = np.median(section_rows, axis=0)
    iqr = np.subtract(*np.percentile(section_rows, [75, 25], axis=0))
    med_whole = np.median(whole_rows, axis=0)
    iqr_whole = np.subtract(*np.percentile(whole_rows, [75, 25], axis=0))
    for j, label in enumerate(("K (N*m/rad)", "theta (deg)")):
        rows.append(["median", label] + [f"{v:.17g}" for v in med[:, j]]
                    + [f"{med_whole[j]:.17g}"])
        rows.append(["iqr", label] + [f"{v:.17g}" for v in iqr[:, j]]
                    + [f"{iqr_whole[j]:.17g}"])

    csv_text = _format_csv(header, rows)
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(csv_text)
    figure_path = os.path.join(args.out, "sweep.png")
    report.sweep_figure(seeds, section_rows, figure_path)
    if args.format == "table":
        sys.stdout.write(_format_table(
            header, rows[-4:],
            "Aggregate section RMS (K in N*m/rad, theta in deg)"))
    else:
        sys.stdout.write(csv_text)
    inputs = {"config": args.config} if args.config else {}
    _write_manifest(args, tuple(seeds), inputs,
                    {"sweep.csv": csv_path, "sweep.png": figure_path})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergotwin",
        description="Digital twin of a two-axis robotic exercise machine.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seeds: bool = False) -> None:
        p.add_argument("--config", default=None,
                       help="session config file (defaults when omitted)")
        if seeds:
            p.add_argument("--seed", type=_seed_list, default=[0],
                           help="seed list, e.g. 4 or 0,2,5 or 0-9")
        else:
            p.add_argument("--seed", type=int, default=0,
                           help="session/training seed")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="run one seeded session to disk")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train the estimator on a recording")
    common(p)
    p.add_argument("--recording", required=True,
                   help="session CSV (EMG sidecar found alongside)")
    p.add_argument("--split-fraction", type=float, default=None,
                   help="train fraction override")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="sectioned RMS report for weights")
    common(p)
    p.add_argument("--weights", required=True, help="trained weights file")
    p.add_argument("--recording", required=True,
                   help="session CSV (EMG sidecar found alongside)")
    p.add_argument("--split-fraction", type=float, default=None,
                   help="train fraction override")
    p.add_argument("--format", choices=("csv", "table"), default="csv",
                   help="stdout format")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep",
                       help="multi-seed longitudinal accuracy experiment")
    common(p, seeds=True)
    p.add_argument("--fatigue", choices=("on", "off"), default="on",
                   help="off zeroes all fatigue accumulation rates")
    p.add_argument("--split-fraction", type=float, default=None,
                   help="session-time train fraction (default 0.5)")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--format", choices=("csv", "table"), default="csv",
                   help="stdout format")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    raw_argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(raw_argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE
    args.raw_argv = raw_argv
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
