"""Command-line entry point: ``etmp {fixations,score,validate,simulate,report}``.

Exit codes: 0 success, 1 data error, 2 usage error.
Configuration precedence: command-line flags > ``--config`` JSON file > defaults.
The effective configuration is written next to each command's outputs.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import __version__
from .analysis import InsufficientDataError, format_report_text, report_to_dict, run_paper_analysis
from .aoi import exclude_participants, session_data_loss
from .fixations import IdtParams, IvtParams, TraceOrderError, detect_fixations
from .io import (
    DataFormatError,
    atomic_write_text,
    dialogue_tree_to_dict,
    dumps_json,
    format_fixations_csv,
    format_interaction_metrics_csv,
    format_metrics_csv,
    gaze_path,
    load_dialogue_tree,
    load_sessions,
    read_fixations_csv,
    read_gaze_csv,
    read_metrics_csv,
    save_session,
)
from .model import validate_session, validate_tree
from .pipeline import score_session
from .synth import default_dialogue_tree, generate_session, sample_profiles

log = logging.getLogger("etmp")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class DataError(Exception):
    pass


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    dialogue: str | None = None
    sessions: str | None = None
    gaze: str | None = None
    fixations: str | None = None
    metrics: str | None = None
    report: str | None = None
    detector: str = "idt"
    dispersion_px: float = 60.0
    velocity_px_per_s: float = 1200.0
    min_duration_ms: int = 100
    loss_threshold: float = 0.25
    etmp_column: str = "etmp_mean"
    seed: int = 0
    n: int = 200
    out: str = "etmp_out"
    format: str = "text"

    def detector_params(self):
        if self.detector == "idt":
            return IdtParams(self.dispersion_px, self.min_duration_ms)
        return IvtParams(self.velocity_px_per_s, self.min_duration_ms)

    def check(self) -> None:
        if self.detector not in ("idt", "ivt"):
            raise UsageError(f"--detector must be idt or ivt, not {self.detector!r}")
        if not 0.0 <= self.loss_threshold <= 1.0:
            raise UsageError("--loss-threshold must lie in [0, 1]")
        if self.format not in ("text", "json"):
            raise UsageError("--format must be text or json")
        if self.etmp_column not in ("etmp_mean", "etmp_sum"):
            raise UsageError("--etmp-column must be etmp_mean or etmp_sum")
        if self.n < 1:
            raise UsageError("--n must be at least 1")
        try:
            self.detector_params()
        except ValueError as exc:
            raise UsageError(str(exc)) from None


_FLAG_FIELDS = {
    "--dialogue": ("dialogue", str, "dialogue tree + AOI JSON"),
    "--sessions": ("sessions", str, "directory of session-log JSON files"),
    "--gaze": ("gaze", str, "gaze directory laid out as <participant>/<scene>.csv"),
    "--fixations": ("fixations", str, "reuse fixation CSVs laid out like --gaze instead of detecting"),
    "--metrics": ("metrics", str, "participant metrics CSV (validate; default <out>/participant_metrics.csv)"),
    "--report": ("report", str, "report JSON to render (report; default <out>/report.json)"),
    "--detector": ("detector", str, "fixation detector: idt or ivt"),
    "--dispersion-px": ("dispersion_px", float, "I-DT dispersion threshold in pixels"),
    "--velocity-px-per-s": ("velocity_px_per_s", float, "I-VT velocity threshold in pixels/second"),
    "--min-duration-ms": ("min_duration_ms", int, "minimum fixation duration in ms"),
    "--loss-threshold": ("loss_threshold", float, "exclude participants whose data loss exceeds this"),
    "--etmp-column": ("etmp_column", str, "ETMP variable used in regressions: etmp_mean or etmp_sum"),
    "--seed": ("seed", int, "random seed"),
    "--n": ("n", int, "number of simulated participants"),
    "--out": ("out", str, "output directory"),
    "--format": ("format", str, "stdout format: text or json"),
}

_COMMAND_FLAGS = {
    "fixations": ["--gaze", "--detector", "--dispersion-px", "--velocity-px-per-s", "--min-duration-ms", "--out"],
    "score": ["--dialogue", "--sessions", "--gaze", "--fixations", "--detector", "--dispersion-px",
              "--velocity-px-per-s", "--min-duration-ms", "--loss-threshold", "--out"],
    "validate": ["--metrics", "--etmp-column", "--out", "--format"],
    "simulate": ["--dialogue", "--n", "--seed", "--out"],
    "report": ["--report", "--out", "--format"],
}

_HELP = {
    "fixations": "detect fixations in every gaze trace and write them as CSV",
    "score": "run detection, AOI metrics and scoring; write participant metrics",
    "validate": "run the statistical analysis on a participant metrics CSV",
    "simulate": "generate a synthetic cohort (dialogue tree, session logs, gaze traces)",
    "report": "render a previously written report JSON",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etmp", description="Eye-tracking measure of performance toolkit")
    parser.add_argument("--version", action="version", version=f"etmp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, flags in _COMMAND_FLAGS.items():
        p = sub.add_parser(cmd, help=_HELP[cmd], description=_HELP[cmd])
        p.add_argument("--config", help="JSON file of configuration values (overridden by flags)")
        for flag in flags:
            dest, typ, help_ = _FLAG_FIELDS[flag]
            kw = {"dest": dest, "type": typ, "default": None, "help": help_}
            if flag == "--detector":
                kw["choices"] = ["idt", "ivt"]
            if flag == "--format":
                kw["choices"] = ["text", "json"]
            p.add_argument(flag, **kw)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = asdict(RunConfig())
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{args.config}: invalid JSON: {exc.msg}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise UsageError(f"{args.config}: unknown configuration keys {unknown}")
        values.update(doc)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    cfg = RunConfig(**values)
    cfg.check()
    return cfg


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise DataError(f"{what} not found: {path}")
    return p


def _write_config(cfg: RunConfig, command: str) -> None:
    atomic_write_text(Path(cfg.out) / f"{command}_config.json", dumps_json({"command": command, **asdict(cfg)}))


def cmd_fixations(cfg: RunConfig) -> int:
    _require(cfg, "gaze")
    gaze_dir = _existing(cfg.gaze, "gaze directory")
    params = cfg.detector_params()
    out_dir = Path(cfg.out) / "fixations"
    files = sorted(gaze_dir.glob("*/*.csv"))
    if not files:
        raise DataError(f"no gaze traces found under {gaze_dir} (expected <participant>/<scene>.csv)")
    for path in files:
        trace = read_gaze_csv(path)
        try:
            fx = detect_fixations(trace, cfg.detector, params)
        except TraceOrderError as exc:
            raise DataError(f"{path}: {exc}") from None
        rel = path.relative_to(gaze_dir)
        atomic_write_text(out_dir / rel, format_fixations_csv(fx))
        log.info("%s: %d fixations", rel, len(fx))
    _write_config(cfg, "fixations")
    print(f"wrote fixations for {len(files)} trace(s) to {out_dir}")
    return EXIT_OK


def cmd_score(cfg: RunConfig) -> int:
    _require(cfg, "dialogue", "sessions", "gaze")
    tree = load_dialogue_tree(_existing(cfg.dialogue, "dialogue tree"))
    problems = validate_tree(tree)
    if problems:
        raise DataError("dialogue tree is invalid:\n" + "\n".join(f"  {v}" for v in problems))
    sessions = load_sessions(_existing(cfg.sessions, "sessions directory"), _existing(cfg.gaze, "gaze directory"))
    if not sessions:
        raise DataError(f"no session logs (*.json) found in {cfg.sessions}")
    problems = []
    for s in sessions:
        problems.extend(f"  {s.participant_id}: {v}" for v in validate_session(s, tree))
        if all(sc.gaze is None for sc in s.scenes):
            problems.append(f"  {s.participant_id}: no gaze traces under {cfg.gaze}")
    if problems:
        raise DataError("session validation failed:\n" + "\n".join(problems))

    losses = {s.participant_id: session_data_loss(s) for s in sessions}
    kept, excluded = exclude_participants(sessions, cfg.loss_threshold)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["participant", "data_loss", "status"])
    for s in sessions:
        w.writerow([s.participant_id, repr(losses[s.participant_id]),
                    "excluded" if losses[s.participant_id] > cfg.loss_threshold else "kept"])
    out = Path(cfg.out)
    atomic_write_text(out / "exclusions.csv", buf.getvalue())
    for s in excluded:
        log.warning("excluded %s: data loss %.4f > %.4f", s.participant_id, losses[s.participant_id], cfg.loss_threshold)
    if not kept:
        raise DataError(f"all {len(sessions)} participant(s) exceed the data-loss threshold {cfg.loss_threshold}")

    params = cfg.detector_params()
    rows, per_interaction = [], []
    for s in kept:
        fixations = None
        if cfg.fixations is not None:
            fixations = {}
            for sc in s.scenes:
                p = gaze_path(cfg.fixations, s.participant_id, sc.scene_id)
                if p.exists():
                    fixations[sc.scene_id] = read_fixations_csv(p)
        try:
            result = score_session(s, tree, cfg.detector, params, fixations)
        except TraceOrderError as exc:
            raise DataError(f"participant {s.participant_id}: {exc}") from None
        for warning in result.warnings:
            log.warning(warning)
        rows.extend(result.rows)
        per_interaction.extend((s.participant_id, scene, m) for scene, m in result.interactions)
    if not rows:
        raise DataError("no participant produced a scorable scene")
    atomic_write_text(out / "participant_metrics.csv", format_metrics_csv(rows))
    atomic_write_text(out / "interaction_metrics.csv", format_interaction_metrics_csv(per_interaction))
    _write_config(cfg, "score")
    print(f"scored {len(kept)} participant(s) ({len(rows)} participant x scene rows); "
          f"excluded {len(excluded)}: " + (", ".join(f"{s.participant_id} ({losses[s.participant_id]:.3f})" for s in excluded) or "none"))
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    metrics_path = cfg.metrics or str(out / "participant_metrics.csv")
    rows = read_metrics_csv(_existing(metrics_path, "metrics CSV"))
    try:
        report = run_paper_analysis(rows, etmp_column=cfg.etmp_column)
    except InsufficientDataError as exc:
        raise DataError(str(exc)) from None
    for w in report.warnings:
        log.warning(w)
    doc = report_to_dict(report)
    text = format_report_text(doc)
    atomic_write_text(out / "report.json", dumps_json(doc))
    atomic_write_text(out / "report.txt", text)
    _write_config(cfg, "validate")
    sys.stdout.write(text if cfg.format == "text" else dumps_json(doc))
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    tree = load_dialogue_tree(_existing(cfg.dialogue, "dialogue tree")) if cfg.dialogue else default_dialogue_tree()
    problems = validate_tree(tree)
    if problems:
        raise DataError("dialogue tree is invalid:\n" + "\n".join(f"  {v}" for v in problems))
    out = Path(cfg.out)
    profiles = sample_profiles(cfg.n, seed=cfg.seed)
    atomic_write_text(out / "dialogue.json", dumps_json(dialogue_tree_to_dict(tree)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = [f.name for f in fields(profiles[0])]
    w.writerow(names)
    for p in profiles:
        session = generate_session(p, tree)
        save_session(session, out / "sessions", out / "gaze")
        w.writerow(["" if getattr(p, k) is None else (repr(getattr(p, k)) if isinstance(getattr(p, k), float) else getattr(p, k))
                    for k in names])
    atomic_write_text(out / "profiles.csv", buf.getvalue())
    _write_config(cfg, "simulate")
    print(f"simulated {cfg.n} participant(s) with seed {cfg.seed} into {out}")
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    path = cfg.report or str(Path(cfg.out) / "report.json")
    try:
        doc = json.loads(_existing(path, "report JSON").read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc.msg}") from None
    sys.stdout.write(format_report_text(doc) if cfg.format == "text" else dumps_json(doc))
    return EXIT_OK


COMMANDS = {
    "fixations": cmd_fixations,
    "score": cmd_score,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def _configure_logging() -> None:
    level = os.environ.get("ETMP_LOG", "WARNING").strip().upper()
    if level.isdigit():
        numeric = int(level)
    else:
        numeric = logging.getLevelName(level)
        if not isinstance(numeric, int):
            numeric = logging.WARNING
    logging.basicConfig(level=numeric, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"etmp {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DataFormatError, FileNotFoundError) as exc:
        print(f"etmp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
