"""Readers and writers for the on-disk formats.

* dialogue tree: one JSON document, ``{"interactions": [...]}``
* session log: one JSON document per participant
* gaze trace: CSV ``timestamp_ms,x_px,y_px,valid`` at ``<gaze_dir>/<participant>/<scene>.csv``
* fixations: CSV ``start_ms,end_ms,centroid_x_px,centroid_y_px``
* metrics: CSV, one row per participant x scene
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .model import (
    Aoi,
    DialogueOption,
    DialogueTree,
    Fixation,
    GazeTrace,
    Interaction,
    InteractionEvent,
    ParticipantMetrics,
    Rect,
    SceneLog,
    Session,
)

GAZE_HEADER = ["timestamp_ms", "x_px", "y_px", "valid"]
FIXATION_HEADER = ["start_ms", "end_ms", "centroid_x_px", "centroid_y_px"]
INTERACTION_METRICS_HEADER = ["participant", "scene", "interaction", "option", "total_ms", "proportion", "counted"]
METRICS_HEADER = [
    "participant",
    "scene",
    "etmp_sum",
    "etmp_mean",
    "game_score",
    "avg_answer_fix",
    "avg_nonanswer_fix",
    "avg_nonanswer_fix_combined",
    "app_fix",
    "inapp_fix",
    "data_loss",
    "interactions_counted",
    "interactions_skipped",
    "cq_metacognitive",
    "cq_cognitive",
]
# CSV column -> ParticipantMetrics attribute, where they differ
_METRICS_RENAME = {
    "participant": "participant_id",
    "scene": "scene_id",
    "game_score": "traditional_score",
    "avg_nonanswer_fix": "avg_nonanswer_fix_average",
}


class DataFormatError(ValueError):
    """Malformed input file; carries the path and, for CSVs, the 1-based line."""

    def __init__(self, message: str, path: str | os.PathLike | None = None, line: int | None = None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path + (f":{line}" if line is not None else "") + ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _fmt_float(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _int_ms(value: Any, what: str) -> int:
    """Integer milliseconds; integral floats are accepted, fractional ones rejected."""
    if isinstance(value, bool):
        raise ValueError(f"{what} must be an integer number of milliseconds, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value.is_integer():
            return int(value)
        raise ValueError(f"{what} has sub-millisecond precision ({value!r}); integer milliseconds required")
    if isinstance(value, str):
        s = value.strip()
        try:
            return int(s)
        except ValueError:
            pass
        try:
            f = float(s)
        except ValueError:
            raise ValueError(f"{what} is not a number: {value!r}") from None
        if math.isfinite(f):
            return _int_ms(f, what)
    raise ValueError(f"{what} must be an integer number of milliseconds, got {value!r}")


# -- dialogue tree ---------------------------------------------------------

def _require(d: dict, key: str, ctx: str):
    if not isinstance(d, dict) or key not in d:
        raise DataFormatError(f"{ctx}: missing key {key!r}")
    return d[key]


def parse_dialogue_tree(doc: dict) -> DialogueTree:
    interactions = []
    raw = _require(doc, "interactions", "dialogue tree")
    if not isinstance(raw, list):
        raise DataFormatError("dialogue tree: 'interactions' must be a list")
    for k, item in enumerate(raw):
        ctx = f"interactions[{k}]"
        iid = str(_require(item, "id", ctx))
        options = []
        for j, o in enumerate(_require(item, "options", ctx)):
            octx = f"{ctx}.options[{j}]"
            score = _require(o, "score", octx)
            if isinstance(score, float) and score.is_integer():
                score = int(score)
            nxt = o.get("next")
            options.append(DialogueOption(
                option_id=str(_require(o, "id", octx)),
                text=str(o.get("text", "")),
                score=score,
                next_id=None if nxt is None else str(nxt),
            ))
        aois = []
        for j, a in enumerate(_require(item, "aois", ctx)):
            actx = f"{ctx}.aois[{j}]"
            option_id = str(_require(a, "option_id", actx))
            try:
                rect = Rect(*(float(_require(a, key, actx)) for key in ("left", "top", "width", "height")))
            except (TypeError, ValueError) as exc:
                raise DataFormatError(f"{actx}: {exc}") from None
            aois.append(Aoi(aoi_id=str(a.get("id", f"{iid}:{option_id}")), option_id=option_id, rect=rect))
        interactions.append(Interaction(iid, str(_require(item, "scene", ctx)), tuple(options), tuple(aois)))
    return DialogueTree(tuple(interactions))


def dialogue_tree_to_dict(tree: DialogueTree) -> dict:
    out = []
    for inter in tree.interactions:
        options = []
        for o in inter.options:
            d = {"id": o.option_id, "text": o.text, "score": o.score}
            if o.next_id is not None:
                d["next"] = o.next_id
            options.append(d)
        out.append({
            "id": inter.interaction_id,
            "scene": inter.scene_id,
            "options": options,
            "aois": [
                {"id": a.aoi_id, "option_id": a.option_id, "left": a.rect.left, "top": a.rect.top,
                 "width": a.rect.width, "height": a.rect.height}
                for a in inter.aois
            ],
        })
    return {"interactions": out}


def load_dialogue_tree(path: str | os.PathLike) -> DialogueTree:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return parse_dialogue_tree(doc)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    except DataFormatError as exc:
        raise DataFormatError(str(exc), path) from None


# -- gaze CSV ---------------------------------------------------------------

def parse_gaze_csv(text: str, path: str | os.PathLike | None = None) -> GazeTrace:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != GAZE_HEADER:
        raise DataFormatError(f"expected header {','.join(GAZE_HEADER)!r}", path, 1)
    ts, xs, ys, vs = [], [], [], []
    prev = None
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise DataFormatError(f"expected 4 fields, got {len(row)}", path, line)
        try:
            t = _int_ms(row[0], "timestamp_ms")
        except ValueError as exc:
            raise DataFormatError(str(exc), path, line) from None
        flag = row[3].strip()
        if flag not in ("0", "1"):
            raise DataFormatError(f"valid must be 0 or 1, got {row[3]!r}", path, line)
        valid = flag == "1"
        try:
            x = float(row[1]) if row[1].strip() else math.nan
            y = float(row[2]) if row[2].strip() else math.nan
        except ValueError:
            if valid:
                raise DataFormatError("non-numeric position on a valid sample", path, line) from None
            x = y = math.nan
        if valid and not (math.isfinite(x) and math.isfinite(y)):
            raise DataFormatError("valid sample has a non-finite position", path, line)
        if prev is not None and t < prev:
            raise DataFormatError(f"timestamp {t} is earlier than the previous sample ({prev})", path, line)
        prev = t
        ts.append(t)
        xs.append(x)
        ys.append(y)
        vs.append(valid)
    return GazeTrace(np.array(ts, dtype=np.int64), np.array(xs, dtype=float), np.array(ys, dtype=float), np.array(vs, dtype=bool))


def read_gaze_csv(path: str | os.PathLike) -> GazeTrace:
    return parse_gaze_csv(Path(path).read_text(encoding="utf-8"), path)


def format_gaze_csv(trace: GazeTrace) -> str:
    lines = [",".join(GAZE_HEADER)]
    for t, x, y, v in zip(trace.timestamp_ms.tolist(), trace.x_px.tolist(), trace.y_px.tolist(), trace.valid.tolist()):
        lines.append(f"{t},{_fmt_float(x)},{_fmt_float(y)},{int(v)}")
    return "\n".join(lines) + "\n"


def write_gaze_csv(path: str | os.PathLike, trace: GazeTrace) -> None:
    atomic_write_text(path, format_gaze_csv(trace))


def gaze_path(gaze_dir: str | os.PathLike, participant_id: str, scene_id: str) -> Path:
    return Path(gaze_dir) / participant_id / f"{scene_id}.csv"


# -- fixations CSV ----------------------------------------------------------

def format_fixations_csv(fixations: Iterable[Fixation]) -> str:
    lines = [",".join(FIXATION_HEADER)]
    for f in fixations:
        lines.append(f"{f.start_ms},{f.end_ms},{_fmt_float(f.centroid_x_px)},{_fmt_float(f.centroid_y_px)}")
    return "\n".join(lines) + "\n"


def write_fixations_csv(path: str | os.PathLike, fixations: Iterable[Fixation]) -> None:
    atomic_write_text(path, format_fixations_csv(fixations))


def read_fixations_csv(path: str | os.PathLike) -> list[Fixation]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != FIXATION_HEADER:
            raise DataFormatError(f"expected header {','.join(FIXATION_HEADER)!r}", path, 1)
        out = []
        for row in reader:
            if not row:
                continue
            try:
                out.append(Fixation(_int_ms(row[0], "start_ms"), _int_ms(row[1], "end_ms"), float(row[2]), float(row[3])))
            except (ValueError, IndexError) as exc:
                raise DataFormatError(str(exc), path, reader.line_num) from None
    return out


# -- session log JSON -------------------------------------------------------

def session_to_dict(session: Session) -> dict:
    cq = None
    if session.cq_metacognitive is not None or session.cq_cognitive is not None:
        cq = {"metacognitive": session.cq_metacognitive, "cognitive": session.cq_cognitive}
    return {
        "participant": session.participant_id,
        "cq": cq,
        "scenes": [
            {
                "scene": s.scene_id,
                "events": [
                    {"interaction_id": e.interaction_id, "t_on_ms": e.t_on_ms, "t_off_ms": e.t_off_ms,
                     "selected_option_id": e.selected_option_id}
                    for e in s.events
                ],
            }
            for s in session.scenes
        ],
    }


def parse_session(doc: dict, gaze: dict[str, GazeTrace] | None = None) -> Session:
    pid = str(_require(doc, "participant", "session"))
    cq = doc.get("cq") or {}
    scenes = []
    for k, s in enumerate(_require(doc, "scenes", "session")):
        ctx = f"scenes[{k}]"
        scene_id = str(_require(s, "scene", ctx))
        events = []
        for j, e in enumerate(_require(s, "events", ctx)):
            ectx = f"{ctx}.events[{j}]"
            try:
                events.append(InteractionEvent(
                    interaction_id=str(_require(e, "interaction_id", ectx)),
                    t_on_ms=_int_ms(_require(e, "t_on_ms", ectx), "t_on_ms"),
                    t_off_ms=_int_ms(_require(e, "t_off_ms", ectx), "t_off_ms"),
                    selected_option_id=str(_require(e, "selected_option_id", ectx)),
                ))
            except ValueError as exc:
                if isinstance(exc, DataFormatError):
                    raise
                raise DataFormatError(f"{ectx}: {exc}") from None
        scenes.append(SceneLog(scene_id, tuple(events), None if gaze is None else gaze.get(scene_id)))

    def _cq(key):
        v = cq.get(key)
        return None if v is None else float(v)

    return Session(pid, tuple(scenes), _cq("metacognitive"), _cq("cognitive"))


def save_session(session: Session, sessions_dir: str | os.PathLike, gaze_dir: str | os.PathLike | None = None) -> Path:
    path = Path(sessions_dir) / f"{session.participant_id}.json"
    atomic_write_text(path, dumps_json(session_to_dict(session)))
    if gaze_dir is not None:
        for s in session.scenes:
            if s.gaze is not None:
                write_gaze_csv(gaze_path(gaze_dir, session.participant_id, s.scene_id), s.gaze)
    return path


def load_session(path: str | os.PathLike, gaze_dir: str | os.PathLike | None = None) -> Session:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    try:
        session = parse_session(doc)
    except DataFormatError as exc:
        raise DataFormatError(str(exc), path) from None
    if gaze_dir is None:
        return session
    scenes = []
    for s in session.scenes:
        p = gaze_path(gaze_dir, session.participant_id, s.scene_id)
        scenes.append(SceneLog(s.scene_id, s.events, read_gaze_csv(p) if p.exists() else None))
    return Session(session.participant_id, tuple(scenes), session.cq_metacognitive, session.cq_cognitive)


def load_sessions(sessions_dir: str | os.PathLike, gaze_dir: str | os.PathLike | None = None) -> list[Session]:
    paths = sorted(Path(sessions_dir).glob("*.json"))
    return [load_session(p, gaze_dir) for p in paths]


# -- metrics CSVs -----------------------------------------------------------

def format_metrics_csv(rows: Iterable[ParticipantMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for r in rows:
        d = asdict(r)
        out = []
        for col in METRICS_HEADER:
            v = d[_METRICS_RENAME.get(col, col)]
            out.append(_fmt_float(v) if isinstance(v, float) or v is None else v)
        w.writerow(out)
    return buf.getvalue()


def write_metrics_csv(path: str | os.PathLike, rows: Iterable[ParticipantMetrics]) -> None:
    atomic_write_text(path, format_metrics_csv(rows))


def read_metrics_csv(path: str | os.PathLike) -> list[ParticipantMetrics]:
    types = {f.name: f.type for f in fields(ParticipantMetrics)}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in METRICS_HEADER if c not in (reader.fieldnames or [])]
        if missing:
            raise DataFormatError(f"missing columns {missing}", path, 1)
        rows = []
        for raw in reader:
            kw = {}
            try:
                for col in METRICS_HEADER:
                    name = _METRICS_RENAME.get(col, col)
                    val = raw[col]
                    t = types[name]
                    if t == "str":
                        kw[name] = val
                    elif t == "int":
                        kw[name] = int(val)
                    elif "None" in t:
                        kw[name] = None if val.strip() == "" else float(val)
                    else:
                        kw[name] = float(val)
            except ValueError as exc:
                raise DataFormatError(str(exc), path, reader.line_num) from None
            rows.append(ParticipantMetrics(**kw))
    return rows


def format_interaction_metrics_csv(records: Iterable[tuple[str, str, Any]]) -> str:
    """``records`` yields (participant, scene, InteractionMetrics)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(INTERACTION_METRICS_HEADER)
    for pid, scene, m in records:
        for opt, total, f in zip(m.option_ids, m.total_fixation_ms, m.proportions):
            w.writerow([pid, scene, m.interaction_id, opt, total, _fmt_float(f), int(m.counted)])
    return buf.getvalue()
