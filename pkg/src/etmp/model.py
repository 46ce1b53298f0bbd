"""Domain types for gaze traces, dialogue trees and participant sessions.

Structural problems (missing keys, wrong types) are raised at parse time by
:mod:`etmp.io`.  Semantic problems (unknown ids, overlapping events, scores
outside the Likert range) are returned as :class:`Violation` records by
:func:`validate_tree` and :func:`validate_session`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LIKERT_MIN = 1
LIKERT_MAX = 5
HIGH_SCORES = frozenset({4, 5})


@dataclass(frozen=True)
class GazeSample:
    timestamp_ms: int
    x_px: float
    y_px: float
    valid: bool = True


@dataclass(frozen=True, eq=False)
class GazeTrace:
    """Column-oriented gaze recording; arrays are read-only after construction."""

    timestamp_ms: np.ndarray
    x_px: np.ndarray
    y_px: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamp_ms, dtype=np.int64)
        x = np.asarray(self.x_px, dtype=np.float64)
        y = np.asarray(self.y_px, dtype=np.float64)
        v = np.asarray(self.valid, dtype=bool)
        if not (t.ndim == x.ndim == y.ndim == v.ndim == 1):
            raise ValueError("gaze trace columns must be one-dimensional")
        if not (len(t) == len(x) == len(y) == len(v)):
            raise ValueError("gaze trace columns differ in length")
        for name, arr in (("timestamp_ms", t), ("x_px", x), ("y_px", y), ("valid", v)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_samples(cls, samples: Iterable[GazeSample]) -> "GazeTrace":
        samples = list(samples)
        return cls(
            timestamp_ms=np.array([s.timestamp_ms for s in samples], dtype=np.int64),
            x_px=np.array([s.x_px for s in samples], dtype=np.float64),
            y_px=np.array([s.y_px for s in samples], dtype=np.float64),
            valid=np.array([s.valid for s in samples], dtype=bool),
        )

    @classmethod
    def empty(cls) -> "GazeTrace":
        return cls(np.zeros(0, np.int64), np.zeros(0), np.zeros(0), np.zeros(0, bool))

    def samples(self) -> list[GazeSample]:
        return [
            GazeSample(int(t), float(x), float(y), bool(v))
            for t, x, y, v in zip(self.timestamp_ms, self.x_px, self.y_px, self.valid)
        ]

    def shifted(self, delta_ms: int) -> "GazeTrace":
        return GazeTrace(self.timestamp_ms + int(delta_ms), self.x_px, self.y_px, self.valid)

    def __len__(self) -> int:
        return len(self.timestamp_ms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GazeTrace):
            return NotImplemented
        return (
            np.array_equal(self.timestamp_ms, other.timestamp_ms)
            and np.array_equal(self.valid, other.valid)
            and np.array_equal(self.x_px, other.x_px, equal_nan=True)
            and np.array_equal(self.y_px, other.y_px, equal_nan=True)
        )

    __hash__ = None


def first_order_violation(timestamps: Sequence[int] | np.ndarray, strict: bool = False) -> int | None:
    """Index of the first sample whose timestamp goes backwards (or repeats, if strict)."""
    t = np.asarray(timestamps, dtype=np.int64)
    if len(t) < 2:
        return None
    step = np.diff(t)
    bad = np.flatnonzero(step <= 0 if strict else step < 0)
    return int(bad[0]) + 1 if len(bad) else None


@dataclass(frozen=True)
class Fixation:
    start_ms: int
    end_ms: int
    centroid_x_px: float
    centroid_y_px: float
    # source window as sample indices into the trace it came from (inclusive)
    first_sample: int = field(default=-1, compare=False, repr=False)
    last_sample: int = field(default=-1, compare=False, repr=False)

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class Rect:
    left: float
    top: float
    width: float
    height: float

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.left + self.width / 2, self.top + self.height / 2)

    def contains(self, x: float, y: float) -> bool:
        # edges inclusive
        return self.left <= x <= self.right and self.top <= y <= self.bottom

    def intersects(self, other: "Rect") -> bool:
        # closed rectangles: a shared edge counts as overlap
        return not (
            self.right < other.left
            or other.right < self.left
            or self.bottom < other.top
            or other.bottom < self.top
        )


@dataclass(frozen=True)
class Aoi:
    aoi_id: str
    option_id: str
    rect: Rect


@dataclass(frozen=True)
class DialogueOption:
    option_id: str
    text: str
    score: int
    # interaction this choice leads to; None falls through to the next
    # interaction of the same scene in document order
    next_id: str | None = None


@dataclass(frozen=True)
class Interaction:
    interaction_id: str
    scene_id: str
    options: tuple[DialogueOption, ...]
    aois: tuple[Aoi, ...]

    @property
    def option_ids(self) -> tuple[str, ...]:
        return tuple(o.option_id for o in self.options)

    @property
    def scores(self) -> tuple[int, ...]:
        return tuple(o.score for o in self.options)

    def option(self, option_id: str) -> DialogueOption:
        for o in self.options:
            if o.option_id == option_id:
                return o
        raise KeyError(f"interaction {self.interaction_id!r} has no option {option_id!r}")

    def aoi_for(self, option_id: str) -> Aoi:
        for a in self.aois:
            if a.option_id == option_id:
                return a
        raise KeyError(f"interaction {self.interaction_id!r} has no AOI for option {option_id!r}")


@dataclass(frozen=True)
class DialogueTree:
    interactions: tuple[Interaction, ...]

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {i.interaction_id: i for i in self.interactions})

    def __contains__(self, interaction_id: str) -> bool:
        return interaction_id in self._by_id

    def __getitem__(self, interaction_id: str) -> Interaction:
        return self._by_id[interaction_id]

    def get(self, interaction_id: str) -> Interaction | None:
        return self._by_id.get(interaction_id)

    @property
    def scenes(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for i in self.interactions:
            seen.setdefault(i.scene_id, None)
        return tuple(seen)

    def scene_interactions(self, scene_id: str) -> tuple[Interaction, ...]:
        return tuple(i for i in self.interactions if i.scene_id == scene_id)

    def start(self, scene_id: str) -> Interaction:
        members = self.scene_interactions(scene_id)
        if not members:
            raise KeyError(f"unknown scene {scene_id!r}")
        return members[0]

    def successor(self, interaction: Interaction, option_id: str) -> Interaction | None:
        nxt = interaction.option(option_id).next_id
        if nxt is not None:
            return self[nxt]
        members = self.scene_interactions(interaction.scene_id)
        pos = members.index(interaction)
        return members[pos + 1] if pos + 1 < len(members) else None


@dataclass(frozen=True)
class InteractionEvent:
    interaction_id: str
    t_on_ms: int
    t_off_ms: int
    selected_option_id: str


@dataclass(frozen=True)
class SceneLog:
    scene_id: str
    events: tuple[InteractionEvent, ...]
    gaze: GazeTrace | None = None


@dataclass(frozen=True)
class Session:
    participant_id: str
    scenes: tuple[SceneLog, ...]
    cq_metacognitive: float | None = None
    cq_cognitive: float | None = None

    @property
    def scene_ids(self) -> tuple[str, ...]:
        return tuple(s.scene_id for s in self.scenes)

    def scene(self, scene_id: str) -> SceneLog:
        for s in self.scenes:
            if s.scene_id == scene_id:
                return s
        raise KeyError(f"session {self.participant_id!r} has no scene {scene_id!r}")

    @property
    def has_cq(self) -> bool:
        return self.cq_metacognitive is not None and self.cq_cognitive is not None


@dataclass(frozen=True)
class ParticipantMetrics:
    """Per participant x scene derived quantities."""

    participant_id: str
    scene_id: str
    etmp_sum: float
    etmp_mean: float
    traditional_score: float
    avg_answer_fix: float
    avg_nonanswer_fix_combined: float
    avg_nonanswer_fix_average: float
    app_fix: float
    inapp_fix: float
    data_loss: float
    interactions_counted: int
    interactions_skipped: int
    cq_metacognitive: float | None = None
    cq_cognitive: float | None = None


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


def validate_interaction(interaction: Interaction) -> list[Violation]:
    out = []
    iid = interaction.interaction_id
    if len(interaction.options) < 2:
        out.append(Violation("too-few-options", f"interaction {iid!r} has {len(interaction.options)} option(s); at least 2 required"))
    ids = [o.option_id for o in interaction.options]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(Violation("duplicate-option", f"interaction {iid!r} repeats option id {dup!r}"))
    for o in interaction.options:
        if isinstance(o.score, bool) or not isinstance(o.score, int) or not LIKERT_MIN <= o.score <= LIKERT_MAX:
            out.append(Violation(
                "score-range",
                f"option {o.option_id!r} of interaction {iid!r} has score {o.score!r}; "
                f"Likert scores must be integers {LIKERT_MIN}-{LIKERT_MAX}",
            ))
    aoi_options = [a.option_id for a in interaction.aois]
    for o in interaction.options:
        n = aoi_options.count(o.option_id)
        if n != 1:
            out.append(Violation("aoi-count", f"option {o.option_id!r} of interaction {iid!r} has {n} AOIs; exactly 1 required"))
    for opt in sorted(set(aoi_options) - set(ids)):
        out.append(Violation("aoi-orphan", f"interaction {iid!r} has an AOI for unknown option {opt!r}"))
    for a in interaction.aois:
        if not (a.rect.width > 0 and a.rect.height > 0):
            out.append(Violation("aoi-size", f"AOI {a.aoi_id!r} of interaction {iid!r} has non-positive size"))
    for k, a in enumerate(interaction.aois):
        for b in interaction.aois[k + 1:]:
            if a.rect.intersects(b.rect):
                out.append(Violation("aoi-overlap", f"AOIs {a.aoi_id!r} and {b.aoi_id!r} of interaction {iid!r} overlap"))
    return out


def validate_tree(tree: DialogueTree) -> list[Violation]:
    out = []
    ids = [i.interaction_id for i in tree.interactions]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(Violation("duplicate-interaction", f"interaction id {dup!r} appears more than once"))
    for inter in tree.interactions:
        out.extend(validate_interaction(inter))
        for o in inter.options:
            if o.next_id is None:
                continue
            target = tree.get(o.next_id)
            if target is None:
                out.append(Violation("unknown-next", f"option {o.option_id!r} of {inter.interaction_id!r} leads to unknown interaction {o.next_id!r}"))
            elif target.scene_id != inter.scene_id:
                out.append(Violation("cross-scene-next", f"option {o.option_id!r} of {inter.interaction_id!r} leads into another scene"))
    if not out:
        out.extend(_cycle_violations(tree))
    return out


def _cycle_violations(tree: DialogueTree) -> list[Violation]:
    # dialogue graphs must be acyclic so every walk terminates
    state: dict[str, int] = {}
    out = []

    def visit(inter: Interaction) -> bool:
        state[inter.interaction_id] = 1
        for o in inter.options:
            nxt = tree.successor(inter, o.option_id)
            if nxt is None:
                continue
            s = state.get(nxt.interaction_id, 0)
            if s == 1 or (s == 0 and visit(nxt)):
                return True
        state[inter.interaction_id] = 2
        return False

    for inter in tree.interactions:
        if state.get(inter.interaction_id, 0) == 0 and visit(inter):
            out.append(Violation("cycle", f"dialogue graph of scene {inter.scene_id!r} contains a cycle"))
            break
    return out


def validate_session(session: Session, tree: DialogueTree) -> list[Violation]:
    """Every invariant violation of ``session`` against ``tree``; empty iff well-formed."""
    out = []
    pid = session.participant_id
    scene_ids = [s.scene_id for s in session.scenes]
    for dup in sorted({s for s in scene_ids if scene_ids.count(s) > 1}):
        out.append(Violation("duplicate-scene", f"participant {pid!r} logs scene {dup!r} more than once"))
    checked: set[str] = set()
    for scene in session.scenes:
        if not scene.events:
            out.append(Violation("empty-scene", f"participant {pid!r} scene {scene.scene_id!r} has no interaction events"))
        prev: InteractionEvent | None = None
        for ev in scene.events:
            inter = tree.get(ev.interaction_id)
            if inter is None:
                out.append(Violation("unknown-interaction", f"participant {pid!r} references unknown interaction {ev.interaction_id!r}"))
            else:
                if inter.scene_id != scene.scene_id:
                    out.append(Violation("scene-mismatch", f"interaction {ev.interaction_id!r} belongs to scene {inter.scene_id!r}, logged under {scene.scene_id!r}"))
                if ev.selected_option_id not in inter.option_ids:
                    out.append(Violation("unknown-selection", f"interaction {ev.interaction_id!r} has no option {ev.selected_option_id!r}"))
                if inter.interaction_id not in checked:
                    checked.add(inter.interaction_id)
                    out.extend(validate_interaction(inter))
            if not ev.t_off_ms > ev.t_on_ms:
                out.append(Violation("event-window", f"event for {ev.interaction_id!r} has t_off_ms {ev.t_off_ms} <= t_on_ms {ev.t_on_ms}"))
            if prev is not None and ev.t_on_ms < prev.t_off_ms:
                out.append(Violation("event-overlap", f"event for {ev.interaction_id!r} starts at {ev.t_on_ms} before the previous event ends at {prev.t_off_ms}"))
            prev = ev
        if scene.gaze is not None:
            bad = first_order_violation(scene.gaze.timestamp_ms)
            if bad is not None:
                out.append(Violation("gaze-order", f"participant {pid!r} scene {scene.scene_id!r} gaze timestamps decrease at sample {bad}"))
            finite = np.isfinite(scene.gaze.x_px) & np.isfinite(scene.gaze.y_px)
            nonfinite = np.flatnonzero(scene.gaze.valid & ~finite)
            if len(nonfinite):
                out.append(Violation("gaze-finite", f"participant {pid!r} scene {scene.scene_id!r} has a valid sample with non-finite position at sample {int(nonfinite[0])}"))
    for name in ("cq_metacognitive", "cq_cognitive"):
        val = getattr(session, name)
        if val is not None and not math.isfinite(val):
            out.append(Violation("cq-finite", f"participant {pid!r} has non-finite {name}"))
    return out
