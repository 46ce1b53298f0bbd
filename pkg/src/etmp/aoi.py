"""Fixation-to-AOI assignment and per-interaction fixation proportions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import Fixation, Interaction, InteractionEvent, Session


class AoiOverlapError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionMetrics:
    interaction_id: str
    option_ids: tuple[str, ...]
    total_fixation_ms: tuple[float, ...]
    proportions: tuple[float, ...]
    # False when no option AOI received any fixation time
    counted: bool

    def proportion(self, option_id: str) -> float:
        return self.proportions[self.option_ids.index(option_id)]


def aggregate_fixations(
    fixations: Iterable[Fixation],
    event: InteractionEvent,
    interaction: Interaction,
) -> dict[str, int]:
    """Fixation time per option, in option order.

    A fixation is credited to the option whose AOI contains its centroid
    (edges inclusive), clipped to the event's display window.
    """
    aois = [interaction.aoi_for(o.option_id) for o in interaction.options]
    for k, a in enumerate(aois):
        for b in aois[k + 1:]:
            if a.rect.intersects(b.rect):
                raise AoiOverlapError(
                    f"AOIs {a.aoi_id!r} and {b.aoi_id!r} of interaction {interaction.interaction_id!r} overlap; "
                    "fixation assignment would be ambiguous"
                )
    totals = {o.option_id: 0 for o in interaction.options}
    t_on, t_off = event.t_on_ms, event.t_off_ms
    for f in fixations:
        if f.start_ms >= t_off:
            break
        overlap = min(f.end_ms, t_off) - max(f.start_ms, t_on)
        if overlap <= 0:
            continue
        for a in aois:
            if a.rect.contains(f.centroid_x_px, f.centroid_y_px):
                totals[a.option_id] += overlap
                break
    return totals


def fixation_proportions(
    totals: Mapping[str, float] | Sequence[float],
    interaction_id: str = "",
) -> InteractionMetrics:
    """Normalise per-option fixation time to shares of the option-AOI total."""
    if isinstance(totals, Mapping):
        ids = tuple(totals)
        values = tuple(totals.values())
    else:
        values = tuple(totals)
        ids = tuple(str(k) for k in range(len(values)))
    if any(v < 0 for v in values):
        raise ValueError("fixation totals must be non-negative")
    denom = math.fsum(values)
    if denom > 0:
        props = tuple(v / denom for v in values)
        return InteractionMetrics(interaction_id, ids, values, props, True)
    return InteractionMetrics(interaction_id, ids, values, tuple(0.0 for _ in values), False)


def interaction_metrics(fixations: Sequence[Fixation], event: InteractionEvent, interaction: Interaction) -> InteractionMetrics:
    return fixation_proportions(aggregate_fixations(fixations, event, interaction), interaction.interaction_id)


def session_data_loss(session: Session) -> float:
    """Invalid-sample fraction pooled over every scene trace of the session."""
    total = invalid = 0
    for s in session.scenes:
        if s.gaze is None:
            continue
        total += len(s.gaze)
        invalid += int(np.count_nonzero(~s.gaze.valid))
    if total == 0:
        raise ValueError(f"participant {session.participant_id!r} has no gaze samples; data loss is undefined")
    return invalid / total


def exclude_participants(cohort: Sequence[Session], loss_threshold: float = 0.25) -> tuple[list[Session], list[Session]]:
    """Split ``cohort`` into (kept, excluded); loss strictly above the threshold excludes."""
    kept, excluded = [], []
    for s in cohort:
        (excluded if session_data_loss(s) > loss_threshold else kept).append(s)
    return kept, excluded
