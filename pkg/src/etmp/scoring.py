"""Gaze-weighted performance score, explicit game score and gaze-bias aggregates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .aoi import InteractionMetrics
from .model import HIGH_SCORES, DialogueTree, Interaction, Session


class NoCountedInteractions(ValueError):
    pass


@dataclass(frozen=True)
class EtmpScore:
    total: float
    mean: float
    interactions_counted: int


@dataclass(frozen=True)
class ScoredInteraction:
    metrics: InteractionMetrics
    interaction: Interaction
    selected_option_id: str


@dataclass(frozen=True)
class GazeBias:
    avg_answer_fix: float
    avg_nonanswer_fix_combined: float
    avg_nonanswer_fix_average: float
    app_fix: float
    inapp_fix: float
    interactions_counted: int


def interaction_contribution(metrics: InteractionMetrics, interaction: Interaction) -> float:
    """Sum over options of appropriateness score times fixation proportion."""
    return math.fsum(o.score * metrics.proportion(o.option_id) for o in interaction.options)


def etmp_score(metrics: Sequence[InteractionMetrics], tree: DialogueTree) -> EtmpScore:
    contributions = [interaction_contribution(m, tree[m.interaction_id]) for m in metrics if m.counted]
    if not contributions:
        raise NoCountedInteractions("ETMP is undefined without at least one interaction that received fixations")
    total = math.fsum(contributions)
    return EtmpScore(total, total / len(contributions), len(contributions))


def traditional_score(session: Session, tree: DialogueTree, scene_id: str | None = None) -> float:
    """Sum of the appropriateness scores of the options actually chosen."""
    scenes = session.scenes if scene_id is None else (session.scene(scene_id),)
    return float(sum(tree[e.interaction_id].option(e.selected_option_id).score for s in scenes for e in s.events))


def appropriate_options(interaction: Interaction) -> frozenset[str]:
    high = frozenset(o.option_id for o in interaction.options if o.score in HIGH_SCORES)
    if high:
        return high
    # no 4/5 rated option: every option tied at the interaction's best score
    best = max(o.score for o in interaction.options)
    return frozenset(o.option_id for o in interaction.options if o.score == best)


def gaze_bias_aggregates(scored: Sequence[ScoredInteraction]) -> GazeBias:
    answer, combined, average, app, inapp = [], [], [], [], []
    for item in scored:
        m = item.metrics
        if not m.counted:
            continue
        inter = item.interaction
        sel = m.proportion(item.selected_option_id)
        rest = math.fsum(m.proportion(o) for o in inter.option_ids if o != item.selected_option_id)
        good = appropriate_options(inter)
        answer.append(sel)
        combined.append(rest)
        average.append(rest / (len(inter.options) - 1))
        app.append(math.fsum(m.proportion(o) for o in inter.option_ids if o in good))
        inapp.append(math.fsum(m.proportion(o) for o in inter.option_ids if o not in good))
    if not answer:
        raise NoCountedInteractions("gaze-bias aggregates need at least one interaction that received fixations")
    n = len(answer)
    return GazeBias(
        avg_answer_fix=math.fsum(answer) / n,
        avg_nonanswer_fix_combined=math.fsum(combined) / n,
        avg_nonanswer_fix_average=math.fsum(average) / n,
        app_fix=math.fsum(app) / n,
        inapp_fix=math.fsum(inapp) / n,
        interactions_counted=n,
    )
