"""Per-session pipeline: gaze trace -> fixations -> AOI proportions -> scores."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .aoi import InteractionMetrics, interaction_metrics
from .fixations import data_loss_ratio, detect_fixations
from .model import DialogueTree, Fixation, ParticipantMetrics, SceneLog, Session
from .scoring import ScoredInteraction, etmp_score, gaze_bias_aggregates, traditional_score

log = logging.getLogger(__name__)


@dataclass
class SessionScore:
    participant_id: str
    rows: list[ParticipantMetrics] = field(default_factory=list)
    interactions: list[tuple[str, InteractionMetrics]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def score_scene(
    session: Session,
    scene: SceneLog,
    tree: DialogueTree,
    fixations: Sequence[Fixation],
) -> tuple[ParticipantMetrics | None, list[InteractionMetrics]]:
    """Metrics row for one scene, or None when no interaction received fixations."""
    per_interaction = []
    scored = []
    for ev in scene.events:
        inter = tree[ev.interaction_id]
        m = interaction_metrics(fixations, ev, inter)
        per_interaction.append(m)
        scored.append(ScoredInteraction(m, inter, ev.selected_option_id))
    counted = sum(m.counted for m in per_interaction)
    if counted == 0:
        return None, per_interaction
    etmp = etmp_score(per_interaction, tree)
    bias = gaze_bias_aggregates(scored)
    loss = data_loss_ratio(scene.gaze) if scene.gaze is not None and len(scene.gaze) else 0.0
    row = ParticipantMetrics(
        participant_id=session.participant_id,
        scene_id=scene.scene_id,
        etmp_sum=etmp.total,
        etmp_mean=etmp.mean,
        traditional_score=traditional_score(session, tree, scene.scene_id),
        avg_answer_fix=bias.avg_answer_fix,
        avg_nonanswer_fix_combined=bias.avg_nonanswer_fix_combined,
        avg_nonanswer_fix_average=bias.avg_nonanswer_fix_average,
        app_fix=bias.app_fix,
        inapp_fix=bias.inapp_fix,
        data_loss=loss,
        interactions_counted=counted,
        interactions_skipped=len(per_interaction) - counted,
        cq_metacognitive=session.cq_metacognitive,
        cq_cognitive=session.cq_cognitive,
    )
    return row, per_interaction


def score_session(
    session: Session,
    tree: DialogueTree,
    detector: str = "idt",
    params=None,
    fixations: Mapping[str, Sequence[Fixation]] | None = None,
) -> SessionScore:
    """Score every scene of ``session``.

    ``fixations`` maps scene id to precomputed fixations; scenes missing from
    it are detected from their gaze trace with ``detector``.
    """
    out = SessionScore(session.participant_id)
    for scene in session.scenes:
        if fixations is not None and scene.scene_id in fixations:
            fx = list(fixations[scene.scene_id])
        elif scene.gaze is not None:
            fx = detect_fixations(scene.gaze, detector, params)
        else:
            out.warnings.append(f"participant {session.participant_id}: scene {scene.scene_id} has no gaze data; skipped")
            continue
        row, per_interaction = score_scene(session, scene, tree, fx)
        out.interactions.extend((scene.scene_id, m) for m in per_interaction)
        skipped = sum(not m.counted for m in per_interaction)
        if skipped:
            log.info("participant %s scene %s: %d interaction(s) without option fixations skipped",
                     session.participant_id, scene.scene_id, skipped)
        if row is None:
            out.warnings.append(
                f"participant {session.participant_id}: scene {scene.scene_id} has no interaction with option fixations; skipped"
            )
            continue
        out.rows.append(row)
    return out
