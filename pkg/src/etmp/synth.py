"""Synthetic sessions with planted skill, gaze-bias and data-loss parameters.

Choice model: softmax over option scores with temperature
``1 / (10 * skill + 0.1)``.

Gaze model, per interaction: the prompt is read first (off every option AOI),
then the options are visited top to bottom once, then the chosen option gets
a second dwell.  Total option dwell time is the reading time of all option
texts; it is split across options by planted weights

    w_j  proportional to  exp(attraction * skill * (s_j - max s)) * (1 + gaze_bias * [j chosen])

and the chosen option's share is divided evenly between its two dwells.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .io import parse_dialogue_tree
from .model import DialogueTree, GazeTrace, Interaction, InteractionEvent, SceneLog, Session


@dataclass(frozen=True)
class ParticipantProfile:
    participant_id: str = "P001"
    skill: float = 0.5
    gaze_bias: float = 1.0
    reading_speed_ms_per_char: float = 30.0
    noise_px: float = 8.0
    seed: int = 0
    # fraction of samples replaced by blink bursts
    data_loss: float = 0.0
    cq_metacognitive: float | None = None
    cq_cognitive: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.skill <= 1.0:
            raise ValueError("skill must lie in [0, 1]")
        if self.gaze_bias < 0 or self.noise_px < 0:
            raise ValueError("gaze_bias and noise_px must be non-negative")
        if not self.reading_speed_ms_per_char > 0:
            raise ValueError("reading speed must be positive")
        if not 0.0 <= self.data_loss <= 1.0:
            raise ValueError("data_loss must lie in [0, 1]")


@dataclass(frozen=True)
class SynthConfig:
    sample_period_ms: int = 8
    attraction: float = 1.0
    saccade_samples: int = 3
    prompt_chars: int = 40
    npc_gap_ms: int = 800
    response_latency_ms: int = 200
    blink_samples: int = 12
    prompt_point: tuple[float, float] = (1280.0, 420.0)
    npc_point: tuple[float, float] = (1280.0, 300.0)


@dataclass(frozen=True)
class InteractionPlan:
    interaction_id: str
    selected_option_id: str
    weights: tuple[float, ...]
    # planted option dwell per option in ms, after quantisation to samples
    dwell_ms: tuple[int, ...]


@dataclass(frozen=True)
class SimulatedSession:
    session: Session
    plans: dict[str, tuple[InteractionPlan, ...]] = field(default_factory=dict)


def default_dialogue_tree() -> DialogueTree:
    text = resources.files("etmp").joinpath("data/dialogue_tree.json").read_text(encoding="utf-8")
    return parse_dialogue_tree(json.loads(text))


def choice_probabilities(scores: Sequence[int], skill: float) -> np.ndarray:
    inv_temp = 10.0 * skill + 0.1
    z = np.asarray(scores, dtype=float) * inv_temp
    z -= z.max()
    p = np.exp(z)
    return p / p.sum()


def gaze_weights(scores: Sequence[int], selected: int, skill: float, gaze_bias: float, attraction: float = 1.0) -> np.ndarray:
    s = np.asarray(scores, dtype=float)
    w = np.exp(attraction * skill * (s - s.max()))
    w[selected] *= 1.0 + gaze_bias
    return w / w.sum()


class _TraceBuilder:
    def __init__(self, period: int, noise_px: float, rng: np.random.Generator):
        self.period = period
        self.noise = noise_px
        self.rng = rng
        self.xs: list[np.ndarray] = []
        self.ys: list[np.ndarray] = []
        self.n = 0
        self.last = None

    @property
    def now_ms(self) -> int:
        return self.n * self.period

    def _emit(self, x: np.ndarray, y: np.ndarray):
        self.xs.append(x)
        self.ys.append(y)
        self.n += len(x)
        if len(x):
            self.last = (float(x[-1]), float(y[-1]))

    def saccade(self, target: tuple[float, float], samples: int):
        if self.last is None or samples <= 0:
            return
        frac = np.arange(1, samples + 1) / (samples + 1)
        x0, y0 = self.last
        self._emit(x0 + (target[0] - x0) * frac, y0 + (target[1] - y0) * frac)

    def dwell(self, point: tuple[float, float], n_samples: int):
        if n_samples <= 0:
            return
        self._emit(np.full(n_samples, point[0]), np.full(n_samples, point[1]))

    def finish(self, data_loss: float, blink_samples: int) -> GazeTrace:
        n = self.n
        x = np.concatenate(self.xs) if self.xs else np.zeros(0)
        y = np.concatenate(self.ys) if self.ys else np.zeros(0)
        if self.noise > 0 and n:
            x = x + self.rng.normal(0.0, self.noise, n)
            y = y + self.rng.normal(0.0, self.noise, n)
        valid = np.ones(n, dtype=bool)
        k = int(round(data_loss * n))
        if k:
            valid[_blink_indices(n, k, blink_samples, self.rng)] = False
            x[~valid] = np.nan
            y[~valid] = np.nan
        t = np.arange(n, dtype=np.int64) * self.period
        return GazeTrace(t, x, y, valid)


def _blink_indices(n: int, k: int, burst: int, rng: np.random.Generator) -> np.ndarray:
    """Exactly ``k`` distinct indices grouped into bursts of ``burst`` samples."""
    slots = n // burst
    bursts = -(-k // burst)
    if burst <= 1 or bursts > slots:
        return rng.choice(n, size=k, replace=False)
    chosen = np.sort(rng.choice(slots, size=bursts, replace=False))
    idx = (chosen[:, None] * burst + np.arange(burst)[None, :]).ravel()
    return idx[:k]


def _plan_interaction(inter: Interaction, profile: ParticipantProfile, cfg: SynthConfig, rng: np.random.Generator) -> InteractionPlan:
    scores = inter.scores
    selected = int(rng.choice(len(scores), p=choice_probabilities(scores, profile.skill)))
    w = gaze_weights(scores, selected, profile.skill, profile.gaze_bias, cfg.attraction)
    total_ms = profile.reading_speed_ms_per_char * sum(len(o.text) for o in inter.options)
    dwell = np.rint(total_ms * w / cfg.sample_period_ms).astype(int) * cfg.sample_period_ms
    return InteractionPlan(inter.interaction_id, inter.options[selected].option_id, tuple(float(v) for v in w), tuple(int(d) for d in dwell))


def _simulate_scene(profile, tree: DialogueTree, scene_id: str, cfg: SynthConfig, rng) -> tuple[SceneLog, tuple[InteractionPlan, ...]]:
    period = cfg.sample_period_ms
    tb = _TraceBuilder(period, profile.noise_px, rng)
    events, plans = [], []
    tb.dwell(cfg.npc_point, cfg.npc_gap_ms // period)
    inter = tree.start(scene_id)
    while inter is not None:
        plan = _plan_interaction(inter, profile, cfg, rng)
        plans.append(plan)
        sel = inter.option_ids.index(plan.selected_option_id)
        t_on = tb.now_ms
        tb.saccade(cfg.prompt_point, cfg.saccade_samples)
        tb.dwell(cfg.prompt_point, int(round(profile.reading_speed_ms_per_char * cfg.prompt_chars / period)))
        samples = [d // period for d in plan.dwell_ms]
        first_pass = list(samples)
        first_pass[sel] = samples[sel] // 2
        for j, opt in enumerate(inter.options):
            if first_pass[j] <= 0:
                continue
            centre = inter.aoi_for(opt.option_id).rect.center
            tb.saccade(centre, cfg.saccade_samples)
            tb.dwell(centre, first_pass[j])
        second = samples[sel] - first_pass[sel]
        if second > 0:
            centre = inter.aoi_for(plan.selected_option_id).rect.center
            tb.saccade(centre, cfg.saccade_samples)
            tb.dwell(centre, second)
        t_off = tb.now_ms
        # gaze lingers on the choice after the window closes
        tb.dwell(tb.last or cfg.prompt_point, cfg.response_latency_ms // period)
        events.append(InteractionEvent(inter.interaction_id, t_on, t_off, plan.selected_option_id))
        tb.saccade(cfg.npc_point, cfg.saccade_samples)
        tb.dwell(cfg.npc_point, cfg.npc_gap_ms // period)
        inter = tree.successor(inter, plan.selected_option_id)
    gaze = tb.finish(profile.data_loss, cfg.blink_samples)
    return SceneLog(scene_id, tuple(events), gaze), tuple(plans)


def simulate_session(
    profile: ParticipantProfile,
    tree: DialogueTree,
    scenes: Sequence[str] | str | None = None,
    config: SynthConfig = SynthConfig(),
) -> SimulatedSession:
    """Session plus the planted per-interaction plans; deterministic in ``profile.seed``."""
    if scenes is None:
        scenes = tree.scenes
    elif isinstance(scenes, str):
        scenes = (scenes,)
    rng = np.random.default_rng(profile.seed)
    logs, plans = [], {}
    for scene_id in scenes:
        log, scene_plans = _simulate_scene(profile, tree, scene_id, config, rng)
        logs.append(log)
        plans[scene_id] = scene_plans
    session = Session(profile.participant_id, tuple(logs), profile.cq_metacognitive, profile.cq_cognitive)
    return SimulatedSession(session, plans)


def generate_session(
    profile: ParticipantProfile,
    tree: DialogueTree,
    scenes: Sequence[str] | str | None = None,
    config: SynthConfig = SynthConfig(),
) -> Session:
    return simulate_session(profile, tree, scenes, config).session


ProfileSampler = Callable[[int, np.random.Generator], ParticipantProfile]


def default_profile_sampler(index: int, rng: np.random.Generator) -> ParticipantProfile:
    """skill ~ U(0,1); gaze bias rises with skill; CQ subscores independent of skill."""
    skill = float(rng.uniform(0.0, 1.0))
    return ParticipantProfile(
        skill=skill,
        gaze_bias=float(max(0.0, 2.0 * skill + rng.normal(0.0, 0.25))),
        reading_speed_ms_per_char=float(rng.uniform(20.0, 45.0)),
        noise_px=float(rng.uniform(3.0, 12.0)),
        data_loss=float(rng.uniform(0.0, 0.3)),
        cq_metacognitive=float(np.clip(rng.normal(4.5, 1.0), 1.0, 7.0)),
        cq_cognitive=float(np.clip(rng.normal(4.0, 1.0), 1.0, 7.0)),
    )


def participant_id(index: int, n: int) -> str:
    return f"P{index + 1:0{max(3, len(str(n)))}d}"


def sample_profiles(n: int, sampler: ProfileSampler = default_profile_sampler, seed: int = 0) -> list[ParticipantProfile]:
    """Profiles with ids and seeds derived from (seed, index), independent of order."""
    if n < 1:
        raise ValueError("cohort size must be at least 1")
    out = []
    for i in range(n):
        ss = np.random.SeedSequence([seed, i])
        sampler_ss, session_ss = ss.spawn(2)
        prof = sampler(i, np.random.default_rng(sampler_ss))
        out.append(replace(prof, participant_id=participant_id(i, n), seed=int(session_ss.generate_state(1)[0])))
    return out


def generate_cohort(
    n: int,
    sampler: ProfileSampler = default_profile_sampler,
    seed: int = 0,
    tree: DialogueTree | None = None,
    config: SynthConfig = SynthConfig(),
) -> list[Session]:
    tree = tree or default_dialogue_tree()
    return [generate_session(p, tree, None, config) for p in sample_profiles(n, sampler, seed)]
