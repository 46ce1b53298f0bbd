"""Cohort-level hypothesis tests and regression tables over participant metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import ParticipantMetrics
from .stats import (
    INTERCEPT,
    PerfectFitError,
    RankDeficientError,
    RegressionResult,
    StepwiseResult,
    TTestResult,
    bonferroni,
    design_matrix,
    ols_fit,
    paired_t_test,
    stars,
    stepwise_aic_backward,
)

log = logging.getLogger(__name__)

MIN_PARTICIPANTS = 3
CQ_PREDICTORS = ("cq_metacognitive", "cq_cognitive")
ETMP_PREDICTORS = CQ_PREDICTORS + ("avg_answer_fix", "avg_nonanswer_fix", "app_fix", "game_score")

# report variable -> ParticipantMetrics attribute
_COLUMNS = {
    "etmp_sum": "etmp_sum",
    "etmp_mean": "etmp_mean",
    "game_score": "traditional_score",
    "avg_answer_fix": "avg_answer_fix",
    "avg_nonanswer_fix": "avg_nonanswer_fix_average",
    "avg_nonanswer_fix_combined": "avg_nonanswer_fix_combined",
    "app_fix": "app_fix",
    "inapp_fix": "inapp_fix",
    "cq_metacognitive": "cq_metacognitive",
    "cq_cognitive": "cq_cognitive",
}


class InsufficientDataError(ValueError):
    pass


@dataclass
class PairedComparison:
    scene: str
    label: str
    a: str
    b: str
    result: TTestResult | None
    p_adjusted: float | None = None
    error: str | None = None


@dataclass
class ModelEntry:
    table: str
    scene: str
    dependent: str
    predictors: tuple[str, ...]
    variant: str
    fit: RegressionResult | None = None
    stepwise: StepwiseResult | None = None
    error: str | None = None


@dataclass
class AnalysisReport:
    scenes: list[str]
    n_by_scene: dict[str, int]
    etmp_column: str
    bonferroni_m: int
    comparisons: list[PairedComparison] = field(default_factory=list)
    descriptives: dict[str, dict[str, float]] = field(default_factory=dict)
    models: list[ModelEntry] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def model(self, table: str, scene: str, dependent: str | None = None, variant: str | None = None) -> ModelEntry:
        for m in self.models:
            if m.table == table and m.scene == scene and (dependent is None or m.dependent == dependent) \
                    and (variant is None or m.variant == variant):
                return m
        raise KeyError((table, scene, dependent, variant))

    def comparison(self, scene: str, label: str) -> PairedComparison:
        for c in self.comparisons:
            if c.scene == scene and c.label == label:
                return c
        raise KeyError((scene, label))


def _column(rows: Sequence[ParticipantMetrics], name: str) -> np.ndarray:
    attr = _COLUMNS[name]
    return np.array([getattr(r, attr) for r in rows], dtype=float)


def _fit_entry(entry: ModelEntry, rows: Sequence[ParticipantMetrics], stepwise: bool = False) -> ModelEntry:
    y = _column(rows, entry.dependent)
    X, names = design_matrix({p: _column(rows, p) for p in entry.predictors})
    try:
        if stepwise:
            entry.stepwise = stepwise_aic_backward(X, y, names)
            entry.fit = entry.stepwise.fit
        else:
            entry.fit = ols_fit(X, y, names)
    except (RankDeficientError, PerfectFitError, ValueError) as exc:
        entry.error = str(exc)
    return entry


def run_paper_analysis(
    rows: Sequence[ParticipantMetrics],
    etmp_column: str = "etmp_mean",
    scenes: Sequence[str] | None = None,
) -> AnalysisReport:
    """Selected-vs-unselected paired t-tests, app-fix and CQ regressions, and
    the ETMP regression (full and backward-AIC), separately per scene."""
    if etmp_column not in ("etmp_mean", "etmp_sum"):
        raise ValueError("etmp_column must be 'etmp_mean' or 'etmp_sum'")
    participants = {r.participant_id for r in rows}
    if len(participants) < MIN_PARTICIPANTS:
        raise InsufficientDataError(
            f"analysis needs at least {MIN_PARTICIPANTS} participants after exclusion; got {len(participants)}"
        )
    if scenes is None:
        scenes = list(dict.fromkeys(r.scene_id for r in rows))
    by_scene = {s: sorted((r for r in rows if r.scene_id == s), key=lambda r: r.participant_id) for s in scenes}
    m = 2 * len(scenes)
    report = AnalysisReport(list(scenes), {s: len(v) for s, v in by_scene.items()}, etmp_column, m)

    for scene, srows in by_scene.items():
        if len(srows) < MIN_PARTICIPANTS:
            report.warnings.append(f"scene {scene}: only {len(srows)} participant(s); scene skipped")
            continue
        report.descriptives[scene] = {
            name: float(np.mean(_column(srows, name)))
            for name in ("avg_answer_fix", "avg_nonanswer_fix_combined", "avg_nonanswer_fix", "app_fix", "inapp_fix",
                         "game_score", "etmp_sum", "etmp_mean")
        }
        for label, other in (("selected_vs_combined", "avg_nonanswer_fix_combined"),
                             ("selected_vs_average", "avg_nonanswer_fix")):
            cmp = PairedComparison(scene, label, "avg_answer_fix", other, None)
            try:
                cmp.result = paired_t_test(_column(srows, "avg_answer_fix"), _column(srows, other))
            except ValueError as exc:
                cmp.error = str(exc)
            report.comparisons.append(cmp)

        have_cq = all(r.cq_metacognitive is not None and r.cq_cognitive is not None for r in srows)
        if not have_cq:
            msg = f"scene {scene}: CQ subscores missing for some participants; CQ models skipped and CQ terms dropped from the ETMP model"
            report.warnings.append(msg)
            log.warning(msg)

        report.models.append(_fit_entry(ModelEntry("H1b", scene, "app_fix", ("game_score",), "original"), srows))
        if have_cq:
            for dep in ("app_fix", "inapp_fix"):
                report.models.append(_fit_entry(ModelEntry("H1c", scene, dep, CQ_PREDICTORS, "original"), srows))
        preds = ETMP_PREDICTORS if have_cq else tuple(p for p in ETMP_PREDICTORS if p not in CQ_PREDICTORS)
        report.models.append(_fit_entry(ModelEntry("ETMP", scene, etmp_column, preds, "original"), srows))
        report.models.append(_fit_entry(ModelEntry("ETMP", scene, etmp_column, preds, "stepwise_aic"), srows, stepwise=True))

    valid = [c for c in report.comparisons if c.result is not None]
    if valid:
        for c, p in zip(valid, bonferroni([c.result.p for c in valid], max(m, len(valid)))):
            c.p_adjusted = p
    for e in report.models:
        if e.error:
            report.warnings.append(f"{e.table} {e.scene} {e.dependent} ({e.variant}): {e.error}")
    return report


# -- serialisation ------------------------------------------------------------

def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _fit_dict(fit: RegressionResult) -> dict:
    return {
        "coefficients": [
            {"name": c.name, "estimate": _num(c.estimate), "std_error": _num(c.std_error), "t": _num(c.t),
             "p": _num(c.p), "stars": stars(c.p)}
            for c in fit
        ],
        "observations": fit.n,
        "r2": _num(fit.r2),
        "adjusted_r2": _num(fit.adjusted_r2),
        "residual_std_error": _num(fit.residual_std_error),
        "df_model": fit.df_model,
        "df_residual": fit.df_residual,
        "f_statistic": _num(fit.f_statistic),
        "f_p": _num(fit.f_p),
        "f_stars": stars(fit.f_p),
        "aic": _num(fit.aic),
    }


def report_to_dict(report: AnalysisReport) -> dict:
    comparisons = []
    for c in report.comparisons:
        d = {"scene": c.scene, "label": c.label, "a": c.a, "b": c.b}
        if c.result is not None:
            r = c.result
            d.update({"mean_a": _num(r.mean_a), "sd_a": _num(r.sd_a), "mean_b": _num(r.mean_b), "sd_b": _num(r.sd_b),
                      "t": _num(r.t), "df": r.df, "p": _num(r.p), "p_bonferroni": _num(c.p_adjusted)})
        else:
            d["error"] = c.error
        comparisons.append(d)
    models = []
    for e in report.models:
        d = {"table": e.table, "scene": e.scene, "dependent": e.dependent, "variant": e.variant,
             "predictors": list(e.predictors)}
        if e.fit is not None:
            d["fit"] = _fit_dict(e.fit)
        if e.stepwise is not None:
            d["retained"] = list(e.stepwise.retained)
            d["eliminated"] = list(e.stepwise.eliminated)
            d["aic_trace"] = [_num(a) for a in e.stepwise.aic_trace]
        if e.error:
            d["error"] = e.error
        models.append(d)
    return {
        "scenes": report.scenes,
        "n_by_scene": report.n_by_scene,
        "etmp_column": report.etmp_column,
        "bonferroni_m": report.bonferroni_m,
        "descriptives": {s: {k: _num(v) for k, v in d.items()} for s, d in report.descriptives.items()},
        "paired_t_tests": comparisons,
        "models": models,
        "warnings": report.warnings,
    }


# -- text rendering -----------------------------------------------------------

NOTE = "Note: *p<0.1; **p<0.05; ***p<0.01"


def _fmt(x, digits=3) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "NA"
    return f"{x:.{digits}f}"


def _fmt_p(p) -> str:
    if p is None:
        return "NA"
    return f"{p:.4g}"


def _render_table(title: str, models: list[dict]) -> list[str]:
    cols = []
    for m in models:
        head = m["dependent"] + (f" [{m['scene']}]" if m.get("scene") else "")
        if m["variant"] == "stepwise_aic":
            head += " stepwise-AIC"
        cols.append(head)
    names = []
    for m in models:
        for c in (m.get("fit") or {}).get("coefficients", []):
            if c["name"] != INTERCEPT and c["name"] not in names:
                names.append(c["name"])
    names.append(INTERCEPT)

    def cell(m, name):
        fit = m.get("fit")
        if fit is None:
            return ""
        for c in fit["coefficients"]:
            if c["name"] == name:
                return f"{_fmt(c['estimate'])}{c['stars']} ({_fmt(c['std_error'])})"
        return ""

    body = [[("Constant" if n == INTERCEPT else n)] + [cell(m, n) for m in models] for n in names]
    stats_rows = []
    for label, fn in (
        ("Observations", lambda f: str(f["observations"])),
        ("R2", lambda f: _fmt(f["r2"])),
        ("Adjusted R2", lambda f: _fmt(f["adjusted_r2"])),
        ("Residual Std. Error", lambda f: f"{_fmt(f['residual_std_error'])} (df = {f['df_residual']})"),
        ("F Statistic", lambda f: f"{_fmt(f['f_statistic'])}{f['f_stars']} (df = {f['df_model']}; {f['df_residual']})"
            if f["df_model"] > 0 else "NA"),
        ("AIC", lambda f: _fmt(f["aic"])),
    ):
        stats_rows.append([label] + [fn(m["fit"]) if m.get("fit") else "not estimated" for m in models])

    header = [""] + cols
    table = [header] + body + [None] + stats_rows
    widths = [max(len(r[k]) for r in table if r is not None) for k in range(len(header))]
    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))

    def line(r):
        return "  ".join(r[k].ljust(widths[k]) if k == 0 else r[k].rjust(widths[k]) for k in range(len(r))).rstrip()

    out = [title, "=" * len(rule), line(header), rule]
    for r in table[1:]:
        out.append(rule if r is None else line(r))
    out.append(rule)
    out.append(NOTE)
    for m in models:
        if m.get("error"):
            out.append(f"  {m['dependent']} [{m['scene']}] {m['variant']}: {m['error']}")
        if m.get("variant") == "stepwise_aic" and "eliminated" in m:
            elim = ", ".join(m["eliminated"]) or "none"
            out.append(f"  stepwise-AIC [{m['scene']}] eliminated: {elim}")
    return out


def format_report_text(doc: dict) -> str:
    """Human-readable rendering of :func:`report_to_dict` output."""
    out = [
        "Gaze-weighted performance analysis",
        f"scenes: {', '.join(doc['scenes'])}; participants per scene: "
        + ", ".join(f"{s}={n}" for s, n in doc["n_by_scene"].items()),
        f"ETMP variable: {doc['etmp_column']}",
        "",
        f"Selected vs non-selected fixation proportion (paired t-tests, Bonferroni m={doc['bonferroni_m']})",
    ]
    for c in doc["paired_t_tests"]:
        if "error" in c:
            out.append(f"  [{c['scene']}] {c['label']}: not computed ({c['error']})")
            continue
        out.append(
            f"  [{c['scene']}] {c['a']} (M={_fmt(c['mean_a'], 4)}, SD={_fmt(c['sd_a'], 4)}) vs "
            f"{c['b']} (M={_fmt(c['mean_b'], 4)}, SD={_fmt(c['sd_b'], 4)}): "
            f"t={_fmt(c['t'], 4)}, df={c['df']}, p={_fmt_p(c['p'])}, p_bonf={_fmt_p(c['p_bonferroni'])}"
        )
    if doc["descriptives"]:
        out.append("")
        out.append("Mean fixation proportion on appropriate vs inappropriate options")
        for s, d in doc["descriptives"].items():
            out.append(f"  [{s}] app_fix M={_fmt(d['app_fix'])}, inapp_fix M={_fmt(d['inapp_fix'])}")
    for table, title in (("H1b", "Appropriate-option fixation ~ game score"),
                         ("H1c", "Option fixation ~ CQ subscores"),
                         ("ETMP", "ETMP regression (original and stepwise-AIC)")):
        models = [m for m in doc["models"] if m["table"] == table]
        if models:
            out.append("")
            out.extend(_render_table(title, models))
    if doc["warnings"]:
        out.append("")
        out.append("Warnings:")
        out.extend(f"  - {w}" for w in doc["warnings"])
    return "\n".join(out) + "\n"
