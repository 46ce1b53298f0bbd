import dataclasses
import json

import numpy as np
import pytest

from etmp.analysis import InsufficientDataError, format_report_text, report_to_dict, run_paper_analysis
from etmp.aoi import exclude_participants
from etmp.model import ParticipantMetrics
from etmp.pipeline import score_session
from etmp.synth import default_dialogue_tree, generate_session, sample_profiles


def _rows(n, scenes=("lib", "oh"), seed=0, cq=True):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        for sc in scenes:
            ans = rng.uniform(0.3, 0.7)
            app = rng.uniform(0.3, 0.9)
            out.append(ParticipantMetrics(
                participant_id=f"P{k:03d}", scene_id=sc,
                etmp_sum=0.0, etmp_mean=0.0, traditional_score=float(rng.integers(10, 24)),
                avg_answer_fix=ans, avg_nonanswer_fix_combined=1 - ans, avg_nonanswer_fix_average=(1 - ans) / rng.uniform(1, 3),
                app_fix=app, inapp_fix=1 - app, data_loss=0.0, interactions_counted=5, interactions_skipped=0,
                cq_metacognitive=float(rng.normal(4, 1)) if cq else None,
                cq_cognitive=float(rng.normal(4, 1)) if cq else None,
            ))
    return out


def test_identity_cohort_gives_exact_game_score_fit():
    rows = [dataclasses.replace(r, etmp_mean=r.traditional_score) for r in _rows(20)]
    rep = run_paper_analysis(rows)
    for sc in ("lib", "oh"):
        fit = rep.model("ETMP", sc, variant="original").fit
        assert fit.r2 == 1.0
        assert fit.coefficient("game_score").estimate == pytest.approx(1.0, abs=1e-9)
        step = rep.model("ETMP", sc, variant="stepwise_aic")
        assert step.fit is None and "RSS = 0" in step.error
    assert any("stepwise_aic" in w for w in rep.warnings)


def test_two_participants_rejected():
    with pytest.raises(InsufficientDataError):
        run_paper_analysis(_rows(2))


def test_missing_cq_skips_cq_models():
    rows = [dataclasses.replace(r, etmp_mean=r.traditional_score / 5 + r.app_fix) for r in _rows(12, cq=False)]
    rep = run_paper_analysis(rows)
    assert not [m for m in rep.models if m.table == "H1c"]
    assert rep.model("H1b", "lib").fit is not None
    etmp = rep.model("ETMP", "lib", variant="original")
    assert "cq_metacognitive" not in etmp.predictors and etmp.fit is not None
    assert any("CQ" in w for w in rep.warnings)


def test_bonferroni_over_all_comparisons():
    rows = [dataclasses.replace(r, etmp_mean=r.app_fix * 3 + r.traditional_score / 10) for r in _rows(15)]
    rep = run_paper_analysis(rows)
    assert rep.bonferroni_m == 4
    for c in rep.comparisons:
        assert c.p_adjusted == pytest.approx(min(1.0, 4 * c.result.p))


def test_report_serialises_and_renders():
    rows = [dataclasses.replace(r, etmp_mean=r.traditional_score / 5 + r.app_fix) for r in _rows(10)]
    doc = report_to_dict(run_paper_analysis(rows))
    json.dumps(doc, allow_nan=False)
    text = format_report_text(doc)
    assert "Note: *p<0.1; **p<0.05; ***p<0.01" in text
    assert "game_score" in text


@pytest.fixture(scope="module")
def synthetic_report():
    tree = default_dialogue_tree()
    profiles = sample_profiles(200, seed=0)
    kept, _ = exclude_participants([generate_session(p, tree) for p in profiles], 0.25)
    rows = [r for s in kept for r in score_session(s, tree).rows]
    return profiles, rows, run_paper_analysis(rows)


def test_synthetic_cohort_game_score_positive(synthetic_report):
    _, _, rep = synthetic_report
    for sc in ("library", "office_hours"):
        g = rep.model("ETMP", sc, variant="original").fit.coefficient("game_score")
        assert g.estimate > 0 and g.p < 0.05


def test_synthetic_cohort_selected_exceeds_average_unselected(synthetic_report):
    _, _, rep = synthetic_report
    for sc in ("library", "office_hours"):
        r = rep.comparison(sc, "selected_vs_average").result
        assert r.t > 0 and r.p < 0.01
