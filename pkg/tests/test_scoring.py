import pytest
from hypothesis import given
from hypothesis import strategies as st

from etmp.aoi import fixation_proportions
from etmp.model import InteractionEvent, SceneLog, Session
from etmp.scoring import (
    NoCountedInteractions,
    ScoredInteraction,
    appropriate_options,
    etmp_score,
    gaze_bias_aggregates,
    interaction_contribution,
    traditional_score,
)

from conftest import make_interaction, make_tree


def metrics(iid, props):
    return fixation_proportions({f"{iid}.o{k + 1}": p for k, p in enumerate(props)}, iid)


def test_all_attention_on_best():
    tree = make_tree([1, 3, 5])
    assert etmp_score([metrics("Q1", [0, 0, 1])], tree).total == 5.0


def test_uniform_attention_gives_mean_score():
    tree = make_tree([1, 3, 5])
    assert etmp_score([metrics("Q1", [1, 1, 1])], tree).total == pytest.approx(3.0, abs=1e-15)


def test_two_interaction_sum_and_mean():
    tree = make_tree([2, 4], [1, 3, 5])
    s = etmp_score([metrics("Q1", [0.25, 0.75]), metrics("Q2", [0.2, 0.3, 0.5])], tree)
    assert s.total == pytest.approx(7.1, abs=1e-12)
    assert s.mean == pytest.approx(3.55, abs=1e-12)
    assert s.interactions_counted == 2


def test_uncounted_interactions_skipped_and_none_raises():
    tree = make_tree([2, 4], [1, 3, 5])
    s = etmp_score([metrics("Q1", [0, 0]), metrics("Q2", [0, 0, 1])], tree)
    assert (s.total, s.mean, s.interactions_counted) == (5.0, 5.0, 1)
    with pytest.raises(NoCountedInteractions):
        etmp_score([metrics("Q1", [0, 0])], tree)


def _session(selections):
    tree = make_tree(*[sc for sc, _ in selections])
    evs = tuple(InteractionEvent(f"Q{i + 1}", 1000 * i, 1000 * i + 500, f"Q{i + 1}.o{sel + 1}")
                for i, (_, sel) in enumerate(selections))
    return tree, Session("P", (SceneLog("s1", evs),))


def test_traditional_score_sum():
    tree, s = _session([([1, 4], 1), ([5, 2], 0), ([1, 3], 1)])
    assert traditional_score(s, tree) == 12


def test_traditional_score_single_and_additivity():
    tree, s = _session([([1, 2], 0)])
    assert traditional_score(s, tree) == 1
    empty = Session("P", (SceneLog("s1", ()),))
    assert traditional_score(s, tree) - traditional_score(empty, tree) == 1


@pytest.mark.parametrize(
    "scores, expected",
    [([2, 4, 5], {"o2", "o3"}), ([1, 2, 3], {"o3"}), ([3, 3, 2], {"o1", "o2"})],
)
def test_appropriate_options(scores, expected):
    assert appropriate_options(make_interaction("Q", scores)) == {f"Q.{o}" for o in expected}


def _scored(scores, props, sel, iid="Q1"):
    return ScoredInteraction(metrics(iid, props), make_interaction(iid, scores), f"{iid}.o{sel + 1}")


def test_gaze_bias_two_options():
    g = gaze_bias_aggregates([_scored([2, 4], [0.6, 0.4], 0)])
    assert (g.avg_answer_fix, g.avg_nonanswer_fix_combined, g.avg_nonanswer_fix_average) == pytest.approx((0.6, 0.4, 0.4))


def test_gaze_bias_three_options():
    g = gaze_bias_aggregates([_scored([2, 4, 1], [0.5, 0.3, 0.2], 0)])
    assert g.avg_nonanswer_fix_combined == pytest.approx(0.5)
    assert g.avg_nonanswer_fix_average == pytest.approx(0.25)


def test_app_fix_mean():
    g = gaze_bias_aggregates([_scored([1, 4], [0.3, 0.7], 0, "Q1"), _scored([5, 2], [0.5, 0.5], 1, "Q2")])
    assert g.app_fix == pytest.approx(0.6)
    assert g.inapp_fix == pytest.approx(0.4)


def test_gaze_bias_needs_counted_interaction():
    with pytest.raises(NoCountedInteractions):
        gaze_bias_aggregates([_scored([1, 4], [0, 0], 0)])


interaction_st = st.lists(st.integers(1, 5), min_size=2, max_size=5).flatmap(
    lambda sc: st.tuples(st.just(sc), st.lists(st.floats(0, 1e4), min_size=len(sc), max_size=len(sc)),
                         st.integers(0, len(sc) - 1))
)


@given(interaction_st)
def test_contribution_bounds_and_partitions(case):
    scores, totals, sel = case
    inter = make_interaction("Q1", scores)
    m = metrics("Q1", totals)
    if not m.counted:
        return
    c = interaction_contribution(m, inter)
    assert min(scores) - 1e-12 <= c <= max(scores) + 1e-12
    g = gaze_bias_aggregates([ScoredInteraction(m, inter, f"Q1.o{sel + 1}")])
    assert g.avg_answer_fix + g.avg_nonanswer_fix_combined == pytest.approx(1.0, abs=1e-9)
    assert g.app_fix + g.inapp_fix == pytest.approx(1.0, abs=1e-9)


@given(st.lists(st.tuples(st.lists(st.integers(1, 5), min_size=2, max_size=4), st.integers(0, 3)), min_size=1, max_size=8))
def test_degenerate_gaze_equals_traditional(items):
    items = [(sc, sel % len(sc)) for sc, sel in items]
    tree, session = _session(items)
    ms = [metrics(f"Q{i + 1}", [1.0 if k == sel else 0.0 for k in range(len(sc))]) for i, (sc, sel) in enumerate(items)]
    assert etmp_score(ms, tree).total == traditional_score(session, tree)


@given(interaction_st, st.floats(0, 1), st.data())
def test_moving_mass_upward_never_lowers_etmp(case, frac, data):
    scores, totals, _ = case
    lo = data.draw(st.integers(0, len(scores) - 1))
    hi = data.draw(st.integers(0, len(scores) - 1))
    if scores[lo] > scores[hi]:
        lo, hi = hi, lo
    tree = make_tree(scores)
    before = metrics("Q1", totals)
    if not before.counted:
        return
    moved = list(totals)
    amount = frac * moved[lo]
    moved[lo] -= amount
    moved[hi] += amount
    after = metrics("Q1", moved)
    assert etmp_score([after], tree).total >= etmp_score([before], tree).total - 1e-9
