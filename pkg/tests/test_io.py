import json

import pytest

from etmp.io import (
    FIXATION_HEADER,
    METRICS_HEADER,
    DataFormatError,
    dialogue_tree_to_dict,
    format_fixations_csv,
    format_metrics_csv,
    load_session,
    parse_dialogue_tree,
    parse_gaze_csv,
    parse_session,
    read_fixations_csv,
    read_metrics_csv,
)
from etmp.model import Fixation, ParticipantMetrics

from conftest import make_tree

HEADER = "timestamp_ms,x_px,y_px,valid\n"


def test_gaze_csv_parses_invalid_rows_as_nan():
    tr = parse_gaze_csv(HEADER + "0,1.5,2,1\n8,,,0\n16,3,4,1\n")
    assert tr.timestamp_ms.tolist() == [0, 8, 16]
    assert tr.valid.tolist() == [True, False, True]


@pytest.mark.parametrize(
    "body, line",
    [
        ("0,1,2,1\n8,1,2\n", 3),
        ("0,1,2,1\n8,1,2,yes\n", 3),
        ("0,1,2,1\n8,abc,2,1\n", 3),
        ("0,1,2,1\n8,1,2,1\n4,1,2,1\n", 4),
        ("0.5,1,2,1\n", 2),
    ],
)
def test_gaze_csv_errors_carry_line_numbers(body, line):
    with pytest.raises(DataFormatError) as exc:
        parse_gaze_csv(HEADER + body, "trace.csv")
    assert exc.value.line == line
    assert str(exc.value).startswith(f"trace.csv:{line}:")


def test_gaze_csv_bad_header():
    with pytest.raises(DataFormatError) as exc:
        parse_gaze_csv("t,x,y,v\n0,1,2,1\n")
    assert exc.value.line == 1


def test_integral_float_timestamps_accepted():
    assert parse_gaze_csv(HEADER + "8.0,1,2,1\n").timestamp_ms.tolist() == [8]


def test_session_rejects_sub_ms_timestamps():
    doc = {"participant": "P1", "cq": None,
           "scenes": [{"scene": "s1", "events": [{"interaction_id": "Q1", "t_on_ms": 0.25, "t_off_ms": 10,
                                                  "selected_option_id": "a"}]}]}
    with pytest.raises(DataFormatError, match="sub-millisecond"):
        parse_session(doc)


def test_session_missing_key(tmp_path):
    p = tmp_path / "P1.json"
    p.write_text(json.dumps({"participant": "P1"}))
    with pytest.raises(DataFormatError, match="scenes"):
        load_session(p)


def test_fixations_csv_round_trip(tmp_path):
    fx = [Fixation(0, 150, 102.0, 101.6), Fixation(150, 300, 800.0, 600.0)]
    text = format_fixations_csv(fx)
    assert text.splitlines()[0] == ",".join(FIXATION_HEADER) == "start_ms,end_ms,centroid_x_px,centroid_y_px"
    p = tmp_path / "f.csv"
    p.write_text(text)
    assert read_fixations_csv(p) == fx


def test_metrics_csv_round_trip(tmp_path):
    rows = [
        ParticipantMetrics("P1", "s1", 7.1, 3.55, 9.0, 0.6, 0.4, 0.2, 0.7, 0.3, 0.05, 2, 1, 4.5, 3.25),
        ParticipantMetrics("P2", "s1", 4.0, 4.0, 5.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.0, 1, 0, None, None),
    ]
    text = format_metrics_csv(rows)
    assert text.splitlines()[0].split(",") == METRICS_HEADER
    p = tmp_path / "m.csv"
    p.write_text(text)
    assert read_metrics_csv(p) == rows


def test_dialogue_tree_round_trip():
    tree = make_tree([1, 3, 5], [2, 4])
    assert parse_dialogue_tree(dialogue_tree_to_dict(tree)) == tree
