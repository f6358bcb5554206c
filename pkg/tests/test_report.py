import dataclasses

import pytest

from voxseg import (
    COLUMNS,
    ModelSummary,
    Region,
    build_comparison_table,
    render_csv,
    render_latex,
    render_text,
)

TC, WT, ET = Region.TC, Region.WT, Region.ET


def _model(name, dice, hd95):
    return ModelSummary(
        name=name,
        dice={TC: dice[0], WT: dice[1], ET: dice[2]},
        hd95={TC: hd95[0], WT: hd95[1], ET: hd95[2]},
    )


def _col(metric, region):
    return COLUMNS.index((metric, region))


@pytest.fixture
def three_models():
    return [
        _model("baseline-ae", (0.815, 0.884, 0.766), (4.809, 4.516, 3.926)),
        _model("nnunet", (0.878, 0.928, 0.845), (7.623, 3.47, 20.73)),
        _model("ens-9", (0.894, 0.891, 0.812), (2.308, 3.552, 1.608)),
    ]


def test_bold_pattern_three_model_fixture(three_models):
    table = build_comparison_table(three_models)
    want = {
        (2, _col("dice", TC)),
        (1, _col("dice", WT)),
        (1, _col("dice", ET)),
        (2, _col("hd95", TC)),
        (1, _col("hd95", WT)),
        (2, _col("hd95", ET)),
    }
    assert table.bold == want


def test_single_row_all_bold():
    table = build_comparison_table([_model("only", (0.5, 0.6, 0.7), (1.0, 2.0, 3.0))])
    assert table.bold == {(0, c) for c in range(len(COLUMNS))}


def test_ties_bold_every_winner():
    rows = [
        _model("a", (0.9, 0.5, 0.5), (2.0, 9.0, 9.0)),
        _model("b", (0.9, 0.4, 0.4), (2.0, 8.0, 8.0)),
    ]
    table = build_comparison_table(rows)
    assert table.is_bold(0, "dice", TC) and table.is_bold(1, "dice", TC)
    assert table.is_bold(0, "hd95", TC) and table.is_bold(1, "hd95", TC)
    assert table.is_bold(0, "dice", WT) and not table.is_bold(1, "dice", WT)
    assert table.is_bold(1, "hd95", WT) and not table.is_bold(0, "hd95", WT)


def test_none_excluded_from_ranking():
    rows = [
        _model("a", (0.9, 0.9, 0.9), (None, 5.0, 5.0)),
        _model("b", (0.8, 0.8, 0.8), (9.0, 6.0, 6.0)),
    ]
    table = build_comparison_table(rows)
    # "b" holds the only defined TC HD95, so it wins despite the larger value.
    assert table.is_bold(1, "hd95", TC)
    assert not table.is_bold(0, "hd95", TC)


def test_all_none_column_marks_nothing():
    rows = [
        _model("a", (0.9, 0.9, 0.9), (None, 5.0, 5.0)),
        _model("b", (0.8, 0.8, 0.8), (None, 6.0, 6.0)),
    ]
    table = build_comparison_table(rows)
    col = _col("hd95", TC)
    assert not any(c == col for _, c in table.bold)


def test_render_text_marks_bold(three_models):
    text = render_text(build_comparison_table(three_models))
    for winner in ("*0.894*", "*0.928*", "*0.845*", "*2.308*", "*3.47*", "*1.608*"):
        assert winner in text
    # losers stay unstarred
    assert "*0.815*" not in text
    assert "*7.623*" not in text


def test_render_csv_plain_values(three_models):
    csv = render_csv(build_comparison_table(three_models))
    lines = csv.strip().splitlines()
    assert lines[0] == "model,dice_tc,dice_wt,dice_et,hd95_tc,hd95_wt,hd95_et"
    assert "nnunet,0.878,0.928,0.845,7.623,3.47,20.73" in lines
    assert "*" not in csv


def test_render_latex_textbf(three_models):
    tex = render_latex(build_comparison_table(three_models))
    assert r"\textbf{0.894}" in tex
    assert r"\textbf{3.47}" in tex
    assert "0.815 &" in tex and r"\textbf{0.815}" not in tex
    assert r"\begin{tabular}" in tex and r"\end{tabular}" in tex


def test_missing_value_renders_na():
    table = build_comparison_table([_model("m", (0.5, 0.5, 0.5), (None, 1.0, 1.0))])
    assert "n/a" in render_text(table)
    assert "n/a" in render_csv(table)
    assert "n/a" in render_latex(table)


def test_model_summary_from_json():
    doc = {
        "name": "x",
        "dice": {"TC": 0.1, "WT": 0.2, "ET": 0.3},
        "hd95": {"TC": 1.5, "WT": None, "ET": 2.5},
    }
    m = ModelSummary.from_json(doc)
    assert m == _model("x", (0.1, 0.2, 0.3), (1.5, None, 2.5))


def test_empty_table_rejected():
    with pytest.raises(ValueError):
        build_comparison_table([])


def test_columns_order_fixed():
    metrics = [m for m, _ in COLUMNS]
    regions = [r for _, r in COLUMNS]
    assert metrics == ["dice"] * 3 + ["hd95"] * 3
    assert regions == [TC, WT, ET, TC, WT, ET]


def test_table_is_immutable(three_models):
    table = build_comparison_table(three_models)
    with pytest.raises(dataclasses.FrozenInstanceError):
        table.bold = frozenset()
