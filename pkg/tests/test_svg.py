"""Deterministic SVG chart emission."""

import pytest

from seaqual.errors import ValidationError
from seaqual.svg import line_chart


def test_line_chart_structure():
    svg = line_chart([1, 2, 3], [("acc", [0.5, 0.6, 0.7])],
                     x_label="limit", y_label="rate", title="demo")
    assert svg.startswith("<svg")
    assert svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 1
    assert svg.count("<circle") == 3  # one marker per point
    assert "limit" in svg and "rate" in svg and "demo" in svg


def test_line_chart_multi_series_and_legend():
    svg = line_chart([0, 1], [("a", [0.1, 0.2]), ("b", [0.9, 0.8])],
                     x_label="x", y_label="y")
    assert svg.count("<polyline") == 2
    assert ">a</text>" in svg and ">b</text>" in svg


def test_line_chart_determinism_and_comment():
    args = ([1, 2], [("s", [0.3, 0.4])], "x", "y")
    assert line_chart(*args) == line_chart(*args)
    svg = line_chart(*args, comment="hash=abc123")
    assert svg.startswith("<!-- hash=abc123 -->")


def test_line_chart_escapes_markup():
    svg = line_chart([1], [("<s>", [0.5])], x_label="a&b", y_label="y",
                     comment="--> <svg>")
    assert "<s>" not in svg.replace("&lt;s&gt;", "")
    assert "a&amp;b" in svg


def test_line_chart_validates():
    with pytest.raises(ValidationError):
        line_chart([], [("a", [])], "x", "y")
    with pytest.raises(ValidationError):
        line_chart([1, 2], [("a", [0.5])], "x", "y")
    with pytest.raises(ValidationError):
        line_chart([1, 2], [], "x", "y")


def test_line_chart_single_point_does_not_divide_by_zero():
    svg = line_chart([5], [("a", [0.5])], "x", "y")
    assert "<circle" in svg
