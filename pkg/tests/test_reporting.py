"""CSV round trips, trace smoothing, and deterministic SVG rendering."""

import numpy as np
import pytest

from qaoarl.reporting import (format_value, nanmean_stack, nice_ticks, read_csv,
                              render_line_chart, rolling_mean, write_csv)


class TestFormatValue:
    def test_types(self):
        assert format_value("abc") == "abc"
        assert format_value(True) == "1"
        assert format_value(np.bool_(False)) == "0"
        assert format_value(7) == "7"
        assert format_value(np.int64(-3)) == "-3"

    def test_floats_round_trip_exactly(self):
        rng = np.random.default_rng(0)
        for x in rng.standard_normal(200) * 10.0 ** rng.integers(-8, 8, 200):
            assert float(format_value(x)) == x
        assert format_value(float("nan")) == "nan"


class TestCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "trace.csv"
        episode = np.arange(1, 6)
        reward = np.array([0.5, np.nan, 1.25, 2.0, 1.0 / 3.0])
        label = np.array(["a", "b", "c", "d", "e"], dtype=object)
        write_csv(path, [("episode", episode), ("reward", reward),
                         ("label", label)],
                  metadata={"seed": 3, "note": "small run"})
        metadata, columns = read_csv(path)
        assert metadata == {"seed": "3", "note": "small run"}
        np.testing.assert_array_equal(columns["episode"], episode)
        np.testing.assert_array_equal(columns["reward"][[0, 2, 3, 4]],
                                      reward[[0, 2, 3, 4]])
        assert np.isnan(columns["reward"][1])
        assert columns["label"].tolist() == list(label)

    def test_rewrite_is_byte_identical(self, tmp_path):
        cols = [("x", np.linspace(0, 1, 7)), ("y", np.sqrt(np.linspace(0, 2, 7)))]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(a, cols, metadata={"k": "v"})
        write_csv(b, cols, metadata={"k": "v"})
        assert a.read_bytes() == b.read_bytes()

    def test_length_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "bad.csv", [("a", np.zeros(2)), ("b", np.zeros(3))])

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("# only = metadata\n")
        with pytest.raises(ValueError):
            read_csv(path)


class TestRollingMean:
    def test_window_one_is_identity(self):
        v = np.array([3.0, 1.0, 4.0, 1.0])
        np.testing.assert_array_equal(rolling_mean(v, 1), v)

    def test_trailing_window(self):
        v = np.array([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_allclose(rolling_mean(v, 2), [1.0, 1.5, 2.5, 3.5])
        # partial windows at the start average what exists so far
        np.testing.assert_allclose(rolling_mean(v, 10), [1.0, 1.5, 2.0, 2.5])

    def test_window_validation(self):
        with pytest.raises(ValueError):
            rolling_mean(np.zeros(3), 0)


class TestNanmeanStack:
    def test_ignores_non_finite(self):
        a = np.array([1.0, np.nan, 3.0])
        b = np.array([3.0, 4.0, np.nan])
        out = nanmean_stack([a, b])
        np.testing.assert_allclose(out, [2.0, 4.0, 3.0])

    def test_all_nan_column_stays_nan(self):
        out = nanmean_stack([np.array([np.nan]), np.array([np.nan])])
        assert np.isnan(out[0])


class TestNiceTicks:
    def test_covers_range_with_round_steps(self):
        ticks = nice_ticks(0.0, 10.0)
        assert ticks[0] >= 0.0 and ticks[-1] <= 10.0
        steps = np.diff(ticks)
        np.testing.assert_allclose(steps, steps[0])
        assert len(ticks) <= 7

    def test_degenerate_range(self):
        np.testing.assert_array_equal(nice_ticks(2.0, 2.0), [2.0])


class TestRenderLineChart:
    def _series(self):
        x = np.arange(10.0)
        return [{"x": x, "y": np.sqrt(x), "label": "sqrt"},
                {"x": x, "y": x / 3.0, "label": "linear", "dash": "4,3"}]

    def test_output_is_deterministic(self):
        a = render_line_chart(self._series(), hlines=[(2.5, "limit")],
                              title="t", xlabel="x", ylabel="y")
        b = render_line_chart(self._series(), hlines=[(2.5, "limit")],
                              title="t", xlabel="x", ylabel="y")
        assert a == b

    def test_structure(self):
        svg = render_line_chart(self._series(), hlines=[(2.5, "limit")],
                                title="reward", xlabel="episode", ylabel="cut")
        assert svg.startswith("<svg ") and svg.rstrip().endswith("</svg>")
        assert svg.count("<polyline") == 2
        assert "stroke-dasharray" in svg
        assert "reward" in svg and "episode" in svg and "limit" in svg

    def test_labels_are_escaped(self):
        svg = render_line_chart([{"x": [0, 1], "y": [0, 1],
                                  "label": "<b>&amp;"}], title="a<b>")
        assert "<b>" not in svg.replace("<svg", "").replace("</svg", "")
        assert "&lt;b&gt;" in svg

    def test_non_finite_points_dropped(self):
        svg = render_line_chart([{"x": [0, 1, 2], "y": [1.0, np.nan, 3.0],
                                  "label": "s"}])
        assert "nan" not in svg
