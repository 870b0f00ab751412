import numpy as np
import pytest

from uavad.errors import EmptySeries, GridBeforeData, UnknownField, UnknownGroup
from uavad.logdata import (
    AnnotationSpan,
    AnomalyType,
    ChannelId,
    FlightLog,
    TimeSeries,
    get_series,
    resample_hold,
    span_overlaps,
)


def make_log(rows_by_name, schemas):
    return FlightLog.from_rows("test", schemas, rows_by_name)


class TestGetSeries:
    def test_single_record(self):
        log = make_log(
            {"ATT": [(100, (0.5,))]},
            {"ATT": ["TimeUS", "Roll"]},
        )
        series = get_series(log, ChannelId("ATT", "Roll"))
        assert list(series.timestamps) == [100]
        assert list(series.values) == [0.5]

    def test_absent_group(self):
        log = make_log({"ATT": [(100, (0.5,))]}, {"ATT": ["TimeUS", "Roll"]})
        with pytest.raises(UnknownGroup):
            get_series(log, ChannelId("XYZ", "Foo"))

    def test_absent_field(self):
        log = make_log({"ATT": [(100, (0.5,))]}, {"ATT": ["TimeUS", "Roll"]})
        with pytest.raises(UnknownField):
            get_series(log, ChannelId("ATT", "Pitch"))

    def test_order_preserved(self):
        rows = [(100, (1.0, 2.0, 3.0)), (200, (4.0, 5.0, 6.0)), (300, (7.0, 8.0, 9.0))]
        log = make_log({"VIBE": rows}, {"VIBE": ["TimeUS", "VibeX", "VibeY", "VibeZ"]})
        series = get_series(log, ChannelId("VIBE", "VibeY"))
        assert len(series) == 3
        assert list(series.values) == [2.0, 5.0, 8.0]

    def test_timestamps_equal_timeus_column(self):
        rows = [(10, (1.0,)), (20, (2.0,)), (35, (3.0,))]
        log = make_log({"CTUN": rows}, {"CTUN": ["TimeUS", "ThO"]})
        series = get_series(log, ChannelId("CTUN", "ThO"))
        assert list(series.timestamps) == [t for t, _ in rows]

    def test_duplicate_timestamps_keep_last(self):
        rows = [(10, (1.0,)), (10, (9.0,)), (20, (2.0,))]
        log = make_log({"CTUN": rows}, {"CTUN": ["TimeUS", "ThO"]})
        series = get_series(log, ChannelId("CTUN", "ThO"))
        assert list(series.timestamps) == [10, 20]
        assert list(series.values) == [9.0, 2.0]


class TestResampleHold:
    def _series(self, pts):
        return TimeSeries(
            np.array([t for t, _ in pts]),
            np.array([v for _, v in pts]),
            ChannelId("CTUN", "ThO"),
        )

    def test_hold_semantics(self):
        out = resample_hold(self._series([(0, 1.0), (10, 2.0)]), [0, 5, 10, 15])
        assert list(out.values) == [1.0, 1.0, 2.0, 2.0]

    def test_identity_on_own_grid(self):
        series = self._series([(0, 1.0), (10, 2.0), (25, 7.0)])
        out = resample_hold(series, series.timestamps)
        assert list(out.values) == list(series.values)

    def test_grid_before_data(self):
        with pytest.raises(GridBeforeData):
            resample_hold(self._series([(5, 9.0)]), [0])

    def test_empty_series(self):
        empty = TimeSeries(np.array([], dtype=np.int64), np.array([]), ChannelId("A", "B"))
        with pytest.raises(EmptySeries):
            resample_hold(empty, [0])

    def test_idempotent_on_output_grid(self):
        series = self._series([(0, 1.0), (7, 2.0), (19, -1.0), (30, 4.0)])
        grid = np.array([0, 3, 9, 20, 28, 30], dtype=np.int64)
        once = resample_hold(series, grid)
        twice = resample_hold(once, grid)
        assert list(once.values) == list(twice.values)


class TestSpanOverlaps:
    def span(self, start, end):
        return AnnotationSpan("log", AnomalyType.VIBRATION, start, end)

    def test_partial_overlap(self):
        assert span_overlaps(self.span(100, 200), 150, 300)

    def test_touching_endpoints_half_open(self):
        assert not span_overlaps(self.span(100, 200), 200, 300)

    def test_containment(self):
        assert span_overlaps(self.span(100, 200), 0, 1000)

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a0, b0 = sorted(rng.integers(0, 50, 2).tolist())
            a1, b1 = sorted(rng.integers(0, 50, 2).tolist())
            if a0 == b0 or a1 == b1:
                continue
            lhs = span_overlaps(self.span(a0, b0), a1, b1)
            rhs = span_overlaps(self.span(a1, b1), a0, b0)
            assert lhs == rhs


class TestInvariants:
    def test_timeseries_rejects_decreasing(self):
        with pytest.raises(ValueError):
            TimeSeries(np.array([2, 1]), np.array([0.0, 0.0]), ChannelId("A", "B"))

    def test_flightlog_rejects_bad_arity(self):
        with pytest.raises(ValueError):
            FlightLog(
                "x",
                {"ATT": ["TimeUS", "Roll"]},
                {"ATT": np.array([1])},
                {"ATT": np.zeros((1, 2))},
            )

    def test_annotation_rejects_empty_span(self):
        from uavad.errors import InvertedSpan

        with pytest.raises(InvertedSpan):
            AnnotationSpan("log", AnomalyType.POWER, 5, 5)
