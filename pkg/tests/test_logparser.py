import numpy as np
import pytest

from uavad.errors import (
    ArityMismatch,
    BadJson,
    InvertedSpan,
    MalformedFmt,
    NonMonotonicTime,
    UnknownAnomalyType,
    UnknownMessage,
)
from uavad.logdata import AnomalyType, FlightLog
from uavad.logparser import (
    load_annotations,
    parse_log,
    serialize_annotations,
    serialize_log,
)

MINIMAL = "FMT, 1, 10, VIBE, Qfff, TimeUS,VibeX,VibeY,VibeZ\nVIBE, 100, 1.0, 2.0, 3.0\n"


class TestParse:
    def test_minimal_log(self):
        log, report = parse_log(MINIMAL)
        assert log.schemas == {"VIBE": ["TimeUS", "VibeX", "VibeY", "VibeZ"]}
        assert log.record_count("VIBE") == 1
        assert list(log.iter_rows("VIBE")) == [(100, (1.0, 2.0, 3.0))]
        assert report.parsed_lines == 2
        assert report.skipped_lines == 0

    def test_unknown_message_strict(self):
        with pytest.raises(UnknownMessage) as exc:
            parse_log("ATT, 1, 2\n", strict=True)
        assert exc.value.line_number == 1

    def test_unknown_message_lenient(self):
        log, report = parse_log("ATT, 1, 2\n", strict=False)
        assert log.schemas == {}
        assert report.skipped_lines == 1

    def test_arity_mismatch(self):
        text = MINIMAL + "VIBE, 200, 1.0\n"
        with pytest.raises(ArityMismatch):
            parse_log(text, strict=True)
        _log, report = parse_log(text)
        assert report.skipped_lines == 1

    def test_non_monotonic_time(self):
        text = MINIMAL + "VIBE, 50, 1.0, 2.0, 3.0\n"
        with pytest.raises(NonMonotonicTime):
            parse_log(text, strict=True)
        log, report = parse_log(text)
        assert log.record_count("VIBE") == 1
        assert report.skipped_lines == 1

    def test_malformed_fmt(self):
        with pytest.raises(MalformedFmt):
            parse_log("FMT, x, 10, VIBE, Qf, TimeUS\n", strict=True)
        with pytest.raises(MalformedFmt):
            parse_log("FMT, 1, 10, VIBE, Qf, VibeX\n", strict=True)  # no TimeUS

    def test_blank_lines_not_counted(self):
        _log, report = parse_log("\n\n" + MINIMAL + "\n")
        assert report.parsed_lines == 2
        assert report.skipped_lines == 0

    def test_lenient_skips_match_strict_first_error(self):
        # the first lenient-skipped line is where strict parsing aborts
        text = MINIMAL + "JUNK, 1\nVIBE, 90, 1, 2, 3\n"
        _log, report = parse_log(text, strict=False)
        skipped_lines = [lineno for lineno, _ in report.errors]
        assert skipped_lines == [3, 4]
        with pytest.raises(UnknownMessage) as exc:
            parse_log(text, strict=True)
        assert exc.value.line_number == skipped_lines[0]


def random_log(rng: np.random.Generator) -> FlightLog:
    schemas = {}
    rows = {}
    n_groups = rng.integers(1, 4)
    for g in range(n_groups):
        name = f"MSG{g}"
        n_cols = int(rng.integers(1, 5))
        schemas[name] = ["TimeUS"] + [f"C{i}" for i in range(n_cols)]
        t = 0
        recs = []
        for _ in range(int(rng.integers(0, 30))):
            t += int(rng.integers(0, 1000))  # non-decreasing, duplicates allowed
            vals = tuple(float(v) for v in rng.normal(0, 1e3, n_cols) * 10.0 ** rng.integers(-8, 8))
            recs.append((t, vals))
        rows[name] = recs
    return FlightLog.from_rows(f"rand{rng.integers(0, 10**6)}", schemas, rows)


class TestSerialize:
    def test_empty_log(self):
        log = FlightLog.from_rows("empty", {}, {})
        assert serialize_log(log) == ""

    def test_one_record_two_lines(self):
        log, _ = parse_log(MINIMAL)
        text = serialize_log(log)
        assert len(text.strip().splitlines()) == 2

    def test_round_trip_100_random_logs(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            log = random_log(rng)
            text = serialize_log(log)
            back, report = parse_log(text, strict=True)
            assert not report.errors
            assert back.schemas == log.schemas
            for name in log.schemas:
                assert list(back.iter_rows(name)) == list(log.iter_rows(name))

    def test_floats_round_trip_exactly(self):
        values = (0.1, 1 / 3, -0.0, 1e-300, 12345678.9012345, float(np.pi))
        log = FlightLog.from_rows(
            "f", {"M": ["TimeUS"] + [f"C{i}" for i in range(len(values))]}, {"M": [(1, values)]}
        )
        back, _ = parse_log(serialize_log(log), strict=True)
        got = next(back.iter_rows("M"))[1]
        for a, b in zip(got, values):
            assert a == b and np.signbit(a) == np.signbit(b)


class TestAnnotations:
    def test_single_span(self):
        spans = load_annotations(
            '[{"log":"a","type":"Vibration","start_us":100,"end_us":200}]'
        )
        assert len(spans) == 1
        assert spans[0].log_id == "a"
        assert spans[0].anomaly_type is AnomalyType.VIBRATION
        assert (spans[0].start_us, spans[0].end_us) == (100, 200)

    def test_empty_list(self):
        assert load_annotations("[]") == []

    def test_unknown_type(self):
        with pytest.raises(UnknownAnomalyType):
            load_annotations('[{"log":"a","type":"Wobble","start_us":1,"end_us":2}]')

    def test_bad_json(self):
        with pytest.raises(BadJson):
            load_annotations("{not json")

    def test_inverted_span(self):
        with pytest.raises(InvertedSpan):
            load_annotations('[{"log":"a","type":"Power","start_us":5,"end_us":5}]')

    def test_round_trip(self):
        spans = load_annotations(
            '[{"log":"a","type":"GpsGlitch","start_us":1,"end_us":9},'
            '{"log":"b","type":"CompassInterference","start_us":4,"end_us":8}]'
        )
        assert load_annotations(serialize_annotations(spans)) == spans
