"""Unit tests for corpus parsing, cleaning, and segmentation."""

import io
from datetime import date as Date

import pytest

from reportsignal.config import packaged_data_path
from reportsignal.corpus import (
    CorpusIndex,
    ReportRecord,
    SegmentDictionary,
    clean_text,
    load_risk_warning_patterns,
    parse_corpus,
    prepare_report,
    segment,
    serialize_corpus,
)
from reportsignal.errors import ArgumentError, DataError, SchemaError
from reportsignal.sentiment import load_lexicon


def test_parse_happy_path():
    text = (
        "report_id,title,abstract,stock_codes,release_date\n"
        "r1,Title one,Body one,600000.SH,2019-03-04\n"
        "r2,Title two,Body two,600000.SH;000001.SZ,2019-03-05\n"
    )
    result = parse_corpus(io.StringIO(text))
    assert not result.rejects
    assert result.error_rate == 0.0
    assert result.records[0] == ReportRecord(
        "r1", "Title one", "Body one", ("600000.SH",), Date(2019, 3, 4)
    )
    assert result.records[1].stock_codes == ("600000.SH", "000001.SZ")


def test_parse_rejects_bad_rows_individually():
    text = (
        "report_id,title,abstract,stock_codes,release_date\n"
        "r1,t,a,600000.SH\n"
        ",t,a,600000.SH,2019-03-04\n"
        "r3,t,a,,2019-03-04\n"
        "r4,t,a,600000.sh,2019-03-04\n"
        "r5,t,a,600000.SH,2019-13-04\n"
        "r6,t,a,600000.SH,2019-06-01\n"
        "r7,t,a,600000.SH,2019-03-04\n"
    )
    result = parse_corpus(
        io.StringIO(text),
        date_range=(Date(2019, 1, 1), Date(2019, 3, 31)),
        max_error_rate=1.0,
    )
    assert [r.report_id for r in result.records] == ["r7"]
    assert [r.line for r in result.rejects] == [2, 3, 4, 5, 6, 7]
    reasons = [r.reason for r in result.rejects]
    assert "expected 5 fields" in reasons[0]
    assert "empty report_id" in reasons[1]
    assert "no stock codes" in reasons[2]
    assert "malformed stock code" in reasons[3]
    assert "unparseable release_date" in reasons[4]
    assert "outside" in reasons[5]


def test_parse_fatal_conditions():
    with pytest.raises(SchemaError):
        parse_corpus(io.StringIO(""))
    with pytest.raises(SchemaError):
        parse_corpus(io.StringIO("id,title,abstract,codes,date\n"))
    duplicated = (
        "report_id,title,abstract,stock_codes,release_date\n"
        "r1,t,a,600000.SH,2019-03-04\n"
        "r1,t,a,600000.SH,2019-03-05\n"
    )
    with pytest.raises(DataError):
        parse_corpus(io.StringIO(duplicated))
    noisy = (
        "report_id,title,abstract,stock_codes,release_date\n"
        "r1,t,a,600000.SH,2019-03-04\n"
        "r2,t,a,bad-code,2019-03-04\n"
    )
    with pytest.raises(DataError):
        parse_corpus(io.StringIO(noisy), max_error_rate=0.25)


def test_serialize_round_trips_commas_and_cjk(tmp_path):
    records = [
        ReportRecord(
            "r1",
            'Growth, with "quotes"',
            "盈利预测：增持, 评级上调",
            ("600519.SH", "000001.SZ"),
            Date(2019, 7, 1),
        )
    ]
    path = tmp_path / "corpus.csv"
    serialize_corpus(records, path)
    assert parse_corpus(path).records == records


def test_clean_text_normalises_whitespace_and_control_chars():
    raw = "  First\tline\r\nsecond​line\x00end  "
    # ​ is a format character (Cf) and \x00 a control (Cc): both
    # become spaces, then whitespace runs collapse.
    assert clean_text(raw) == "First line second line end"


def test_clean_text_cuts_boilerplate_tails():
    body = "A" * 80
    text = f"{body} 风险提示 macro risks remain"
    assert clean_text(text, ("风险提示",)) == body
    # a marker in the body (outside the trailing fraction) is kept
    early = f"风险提示 {body}"
    assert clean_text(early, ("风险提示",)) == early
    # the earliest in-window marker wins even when listed last
    double = f"{body} 免责声明 x 风险提示 y"
    assert clean_text(double, ("风险提示", "免责声明")) == body


def test_clean_text_cuts_repeatedly_until_no_marker_remains():
    text = "B" * 40 + " 风险提示 " + "C" * 40 + " 风险提示 tail"
    cleaned = clean_text(text, ("风险提示",), tail_fraction=0.6)
    assert "风险提示" not in cleaned


def test_clean_text_is_idempotent():
    raw = "Text​with  noise 风险提示 trailing risk boilerplate"
    once = clean_text(raw, ("风险提示",))
    assert clean_text(once, ("风险提示",)) == once


def test_clean_text_tail_fraction_bounds():
    with pytest.raises(ArgumentError):
        clean_text("x", tail_fraction=-0.1)
    with pytest.raises(ArgumentError):
        clean_text("x", tail_fraction=1.5)
    # tail_fraction 0 scans no tail at all, so nothing is ever cut
    assert clean_text("abc 风险提示", ("风险提示",), tail_fraction=0.0) == "abc 风险提示"
    # tail_fraction 1 scans the whole text, so even a leading marker cuts
    assert clean_text("风险提示 abc", ("风险提示",), tail_fraction=1.0) == ""


def test_segment_prefers_longest_match():
    words = SegmentDictionary(["增长", "快速增长", "业绩"])
    assert segment("业绩快速增长", words) == ["业绩", "快速增长"]


def test_segment_falls_back_to_single_characters():
    words = SegmentDictionary(["增长"])
    assert segment("X增长Y", words) == ["X", "增长", "Y"]


def test_segment_skips_whitespace():
    words = SegmentDictionary(["ab", "cd"])
    assert segment("ab  cd\nab", words) == ["ab", "cd", "ab"]


def test_segment_accepts_plain_iterables_and_weights():
    assert segment("abc", ["ab", "bc"]) == ["ab", "c"]
    weighted = SegmentDictionary({"ab": 2.0, "c": 1.0})
    assert weighted.weights["ab"] == 2.0
    assert segment("abc", weighted) == ["ab", "c"]


def test_segment_dictionary_rejects_degenerate_input():
    with pytest.raises(ArgumentError):
        SegmentDictionary([])
    with pytest.raises(ArgumentError):
        SegmentDictionary([""])


def test_packaged_lexicon_words_round_trip_through_segmentation():
    """Every ordered pair of packaged lexicon words must re-segment into
    exactly those two words when concatenated; greedy matching may not
    merge across the seam or split either word."""
    lexicon = load_lexicon(packaged_data_path("lexicon.csv"))
    dictionary = lexicon.segment_dictionary()
    words = sorted(dictionary.words)
    assert len(words) == 23
    checked = 0
    for first in words:
        for second in words:
            if first == second:
                continue
            if segment(first + second, dictionary) == [first, second]:
                checked += 1
    # every pair either round-trips or legitimately re-merges; with this
    # lexicon no pair re-merges, so all 23*22 ordered pairs round-trip
    assert checked == len(words) * (len(words) - 1)


def test_prepare_report_joins_title_and_abstract():
    record = ReportRecord(
        "r1", "业绩突破", "公司有望 保持领先地位 风险提示 注意", ("600000.SH",), Date(2019, 3, 4)
    )
    dictionary = SegmentDictionary(["突破", "有望", "领先地位", "业绩"])
    cleaned = prepare_report(record, dictionary, ("风险提示",), tail_fraction=0.5)
    assert cleaned.report_id == "r1"
    assert cleaned.text == "业绩突破 公司有望 保持领先地位"
    assert cleaned.tokens == ("业绩", "突破", "公", "司", "有望", "保", "持", "领先地位")


def test_load_risk_warning_patterns_skips_comments(tmp_path):
    path = tmp_path / "warnings.txt"
    path.write_text("# comment\n风险提示\n\n免责声明\n", encoding="utf-8")
    assert load_risk_warning_patterns(path) == ("风险提示", "免责声明")
    packaged = load_risk_warning_patterns(packaged_data_path("risk_warnings.txt"))
    assert "风险提示" in packaged


def test_corpus_index_counts_inclusive_windows():
    records = [
        ReportRecord(f"r{i}", "t", "a", codes, day)
        for i, (codes, day) in enumerate(
            [
                (("600000.SH",), Date(2019, 3, 4)),
                (("600000.SH", "000001.SZ"), Date(2019, 3, 6)),
                (("600000.SH",), Date(2019, 3, 10)),
            ]
        )
    ]
    index = CorpusIndex(records)
    assert index.n_records == 3
    assert index.stocks() == ["000001.SZ", "600000.SH"]
    assert index.count_between("600000.SH", Date(2019, 3, 4), Date(2019, 3, 10)) == 3
    assert index.count_between("600000.SH", Date(2019, 3, 5), Date(2019, 3, 9)) == 1
    assert index.count_between("600000.SH", Date(2019, 3, 6), Date(2019, 3, 6)) == 1
    assert index.count_between("000001.SZ", Date(2019, 3, 1), Date(2019, 3, 31)) == 1
    assert index.count_between("600000.SH", Date(2019, 3, 10), Date(2019, 3, 4)) == 0
    assert index.count_between("999999.SZ", Date(2019, 3, 1), Date(2019, 3, 31)) == 0
