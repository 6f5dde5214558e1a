"""Unit tests for calendar, bar/index stores, and market file loading."""

import math
from datetime import date as Date

import pytest

from reportsignal.errors import (
    CalendarRangeError,
    ConfigurationError,
    DataError,
    GapError,
    HistoryError,
    MappingError,
    SchemaError,
)
from reportsignal.market import (
    BarStore,
    DailyBar,
    IndexStore,
    IndustryMap,
    TradingCalendar,
    load_calendar,
    load_market,
)
from tests.helpers import flat_bar, weekdays

MONDAY = Date(2019, 3, 4)


def calendar_of(count=10):
    return TradingCalendar(weekdays(MONDAY, count))


def test_calendar_rejects_unsorted_or_empty_dates():
    with pytest.raises(DataError):
        TradingCalendar([])
    with pytest.raises(DataError):
        TradingCalendar([MONDAY, MONDAY])
    with pytest.raises(DataError):
        TradingCalendar([Date(2019, 3, 5), MONDAY])


def test_calendar_lookup_and_shift():
    cal = calendar_of(10)
    assert len(cal) == 10
    assert cal.first() == MONDAY
    assert cal.last() == Date(2019, 3, 15)
    assert MONDAY in cal and Date(2019, 3, 9) not in cal
    assert cal.index(Date(2019, 3, 6)) == 2
    assert cal.shift(MONDAY, 4) == Date(2019, 3, 8)
    # Friday + 1 trading day skips the weekend
    assert cal.shift(Date(2019, 3, 8), 1) == Date(2019, 3, 11)
    assert cal.shift(Date(2019, 3, 11), -1) == Date(2019, 3, 8)
    with pytest.raises(CalendarRangeError):
        cal.index(Date(2019, 3, 9))
    with pytest.raises(CalendarRangeError):
        cal.shift(MONDAY, -1)
    with pytest.raises(CalendarRangeError):
        cal.shift(cal.last(), 1)


def test_calendar_next_previous_align():
    cal = calendar_of(10)
    saturday = Date(2019, 3, 9)
    assert cal.next(saturday) == Date(2019, 3, 11)
    assert cal.previous(saturday) == Date(2019, 3, 8)
    assert cal.next(MONDAY) == Date(2019, 3, 5)
    assert cal.align(MONDAY) == MONDAY
    assert cal.align(saturday) == Date(2019, 3, 11)
    assert cal.align(MONDAY, "next") == Date(2019, 3, 5)
    assert cal.align(Date(2019, 3, 11), "previous") == Date(2019, 3, 8)
    with pytest.raises(ConfigurationError):
        cal.align(MONDAY, "backwards")
    with pytest.raises(CalendarRangeError):
        cal.next(cal.last())
    with pytest.raises(CalendarRangeError):
        cal.previous(cal.first())


def test_calendar_coverage_requirements():
    cal = TradingCalendar(weekdays(Date(2019, 1, 1), 80))
    cal.require_coverage(Date(2019, 4, 1), Date(2019, 4, 10), lookback_days=90)
    with pytest.raises(ConfigurationError):
        cal.require_coverage(Date(2019, 3, 1), Date(2019, 4, 10), lookback_days=90)
    with pytest.raises(ConfigurationError):
        cal.require_coverage(Date(2019, 4, 1), cal.last(), post_trading_days=1)


def test_bar_invariants():
    assert flat_bar("600000.SH", MONDAY).check() is None
    assert DailyBar("s", MONDAY, 100, 101, 99, 100.5, 0.0).check() is None
    bad = [
        DailyBar("s", MONDAY, 0.0, 101, 99, 100, 1e6),
        DailyBar("s", MONDAY, 100, math.nan, 99, 100, 1e6),
        DailyBar("s", MONDAY, 100, 101, 99, 100, -1.0),
        DailyBar("s", MONDAY, 100, 100.2, 99, 100.5, 1e6),
        DailyBar("s", MONDAY, 100, 101, 100.1, 100.5, 1e6),
    ]
    assert all(b.check() is not None for b in bad)


def store_with_closes(closes, stock_id="600000.SH", skip=()):
    cal = calendar_of(len(closes))
    bars = [
        DailyBar(stock_id, d, c, c * 1.01, c * 0.99, c, 1000.0 * (i + 1))
        for i, (d, c) in enumerate(zip(cal.dates, closes))
        if i not in skip
    ]
    return cal, BarStore(bars, cal)


def test_bar_store_lookup_and_gaps():
    cal, store = store_with_closes([100, 101, 102], skip=(1,))
    assert store.stocks() == ["600000.SH"]
    assert store.has_bar("600000.SH", cal.dates[0])
    assert not store.has_bar("600000.SH", cal.dates[1])
    assert store.bar("600000.SH", cal.dates[2]).close == 102
    assert store.volume("600000.SH", cal.dates[0]) == 1000.0
    with pytest.raises(GapError):
        store.bar("600000.SH", cal.dates[1])
    with pytest.raises(GapError):
        store.bar("000001.SZ", cal.dates[0])


def test_close_log_return_requires_consecutive_bars():
    cal, store = store_with_closes([100, 110, 105, 99], skip=(2,))
    assert store.close_log_return("600000.SH", cal.dates[1]) == math.log(110 / 100)
    # the bar before dates[3] is missing, so no return there
    with pytest.raises(GapError):
        store.close_log_return("600000.SH", cal.dates[3])
    # no trading day at all before the calendar start
    with pytest.raises(CalendarRangeError):
        store.close_log_return("600000.SH", cal.dates[0])


def test_mean_volume_needs_a_complete_window():
    cal, store = store_with_closes([100] * 6)
    # volumes are 1000, 2000, ..., mean of the 3 before dates[4] is 3000
    assert store.mean_volume_before("600000.SH", cal.dates[4], 3) == 3000.0
    with pytest.raises(HistoryError):
        store.mean_volume_before("600000.SH", cal.dates[2], 3)
    cal2, gappy = store_with_closes([100] * 6, skip=(2,))
    with pytest.raises(HistoryError):
        gappy.mean_volume_before("600000.SH", cal2.dates[4], 3)


def test_bar_store_fence_blocks_early_reads():
    cal, store = store_with_closes([100, 101, 102, 103])
    store.fence = cal.dates[1]
    assert store.bar("600000.SH", cal.dates[1]).close == 101
    with pytest.raises(DataError, match="crosses the fence"):
        store.bar("600000.SH", cal.dates[0])
    # the return at dates[1] needs the bar at dates[0], behind the fence
    with pytest.raises(DataError, match="crosses the fence"):
        store.close_log_return("600000.SH", cal.dates[1])
    assert store.close_log_return("600000.SH", cal.dates[2]) == math.log(102 / 101)
    with pytest.raises(DataError, match="crosses the fence"):
        store.mean_volume_before("600000.SH", cal.dates[2], 2)


def test_index_store_changes():
    cal = calendar_of(3)
    rows = [
        ("CSI500", cal.dates[0], 5000.0),
        ("CSI500", cal.dates[1], 5100.0),
        ("VIX", cal.dates[0], 18.0),
        ("VIX", cal.dates[1], 21.5),
    ]
    store = IndexStore(rows, cal)
    assert store.ids() == ["CSI500", "VIX"]
    assert "VIX" in store and "DAX" not in store
    assert store.level("CSI500", cal.dates[1]) == 5100.0
    assert store.log_return("CSI500", cal.dates[1]) == math.log(5100 / 5000)
    assert store.change("VIX", cal.dates[1]) == 3.5
    assert store.change("CSI500", cal.dates[1], "logdiff") == math.log(5100 / 5000)
    with pytest.raises(ConfigurationError):
        store.change("CSI500", cal.dates[1], "ratio")
    with pytest.raises(GapError):
        store.level("DAX", cal.dates[0])
    with pytest.raises(GapError):
        store.level("CSI500", cal.dates[2])
    store.fence = cal.dates[1]
    with pytest.raises(DataError, match="crosses the fence"):
        store.level("CSI500", cal.dates[0])
    with pytest.raises(DataError, match="crosses the fence"):
        store.log_return("CSI500", cal.dates[1])


def test_industry_map_defaults_blank_sectors_to_other():
    imap = IndustryMap(
        [("600000.SH", "IND01", "Bank"), ("000001.SZ", "IND02", "")]
    )
    assert len(imap) == 2
    assert "600000.SH" in imap and "999999.SH" not in imap
    assert imap.industry_index("600000.SH") == "IND01"
    assert imap.sector("600000.SH") == "Bank"
    assert imap.sector("000001.SZ") == "Other"
    with pytest.raises(MappingError):
        imap.industry_index("999999.SH")
    with pytest.raises(MappingError):
        imap.sector("999999.SH")


def write_market_files(tmp_path, bar_lines, index_lines, industry_lines, calendar=None):
    bars = tmp_path / "bars.csv"
    bars.write_text(
        "stock_id,date,open,high,low,close,volume\n" + "".join(bar_lines),
        encoding="utf-8",
    )
    indices = tmp_path / "indices.csv"
    indices.write_text(
        "index_id,date,level\n" + "".join(index_lines), encoding="utf-8"
    )
    industry = tmp_path / "industry.csv"
    industry.write_text(
        "stock_id,industry_index_id,sector_name\n" + "".join(industry_lines),
        encoding="utf-8",
    )
    calendar_path = None
    if calendar is not None:
        calendar_path = tmp_path / "calendar.txt"
        calendar_path.write_text(
            "# trading days\n" + "".join(f"{d}\n" for d in calendar), encoding="utf-8"
        )
    return bars, indices, industry, calendar_path


def test_load_market_with_explicit_calendar(tmp_path):
    days = weekdays(MONDAY, 3)
    bars, indices, industry, calendar = write_market_files(
        tmp_path,
        [f"600000.SH,{d},100,101,99,100.5,1e6\n" for d in days],
        [f"CSI500,{d},5000\n" for d in days],
        ["600000.SH,IND01,Bank\n"],
        calendar=days,
    )
    result = load_market(bars, indices, industry, calendar)
    assert not result.bar_rejects and not result.index_rejects
    assert result.n_bars == 3 and result.n_index_rows == 3
    assert result.market.calendar.dates == tuple(days)
    assert result.market.bars.bar("600000.SH", days[0]).volume == 1e6
    assert result.market.industry.sector("600000.SH") == "Bank"


def test_load_market_can_infer_the_calendar_from_bars(tmp_path):
    days = weekdays(MONDAY, 3)
    bars, indices, industry, _ = write_market_files(
        tmp_path,
        [f"600000.SH,{d},100,101,99,100.5,1e6\n" for d in days],
        [f"CSI500,{d},5000\n" for d in days],
        ["600000.SH,IND01,Bank\n"],
    )
    result = load_market(bars, indices, industry, infer_calendar=True)
    assert result.market.calendar.dates == tuple(days)
    with pytest.raises(ConfigurationError):
        load_market(bars, indices, industry)


def test_load_market_rejects_bad_bar_rows(tmp_path):
    days = weekdays(MONDAY, 3)
    good = f"600000.SH,{days[0]},100,101,99,100.5,1e6\n"
    bad_rows = [
        f"600000.SH,{days[1]},100,101,99\n",              # field count
        f"600000.SH,{days[1]},abc,101,99,100.5,1e6\n",    # unparseable
        f",{days[1]},100,101,99,100.5,1e6\n",             # empty stock_id
        f"600000.SH,{days[1]},100,100.2,99,100.5,1e6\n",  # high below close
        f"600000.SH,2019-03-09,100,101,99,100.5,1e6\n",   # not a trading day
        good,                                             # duplicate of line 2
    ]
    bars, indices, industry, calendar = write_market_files(
        tmp_path,
        [good] + bad_rows,
        [f"CSI500,{days[0]},5000\n"],
        ["600000.SH,IND01,Bank\n"],
        calendar=days,
    )
    result = load_market(bars, indices, industry, calendar)
    assert result.n_bars == 1
    reasons = [r.reason for r in result.bar_rejects]
    assert len(reasons) == 6
    assert "expected 7 fields" in reasons[0]
    assert "unparseable" in reasons[1]
    assert "empty stock_id" in reasons[2]
    assert "bracket" in reasons[3]
    assert "not a trading day" in reasons[4]
    assert "duplicate" in reasons[5]


def test_load_market_rejects_bad_index_rows_but_allows_negative_vix(tmp_path):
    days = weekdays(MONDAY, 2)
    index_rows = [
        f"CSI500,{days[0]},5000\n",
        f"CSI500,{days[0]},5001\n",     # duplicate
        f"CSI500,{days[1]},-5\n",       # non-positive level
        f"CSI500,{days[1]},nan\n",      # non-finite
        f",{days[1]},5000\n",           # empty id
        f"CSI500,{days[1]}\n",          # field count
        f"VIX,{days[0]},-2.5\n",        # negative fear-gauge level is fine
    ]
    bars, indices, industry, calendar = write_market_files(
        tmp_path,
        [f"600000.SH,{days[0]},100,101,99,100.5,1e6\n"],
        index_rows,
        ["600000.SH,IND01,Bank\n"],
        calendar=days,
    )
    result = load_market(bars, indices, industry, calendar)
    assert result.n_index_rows == 2
    assert result.market.indices.level("VIX", days[0]) == -2.5
    reasons = [r.reason for r in result.index_rejects]
    assert len(reasons) == 5
    assert "duplicate" in reasons[0]
    assert "invalid level" in reasons[1]
    assert "invalid level" in reasons[2]
    assert "empty index_id" in reasons[3]
    assert "expected 3 fields" in reasons[4]


def test_load_market_structural_failures_are_fatal(tmp_path):
    days = weekdays(MONDAY, 2)
    bars, indices, industry, calendar = write_market_files(
        tmp_path,
        [f"600000.SH,{days[0]},100,101,99,100.5,1e6\n"],
        [f"CSI500,{days[0]},5000\n"],
        ["600000.SH,IND01\n"],  # wrong industry field count
        calendar=days,
    )
    with pytest.raises(SchemaError):
        load_market(bars, indices, industry, calendar)
    bars.write_text("wrong,header\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_market(bars, indices, industry, calendar)
    bars.write_text("", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_market(bars, indices, industry, calendar)


def test_load_calendar_rejects_garbage(tmp_path):
    path = tmp_path / "calendar.txt"
    path.write_text("2019-03-04\nnot-a-date\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_calendar(path)
