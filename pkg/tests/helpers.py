"""Shared builders for the test suite.

Two kinds of scaffolding live here: tiny hand-made market fixtures whose
numbers are easy to verify with a calculator, and in-memory assembly of
generated datasets so pipeline tests can skip the file round-trip.
"""

from datetime import date as Date, timedelta

from reportsignal.corpus import CorpusIndex
from reportsignal.market import (
    BarStore,
    DailyBar,
    IndexStore,
    IndustryMap,
    MarketData,
    TradingCalendar,
)
from reportsignal.synthkit import SynthSpec, generate


def weekdays(start: Date, count: int) -> list[Date]:
    out = []
    d = start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def flat_bar(stock_id: str, d: Date, price: float = 100.0, volume: float = 1e6) -> DailyBar:
    return DailyBar(stock_id, d, price, price, price, price, volume)


def assemble(ds):
    """In-memory stores for a generated dataset, mirroring the CLI loaders."""
    calendar = TradingCalendar(ds.calendar_dates)
    market = MarketData(
        calendar,
        BarStore(ds.bars, calendar),
        IndexStore(ds.index_rows, calendar),
        IndustryMap(ds.industry_rows),
    )
    scores = {score.report_id: score for score in ds.scores}
    return market, CorpusIndex(ds.records), scores


def small_spec(seed: int = 0, **overrides) -> SynthSpec:
    """A dataset small enough to generate in tens of milliseconds."""
    base = dict(
        n_stocks=24,
        n_days=30,
        reports_per_day=6,
        train_days=18,
        warmup_days=66,
        seed=seed,
    )
    base.update(overrides)
    return SynthSpec(**base)


def small_dataset(seed: int = 0, **overrides):
    return generate(small_spec(seed=seed, **overrides))
