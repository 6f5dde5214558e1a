"""Synthetic corpus + market generator with planted regression effects.

The generator works backwards from the pooled regression equations: for
every (report, stock) pair it computes the lagged regressors exactly as
the pipeline will (same log/mean arithmetic over the realized series),
forms the three outcome targets as beta . x + noise, and then constructs
the next day's OHLCV bar so that the pipeline re-derives those targets:

  * excess return: the close is moved by target + industry return, so
    the industry term cancels in the pipeline's subtraction;
  * volume change: volume = (trailing 60-day mean) * exp(target);
  * intraday range: with the bar's log-coordinates u = ln(H/O),
    d = ln(L/O), c = ln(C/O) chosen symmetric around the close,
    u = c/2 + m and d = c/2 - m, the range estimator collapses to
    2.006 m^2 - 0.3925 c^2, so m is solved from the target. The open
    is placed at C / e^c, i.e. the close-to-close move is absorbed by
    the overnight gap, and c is drawn small relative to the target
    (|c| <= 0.8 sqrt(target)), which keeps m >= |c|/2 and the bar valid
    for any planted return.

Everything is driven by one seeded generator (numpy's default PCG64) in
a fixed draw order, so a spec generates byte-identical files every time.
Outcome days are the trading days following report days; report days get
reports_per_day reports each, every report cites one stock (occasionally
two), and no stock is cited twice on one day, so outcome slots never
collide.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from datetime import date as Date, timedelta
from pathlib import Path

import numpy as np

from .corpus import ReportRecord, serialize_corpus
from .econometrics import NAMED_SECTORS, OTHER_SECTOR
from .errors import ConfigurationError
from .market import CSI500, DailyBar, SSE, SZSE, VIX
from .sentiment import SentimentScore, write_scores

SECTORS = NAMED_SECTORS + (OTHER_SECTOR,)
INDUSTRY_IDS = tuple(f"IND{i + 1:02d}" for i in range(len(SECTORS)))

BETA_KEYS = (
    "constant",
    "pos",
    "neg",
    "range",
    "dvolume",
    "ret_ex",
    "szse",
    "sse",
    "csi500",
    "vix",
    "num90",
    "num7",
)
OUTCOME_KEYS = ("range", "ret_ex", "delta_volume")

# Planted defaults: reference point estimates for the three pooled
# regressions, in their reporting scale (range x100, counts /100).  One
# deliberate exception: the range intercept is raised well above the noise
# floor so that planted variance targets stay positive -- a Garman-Klass
# range cannot be negative, so targets at or below zero would have to be
# clamped, truncating the noise distribution and biasing every coefficient
# of the range equation.
DEFAULT_BETAS = {
    "range": {
        "constant": 0.10,
        "pos": 0.065,
        "neg": 0.044,
        "range": 0.291,
        "dvolume": 0.002,
        "ret_ex": -0.004,
        "szse": 0.006,
        "sse": -0.002,
        "csi500": 0.002,
        "vix": 0.0007,
        "num90": 0.0033,
        "num7": -0.0037,
    },
    "ret_ex": {
        "constant": -0.018,
        "pos": 0.064,
        "neg": -0.065,
        "range": 0.844,
        "dvolume": 0.064,
        "ret_ex": -0.108,
        "szse": -0.015,
        "sse": 0.149,
        "csi500": -0.039,
        "vix": 0.0136,
        "num90": 0.028,
        "num7": -0.113,
    },
    "delta_volume": {
        "constant": 0.109,
        "pos": 0.177,
        "neg": 0.036,
        "range": -0.464,
        "dvolume": 0.539,
        "ret_ex": -0.016,
        "szse": 0.007,
        "sse": 0.005,
        "csi500": 0.009,
        "vix": -0.0012,
        "num90": -0.0033,
        "num7": 0.0025,
    },
}

# Noise scales calibrated by Monte Carlo so that the default spec's
# recovered t-statistics land near the reference values (the anchor is
# the pos coefficient of the excess-return regression, median |t| ~ 5.5).
DEFAULT_NOISE = {"range": 0.035, "ret_ex": 0.113, "delta_volume": 0.158}

RANGE_FLOOR_X100 = 1e-6  # planted range targets are clamped to stay positive


def default_betas() -> dict[str, dict[str, float]]:
    return {k: dict(v) for k, v in DEFAULT_BETAS.items()}


def default_noise() -> dict[str, float]:
    return dict(DEFAULT_NOISE)


@dataclass
class SynthSpec:
    """Sizing, planted coefficients, and noise scales for one dataset."""

    n_stocks: int = 200
    n_days: int = 250
    reports_per_day: int = 40
    seed: int = 0
    train_days: int = 150
    warmup_days: int = 66
    post_days: int = 2
    multi_stock_rate: float = 0.05
    betas: dict[str, dict[str, float]] = field(default_factory=default_betas)
    noise: dict[str, float] = field(default_factory=default_noise)
    score_alpha: tuple[float, float, float] = (2.0, 2.4, 2.0)
    start_date: Date = Date(2021, 1, 4)
    idio_vol: float = 0.02
    index_vol: float = 0.01
    industry_vol: float = 0.012
    vix_base: float = 20.0
    vix_vol: float = 0.04  # daily sd of log(VIX); diff scale ~ base * vol
    base_price: float = 30.0
    price_spread: float = 0.3
    base_volume: float = 2e6
    volume_base_spread: float = 0.5
    volume_sd: float = 0.35
    base_range: float = 2.2e-4
    range_spread: float = 0.6
    tokens_per_title: int = 3
    tokens_per_abstract: int = 12
    risk_warning_rate: float = 0.3

    def validate(self) -> None:
        counts = {
            "n_stocks": self.n_stocks,
            "n_days": self.n_days,
            "reports_per_day": self.reports_per_day,
            "train_days": self.train_days,
            "post_days": self.post_days,
            "tokens_per_title": self.tokens_per_title,
            "tokens_per_abstract": self.tokens_per_abstract,
        }
        for name, value in counts.items():
            if value <= 0:
                raise ConfigurationError(f"{name} must be positive, got {value}")
        # 66 weekdays span ~92 calendar days, covering the 90-day count
        # lookback; fewer would fail the ingest coverage check.
        if self.warmup_days < 66:
            raise ConfigurationError(f"warmup_days must be >= 66, got {self.warmup_days}")
        if self.train_days >= self.n_days:
            raise ConfigurationError("train_days must be smaller than n_days")
        # Worst case a day cites 2 * reports_per_day stocks, and all of
        # yesterday's citations (up to the same number) sit out today.
        if 4 * self.reports_per_day > self.n_stocks:
            raise ConfigurationError("need n_stocks >= 4 * reports_per_day")
        if not (0.0 <= self.multi_stock_rate <= 1.0):
            raise ConfigurationError("multi_stock_rate must be in [0, 1]")
        if not (0.0 <= self.risk_warning_rate <= 1.0):
            raise ConfigurationError("risk_warning_rate must be in [0, 1]")
        if set(self.betas) != set(OUTCOME_KEYS):
            raise ConfigurationError(f"betas must have outcomes {OUTCOME_KEYS}")
        for outcome, vector in self.betas.items():
            if set(vector) != set(BETA_KEYS):
                raise ConfigurationError(f"betas[{outcome!r}] must have keys {BETA_KEYS}")
        if set(self.noise) != set(OUTCOME_KEYS):
            raise ConfigurationError(f"noise must have outcomes {OUTCOME_KEYS}")
        for outcome, scale in self.noise.items():
            if scale < 0.0 or not math.isfinite(scale):
                raise ConfigurationError(f"noise[{outcome!r}] must be >= 0, got {scale}")
        if len(self.score_alpha) != 3 or any(a <= 0 for a in self.score_alpha):
            raise ConfigurationError("score_alpha must be 3 positive numbers")


@dataclass
class SynthDataset:
    """Everything generate() produces, before any files are written."""

    records: list[ReportRecord]
    scores: list[SentimentScore]
    bars: list[DailyBar]
    index_rows: list[tuple[str, Date, float]]
    industry_rows: list[tuple[str, str, str]]
    calendar_dates: list[Date]
    train_range: tuple[Date, Date]
    test_range: tuple[Date, Date]
    truth: dict


def _weekdays(start: Date, count: int) -> list[Date]:
    out = []
    d = start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def _gk_from_prices(o: float, h: float, l: float, c: float) -> float:
    u = math.log(h / o)
    d = math.log(l / o)
    cc = math.log(c / o)
    return 0.511 * (u - d) ** 2 - 0.019 * (cc * (u + d) - 2.0 * u * d) - 0.383 * cc**2


def _lexicon_word_lists() -> tuple[list[str], list[str], list[str]]:
    from .config import packaged_data_path
    from .sentiment import load_lexicon
    from .labeling import POSITIVE, NEUTRAL, NEGATIVE

    lex = load_lexicon(packaged_data_path("lexicon.csv"))
    return lex.words(POSITIVE), lex.words(NEUTRAL), lex.words(NEGATIVE)


def generate(spec: SynthSpec) -> SynthDataset:
    """Generate one dataset; deterministic for a fixed spec and seed."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n_cal = spec.warmup_days + spec.n_days + spec.post_days
    cal_dates = _weekdays(spec.start_date, n_cal)

    # --- index level series ------------------------------------------------
    index_levels: dict[str, np.ndarray] = {}
    for index_id, base in ((SSE, 3300.0), (SZSE, 2100.0), (CSI500, 6000.0)):
        steps = rng.normal(0.0, spec.index_vol, n_cal - 1)
        index_levels[index_id] = base * np.exp(np.concatenate(([0.0], np.cumsum(steps))))
    for index_id in INDUSTRY_IDS:
        steps = rng.normal(0.0, spec.industry_vol, n_cal - 1)
        index_levels[index_id] = 5000.0 * np.exp(np.concatenate(([0.0], np.cumsum(steps))))
    # Lognormal walk: always positive with no flat stretches, so the
    # day-to-day VIX differences never degenerate into a constant column.
    vix_steps = rng.normal(0.0, spec.vix_vol, n_cal - 1)
    index_levels[VIX] = spec.vix_base * np.exp(
        np.concatenate(([0.0], np.cumsum(vix_steps)))
    )

    # Log returns via math.log, element by element, matching the pipeline's
    # arithmetic bit for bit (np.log can differ in the last ulp).
    index_logret: dict[str, list[float]] = {}
    for index_id, levels in index_levels.items():
        if index_id == VIX:
            continue
        floats = [float(v) for v in levels]
        index_logret[index_id] = [math.nan] + [
            math.log(b / a) for a, b in zip(floats, floats[1:])
        ]
    vix_floats = [float(v) for v in index_levels[VIX]]
    vix_diff = [math.nan] + [b - a for a, b in zip(vix_floats, vix_floats[1:])]

    # --- stocks -------------------------------------------------------------
    stock_ids = [f"{600000 + i}.SH" for i in range(spec.n_stocks)]
    industry_of = [i % len(SECTORS) for i in range(spec.n_stocks)]
    close0 = spec.base_price * np.exp(rng.normal(0.0, spec.price_spread, spec.n_stocks))
    vbase = spec.base_volume * np.exp(rng.normal(0.0, spec.volume_base_spread, spec.n_stocks))

    # --- report schedule, scores, text, outcome noise ------------------------
    pos_words, neu_words, neg_words = _lexicon_word_lists()
    class_words = (pos_words, neu_words, neg_words)
    warning_tail = " 风险提示 后市存在波动"

    records: list[ReportRecord] = []
    scores: list[SentimentScore] = []
    # (stock index, calendar pos of outcome day) -> planted values
    slots: dict[tuple[int, int], tuple[float, float, float, float, float]] = {}
    n_multi = 0
    sd_range = spec.noise["range"]
    sd_ret = spec.noise["ret_ex"]
    sd_dvol = spec.noise["delta_volume"]
    n_tokens = spec.tokens_per_title + spec.tokens_per_abstract

    prev_cited: set[int] = set()
    for day_pos in range(spec.warmup_days, spec.warmup_days + spec.n_days):
        day = cal_dates[day_pos]
        perm = rng.permutation(spec.n_stocks)
        n_reports = spec.reports_per_day
        multi_flags = rng.random(n_reports) < spec.multi_stock_rate
        score_draws = rng.dirichlet(spec.score_alpha, n_reports)
        class_u = rng.random((n_reports, n_tokens))
        word_u = rng.random((n_reports, n_tokens))
        warn_u = rng.random(n_reports)
        eps = rng.normal(0.0, 1.0, (n_reports, 2, 3))

        # Stocks covered yesterday sit out today's draw.  A covered
        # stock's next-day bar embeds that report's outcome noise, so
        # covering it again immediately would feed the noise back into
        # the new row's lagged regressors; a one-day gap keeps every
        # regressor window clear of planted noise.
        pool = [int(s) for s in perm if int(s) not in prev_cited]
        today_cited: set[int] = set()
        cursor = 0
        for r in range(n_reports):
            n_cited = 2 if multi_flags[r] else 1
            cited = [pool[cursor + j] for j in range(n_cited)]
            cursor += n_cited
            today_cited.update(cited)
            if n_cited == 2:
                n_multi += 1
            triple = score_draws[r]
            pos, neu, neg = float(triple[0]), float(triple[1]), float(triple[2])

            cum1, cum2 = pos, pos + neu
            tokens = []
            for t in range(n_tokens):
                u = class_u[r, t]
                cls = 0 if u < cum1 else (1 if u < cum2 else 2)
                words = class_words[cls]
                tokens.append(words[min(int(word_u[r, t] * len(words)), len(words) - 1)])
            title = "".join(tokens[: spec.tokens_per_title])
            abstract = "".join(tokens[spec.tokens_per_title :])
            if warn_u[r] < spec.risk_warning_rate:
                abstract += warning_tail

            report_id = f"R{day_pos:04d}{r:03d}"
            records.append(
                ReportRecord(
                    report_id,
                    title,
                    abstract,
                    tuple(stock_ids[s] for s in cited),
                    day,
                )
            )
            scores.append(SentimentScore(report_id, pos, neu, neg))
            for j, stock_idx in enumerate(cited):
                slots[(stock_idx, day_pos + 1)] = (
                    pos,
                    neg,
                    float(eps[r, j, 0]) * sd_range,
                    float(eps[r, j, 1]) * sd_ret,
                    float(eps[r, j, 2]) * sd_dvol,
                )
        prev_cited = today_cited

    # release dates per stock, for the citation-count regressors
    releases: dict[str, list[Date]] = {sid: [] for sid in stock_ids}
    for record in records:
        for sid in record.stock_codes:
            releases[sid].append(record.release_date)
    for dates in releases.values():
        dates.sort()

    def count_between(sid: str, lo: Date, hi: Date) -> int:
        dates = releases[sid]
        return bisect_right(dates, hi) - bisect_left(dates, lo)

    # --- bar chains ----------------------------------------------------------
    beta_r = [spec.betas["range"][k] for k in BETA_KEYS]
    beta_e = [spec.betas["ret_ex"][k] for k in BETA_KEYS]
    beta_d = [spec.betas["delta_volume"][k] for k in BETA_KEYS]
    bars: list[DailyBar] = []
    n_planted = 0
    n_clamped = 0

    for idx, sid in enumerate(stock_ids):
        ind_ret = index_logret[INDUSTRY_IDS[industry_of[idx]]]
        idio = rng.normal(0.0, spec.idio_vol, n_cal)
        nat_range = spec.base_range * np.exp(rng.normal(0.0, spec.range_spread, n_cal))
        zc = np.clip(rng.normal(0.0, 1.0, n_cal), -2.0, 2.0)
        vnoise = rng.normal(0.0, spec.volume_sd, n_cal)

        closes = [0.0] * n_cal
        vols = [0.0] * n_cal
        gk = [0.0] * n_cal
        vol_prefix = [0.0]

        for j in range(n_cal):
            slot = slots.get((idx, j))
            if slot is None:
                close = (
                    float(close0[idx])
                    if j == 0
                    else closes[j - 1] * math.exp(float(ind_ret[j]) + float(idio[j]))
                )
                target = float(nat_range[j])
                vol = float(vbase[idx]) * math.exp(float(vnoise[j]))
            else:
                n_planted += 1
                pos, neg, eps_r, eps_e, eps_d = slot
                s = j - 1
                day_t = cal_dates[j]
                num7 = count_between(sid, day_t - timedelta(days=7), day_t - timedelta(days=1))
                num90 = count_between(sid, day_t - timedelta(days=90), day_t - timedelta(days=1))
                mean60_s = (vol_prefix[s] - vol_prefix[s - 60]) / 60.0
                x = (
                    1.0,
                    pos,
                    neg,
                    gk[s] * 100.0,
                    math.log(vols[s] / mean60_s),
                    math.log(closes[s] / closes[s - 1]) - float(ind_ret[s]),
                    float(index_logret[SZSE][s]),
                    float(index_logret[SSE][s]),
                    float(index_logret[CSI500][s]),
                    float(vix_diff[s]),
                    num90 / 100.0,
                    num7 / 100.0,
                )
                y_range = math.fsum(b * v for b, v in zip(beta_r, x)) + eps_r
                y_ret = math.fsum(b * v for b, v in zip(beta_e, x)) + eps_e
                y_dvol = math.fsum(b * v for b, v in zip(beta_d, x)) + eps_d
                if y_range < RANGE_FLOOR_X100:
                    y_range = RANGE_FLOOR_X100
                    n_clamped += 1
                target = y_range / 100.0
                close = closes[j - 1] * math.exp(y_ret + float(ind_ret[j]))
                mean60_t = (vol_prefix[j] - vol_prefix[j - 60]) / 60.0
                vol = mean60_t * math.exp(y_dvol)

            # Bar around the close: overnight gap absorbs the return, the
            # intraday shape is solved from the range target (see module
            # docstring for the algebra).
            c = float(zc[j]) * 0.4 * math.sqrt(target)
            m = math.sqrt((target + 0.3925 * c * c) / 2.006)
            o = close / math.exp(c)
            h = o * math.exp(0.5 * c + m)
            l = o * math.exp(0.5 * c - m)

            closes[j] = close
            vols[j] = vol
            vol_prefix.append(vol_prefix[-1] + vol)
            gk[j] = _gk_from_prices(o, h, l, close)
            bars.append(
                DailyBar(sid, cal_dates[j], float(o), float(h), float(l), float(close), float(vol))
            )

    # --- assemble ------------------------------------------------------------
    index_rows: list[tuple[str, Date, float]] = []
    for index_id in (SSE, SZSE, CSI500) + INDUSTRY_IDS + (VIX,):
        levels = index_levels[index_id]
        for j in range(n_cal):
            index_rows.append((index_id, cal_dates[j], float(levels[j])))

    industry_rows = [
        (sid, INDUSTRY_IDS[industry_of[i]], SECTORS[industry_of[i]])
        for i, sid in enumerate(stock_ids)
    ]

    train_range = (
        cal_dates[spec.warmup_days],
        cal_dates[spec.warmup_days + spec.train_days - 1],
    )
    test_range = (
        cal_dates[spec.warmup_days + spec.train_days],
        cal_dates[spec.warmup_days + spec.n_days - 1],
    )

    truth = {
        "format_version": 1,
        "seed": spec.seed,
        "n_stocks": spec.n_stocks,
        "n_days": spec.n_days,
        "reports_per_day": spec.reports_per_day,
        "n_reports": len(records),
        "n_multi_stock_reports": n_multi,
        "n_planted_outcomes": n_planted,
        "n_range_targets_clamped": n_clamped,
        "betas": {k: dict(v) for k, v in spec.betas.items()},
        "noise": dict(spec.noise),
        "vix_mode": "diff",
        "train_range": [train_range[0].isoformat(), train_range[1].isoformat()],
        "test_range": [test_range[0].isoformat(), test_range[1].isoformat()],
    }

    return SynthDataset(
        records=records,
        scores=scores,
        bars=bars,
        index_rows=index_rows,
        industry_rows=industry_rows,
        calendar_dates=cal_dates,
        train_range=train_range,
        test_range=test_range,
        truth=truth,
    )


def write_dataset(dataset: SynthDataset, out_dir, seed: int = 0) -> dict[str, Path]:
    """Write all dataset files plus a ready-to-run config; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": out / "corpus.csv",
        "bars": out / "bars.csv",
        "indices": out / "indices.csv",
        "industry": out / "industry.csv",
        "calendar": out / "calendar.txt",
        "scores": out / "scores.csv",
        "truth": out / "truth.json",
        "config": out / "config.json",
    }

    serialize_corpus(dataset.records, paths["corpus"])

    with open(paths["bars"], "w", encoding="utf-8", newline="") as stream:
        stream.write("stock_id,date,open,high,low,close,volume\n")
        for b in dataset.bars:
            stream.write(
                f"{b.stock_id},{b.date.isoformat()},{b.open!r},{b.high!r},{b.low!r},{b.close!r},{b.volume!r}\n"
            )

    with open(paths["indices"], "w", encoding="utf-8", newline="") as stream:
        stream.write("index_id,date,level\n")
        for index_id, d, level in dataset.index_rows:
            stream.write(f"{index_id},{d.isoformat()},{level!r}\n")

    import csv as _csv

    with open(paths["industry"], "w", encoding="utf-8", newline="") as stream:
        writer = _csv.writer(stream, lineterminator="\n")
        writer.writerow(("stock_id", "industry_index_id", "sector_name"))
        writer.writerows(dataset.industry_rows)

    with open(paths["calendar"], "w", encoding="utf-8") as stream:
        stream.write("".join(d.isoformat() + "\n" for d in dataset.calendar_dates))

    write_scores(dataset.scores, paths["scores"])

    with open(paths["truth"], "w", encoding="utf-8") as stream:
        json.dump(dataset.truth, stream, indent=2)
        stream.write("\n")

    config = {
        "format_version": 1,
        "corpus": "corpus.csv",
        "bars": "bars.csv",
        "indices": "indices.csv",
        "industry": "industry.csv",
        "calendar": "calendar.txt",
        "scores": "scores.csv",
        "lexicon": None,
        "risk_warnings": None,
        "train_start": dataset.train_range[0].isoformat(),
        "train_end": dataset.train_range[1].isoformat(),
        "test_start": dataset.test_range[0].isoformat(),
        "test_end": dataset.test_range[1].isoformat(),
        "scorer": "external",
        "stars": "table3",
        "se": "classical",
        "ttest": "welch",
        "min_rows": 50,
        "vix_mode": "diff",
        "temperature": 1.0,
        "tail_fraction": 0.25,
        "max_error_rate": 0.1,
        "infer_calendar": False,
        "out": "out",
        "seed": seed,
    }
    with open(paths["config"], "w", encoding="utf-8") as stream:
        json.dump(config, stream, indent=2)
        stream.write("\n")

    return paths
