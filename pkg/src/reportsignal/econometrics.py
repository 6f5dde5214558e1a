"""Regression panel assembly, pooled OLS, and two-sample mean tests.

The panel has one row per (report, cited stock): sentiment scores and
market metrics measured on the release trading day, outcomes measured on
the next trading day. Presentation scaling lives here — intraday range
variance is multiplied by 100 and recommendation counts divided by 100 —
so coefficient magnitudes are comparable across tables while t-statistics
are unaffected.

OLS uses a QR decomposition (numerically stable orthogonal factorization)
with classical standard errors s^2 (X'X)^-1 by default and HC1 robust
errors behind a flag. Two-sided p-values come from the t-distribution CDF
evaluated through the regularized incomplete beta function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields as dataclass_fields
from datetime import date as Date
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betainc

from .corpus import CorpusIndex, ReportRecord
from .errors import (
    ArgumentError,
    CalendarRangeError,
    DataError,
    DomainError,
    GapError,
    HistoryError,
    MappingError,
    SchemaError,
    SingularityError,
)
from .labeling import NEGATIVE, POSITIVE
from .market import CSI500, MarketData, SSE, SZSE, VIX
from .metrics import (
    delta_volume,
    excess_return,
    garman_klass_range,
    label_window_return,
    recommendation_counts,
)
from .sentiment import SentimentScore, classify_majority

RANGE_SCALE = 100.0
NUM_SCALE = 1.0 / 100.0

# Regressor order of the main results table: constant, the two sentiment
# probabilities, lagged outcomes, market controls, citation counts.
REGRESSOR_NAMES = (
    "constant",
    "pos[t-1]",
    "neg[t-1]",
    "range[t-1]",
    "dvolume[t-1]",
    "ret_ex[t-1]",
    "szse[t-1]",
    "sse[t-1]",
    "csi500[t-1]",
    "vix[t-1]",
    "num90[t-1]",
    "num7[t-1]",
)

OUTCOME_NAMES = {"range": "range[t]", "ret_ex": "ret_ex[t]", "delta_volume": "dvolume[t]"}

# The fifteen named sectors of the industry robustness table; anything
# else is grouped under "Other".
NAMED_SECTORS = (
    "Material",
    "Telecom",
    "Real Estate",
    "Public Utilities",
    "Media",
    "Apparel",
    "Automobile",
    "Business Service",
    "Food, staples, retail",
    "Consumer Service",
    "Healthcare",
    "Bank",
    "Transport",
    "BioTech",
    "Capital Goods",
)
OTHER_SECTOR = "Other"


@dataclass(frozen=True)
class PanelRow:
    """One (report, stock) regression observation.

    Lagged fields are measured on the release trading day, outcome fields
    on the following trading day; range values are scaled by 100 and the
    citation counts by 1/100.
    """

    report_id: str
    stock_id: str
    outcome_date: Date
    pos_lag: float
    neg_lag: float
    range_lag: float
    retex_lag: float
    dvol_lag: float
    outcome_range: float
    outcome_retex: float
    outcome_dvol: float
    szse_lag: float
    sse_lag: float
    csi500_lag: float
    vix_lag: float
    num90_lag: float
    num7_lag: float

    def __post_init__(self):
        if self.pos_lag + self.neg_lag > 1.0 + 1e-9:
            raise DataError(
                f"row {self.report_id}/{self.stock_id}: pos+neg = {self.pos_lag + self.neg_lag}"
            )
        for name, value in self.__dict__.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise DataError(f"row {self.report_id}/{self.stock_id}: {name} not finite")


PANEL_HEADER = tuple(f.name for f in dataclass_fields(PanelRow))


@dataclass
class PanelBuildResult:
    rows: list[PanelRow]
    drops: dict[str, int]
    n_flagged_negative_range: int
    n_pairs: int

    @property
    def n_dropped(self) -> int:
        return sum(self.drops.values())


def build_panel(
    records: Iterable[ReportRecord],
    scores: Mapping[str, SentimentScore],
    market: MarketData,
    corpus_index: CorpusIndex,
    start: Date | None = None,
    end: Date | None = None,
    vix_mode: str = "diff",
) -> PanelBuildResult:
    """Assemble the regression panel from reports in [start, end].

    Every (report, cited stock) pair becomes one row; a report citing two
    stocks yields two rows sharing one score. Pairs missing any input —
    score, industry mapping, market observations, volume history — are
    dropped and tallied by reason, never imputed. An empty result is
    fatal.
    """
    calendar = market.calendar
    rows: list[PanelRow] = []
    drops: dict[str, int] = {}
    flagged = 0
    n_pairs = 0

    def drop(reason: str) -> None:
        drops[reason] = drops.get(reason, 0) + 1

    for record in records:
        if start is not None and record.release_date < start:
            continue
        if end is not None and record.release_date > end:
            continue
        score = scores.get(record.report_id)
        for stock_id in record.stock_codes:
            n_pairs += 1
            if score is None:
                drop("no score")
                continue
            try:
                s_day = calendar.align(record.release_date, "same-or-next")
            except CalendarRangeError:
                drop("release date beyond calendar")
                continue
            try:
                t_day = calendar.shift(s_day, 1)
            except CalendarRangeError:
                drop("no outcome trading day")
                continue
            try:
                range_lag = garman_klass_range(market.bars.bar(stock_id, s_day))
                retex_lag = excess_return(market, stock_id, s_day)
                dvol_lag = delta_volume(market, stock_id, s_day)
                outcome_range = garman_klass_range(market.bars.bar(stock_id, t_day))
                outcome_retex = excess_return(market, stock_id, t_day)
                outcome_dvol = delta_volume(market, stock_id, t_day)
                szse = market.indices.log_return(SZSE, s_day)
                sse = market.indices.log_return(SSE, s_day)
                csi500 = market.indices.log_return(CSI500, s_day)
                vix = market.indices.change(VIX, s_day, vix_mode)
            except MappingError:
                drop("no industry mapping")
                continue
            except HistoryError:
                drop("insufficient history")
                continue
            except (GapError, CalendarRangeError):
                drop("missing market data")
                continue
            except DomainError:
                drop("volume domain")
                continue
            num7, num90 = recommendation_counts(corpus_index, stock_id, t_day)
            if range_lag < 0.0 or outcome_range < 0.0:
                flagged += 1
            rows.append(
                PanelRow(
                    report_id=record.report_id,
                    stock_id=stock_id,
                    outcome_date=t_day,
                    pos_lag=score.pos,
                    neg_lag=score.neg,
                    range_lag=range_lag * RANGE_SCALE,
                    retex_lag=retex_lag,
                    dvol_lag=dvol_lag,
                    outcome_range=outcome_range * RANGE_SCALE,
                    outcome_retex=outcome_retex,
                    outcome_dvol=outcome_dvol,
                    szse_lag=szse,
                    sse_lag=sse,
                    csi500_lag=csi500,
                    vix_lag=vix,
                    num90_lag=num90 * NUM_SCALE,
                    num7_lag=num7 * NUM_SCALE,
                )
            )
    return PanelBuildResult(rows, drops, flagged, n_pairs)


def write_panel(rows: Iterable[PanelRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(PANEL_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.report_id,
                    row.stock_id,
                    row.outcome_date.isoformat(),
                ]
                + [repr(getattr(row, name)) for name in PANEL_HEADER[3:]]
            )


def read_panel(path) -> list[PanelRow]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as stream:
        reader = csv.reader(stream)
        header = tuple(next(reader))
        if header != PANEL_HEADER:
            raise SchemaError(f"{path}: bad panel header {header!r}")
        for raw in reader:
            out.append(
                PanelRow(
                    raw[0],
                    raw[1],
                    Date.fromisoformat(raw[2]),
                    *(float(x) for x in raw[3:]),
                )
            )
    return out


def student_t_sf2(t_stat: float, df: float) -> float:
    """Two-sided p-value P(|T| >= |t|) for Student's t with ``df`` dof.

    Uses the identity P(|T| >= t) = I_{df/(df+t^2)}(df/2, 1/2) where I is
    the regularized incomplete beta function.
    """
    if df <= 0.0:
        raise ArgumentError(f"degrees of freedom must be positive, got {df}")
    if t_stat == 0.0:
        return 1.0
    if math.isinf(t_stat):
        return 0.0
    x = df / (df + t_stat * t_stat)
    return float(betainc(df / 2.0, 0.5, x))


@dataclass
class RegressionFit:
    """OLS estimates for one outcome, aligned with ``regressors``."""

    name: str
    regressors: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    n_obs: int
    df_resid: int
    r_squared: float
    rss: float
    se_type: str

    def by_name(self, regressor: str) -> tuple[float, float, float, float]:
        """(coef, se, t, p) for one regressor name."""
        i = self.regressors.index(regressor)
        return (
            float(self.coef[i]),
            float(self.se[i]),
            float(self.t_stats[i]),
            float(self.p_values[i]),
        )


def ols_fit(
    design: np.ndarray,
    response: np.ndarray,
    regressors: Sequence[str] | None = None,
    name: str = "",
    se_type: str = "classical",
) -> RegressionFit:
    """Least squares via QR with classical or HC1 standard errors.

    Requires n > k and a full-column-rank design (checked against the R
    factor's diagonal with a size-scaled tolerance; offending columns are
    named in the error). t = coef/SE and two-sided p-values use n - k
    degrees of freedom.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if X.ndim != 2:
        raise ArgumentError(f"design must be 2-d, got shape {X.shape}")
    n, k = X.shape
    if y.shape != (n,):
        raise ArgumentError(f"response shape {y.shape} does not match design {X.shape}")
    if regressors is None:
        regressors = tuple(f"x{i}" for i in range(k))
    else:
        regressors = tuple(regressors)
        if len(regressors) != k:
            raise ArgumentError(f"{len(regressors)} names for {k} columns")
    if n <= k:
        raise ArgumentError(f"need more observations than parameters, got n={n}, k={k}")
    if se_type not in ("classical", "robust"):
        raise ArgumentError(f"unknown se_type {se_type!r}")

    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    tol = max(n, k) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    bad = [regressors[j] for j in range(k) if diag[j] <= tol]
    if bad:
        raise SingularityError(bad)

    qty = Q.T @ y
    coef = solve_triangular(R, qty)
    resid = y - X @ coef
    rss = float(resid @ resid)
    df_resid = n - k

    r_inv = solve_triangular(R, np.eye(k))
    xtx_inv = r_inv @ r_inv.T
    s2 = rss / df_resid
    if se_type == "classical":
        cov = s2 * xtx_inv
    else:
        # HC1: White sandwich with the n/(n-k) small-sample correction.
        meat = (X * (resid**2)[:, None]).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / df_resid)

    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0.0, coef / se, np.inf * np.sign(coef))
    p_values = np.array([student_t_sf2(float(t), df_resid) for t in t_stats])

    y_centered = y - y.mean()
    tss = float(y_centered @ y_centered)
    r_squared = 1.0 - rss / tss if tss > 0.0 else float("nan")

    return RegressionFit(
        name=name,
        regressors=regressors,
        coef=coef,
        se=se,
        t_stats=t_stats,
        p_values=p_values,
        n_obs=n,
        df_resid=df_resid,
        r_squared=r_squared,
        rss=rss,
        se_type=se_type,
    )


def panel_design(rows: Sequence[PanelRow]) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Design matrix in reporting order plus the three outcome vectors."""
    n = len(rows)
    X = np.empty((n, len(REGRESSOR_NAMES)))
    X[:, 0] = 1.0
    for i, row in enumerate(rows):
        X[i, 1] = row.pos_lag
        X[i, 2] = row.neg_lag
        X[i, 3] = row.range_lag
        X[i, 4] = row.dvol_lag
        X[i, 5] = row.retex_lag
        X[i, 6] = row.szse_lag
        X[i, 7] = row.sse_lag
        X[i, 8] = row.csi500_lag
        X[i, 9] = row.vix_lag
        X[i, 10] = row.num90_lag
        X[i, 11] = row.num7_lag
    outcomes = {
        "range": np.array([r.outcome_range for r in rows]),
        "ret_ex": np.array([r.outcome_retex for r in rows]),
        "delta_volume": np.array([r.outcome_dvol for r in rows]),
    }
    return X, outcomes


def run_pooled_regressions(
    rows: Sequence[PanelRow], se_type: str = "classical"
) -> dict[str, RegressionFit]:
    """The three pooled regressions: range, excess return, volume change."""
    if not rows:
        raise ArgumentError("empty panel")
    X, outcomes = panel_design(rows)
    return {
        outcome: ols_fit(X, y, REGRESSOR_NAMES, name=outcome, se_type=se_type)
        for outcome, y in outcomes.items()
    }


@dataclass
class SectorResult:
    sector: str
    n_rows: int
    fits: dict[str, RegressionFit] | None  # None when skipped


def canonical_sector(raw: str) -> str:
    return raw if raw in NAMED_SECTORS else OTHER_SECTOR


def run_industry_regressions(
    rows: Sequence[PanelRow],
    market: MarketData,
    min_rows: int = 50,
    se_type: str = "classical",
) -> list[SectorResult]:
    """Per-sector regressions; small or degenerate sectors are skipped.

    Sector membership comes from the industry map with unnamed sectors
    grouped as "Other"; the per-sector row counts always partition the
    panel. Sectors below ``min_rows`` — or whose subset design is
    singular — are reported as skipped rather than fit.
    """
    by_sector: dict[str, list[PanelRow]] = {}
    for row in rows:
        sector = canonical_sector(market.industry.sector(row.stock_id))
        by_sector.setdefault(sector, []).append(row)
    results = []
    for sector in list(NAMED_SECTORS) + [OTHER_SECTOR]:
        subset = by_sector.get(sector)
        if subset is None:
            continue
        if len(subset) < min_rows:
            results.append(SectorResult(sector, len(subset), None))
            continue
        try:
            fits = run_pooled_regressions(subset, se_type=se_type)
        except (SingularityError, ArgumentError):
            fits = None
        results.append(SectorResult(sector, len(subset), fits))
    return results


@dataclass
class MeanTestResult:
    """Two-sample difference-in-means test for one variable."""

    variable: str
    mean_a: float
    std_a: float
    n_a: int
    mean_b: float
    std_b: float
    n_b: int
    t_stat: float
    p_value: float
    df: float
    mode: str


def mean_difference_test(
    group_a: Sequence[float],
    group_b: Sequence[float],
    mode: str = "welch",
    variable: str = "",
) -> MeanTestResult:
    """Two-sample t-test of mean(A) - mean(B).

    'welch' (default) allows unequal variances and uses the
    Welch-Satterthwaite degrees of freedom

        df = (va/na + vb/nb)^2 / [(va/na)^2/(na-1) + (vb/nb)^2/(nb-1)];

    'pooled' assumes equal variances with df = na + nb - 2. Both groups
    need at least two observations. Identical group means give t = 0
    exactly; swapping the groups negates t.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ArgumentError(f"each group needs >= 2 values, got {na} and {nb}")
    if mode not in ("welch", "pooled"):
        raise ArgumentError(f"unknown t-test mode {mode!r}")
    mean_a, mean_b = float(a.mean()), float(b.mean())
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    diff = mean_a - mean_b
    if mode == "welch":
        qa, qb = va / na, vb / nb
        se = math.sqrt(qa + qb)
        if qa + qb > 0.0:
            df = (qa + qb) ** 2 / (qa * qa / (na - 1) + qb * qb / (nb - 1))
        else:
            df = float(na + nb - 2)
    else:
        pooled_var = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
        se = math.sqrt(pooled_var * (1.0 / na + 1.0 / nb))
        df = float(na + nb - 2)
    if diff == 0.0:
        t_stat = 0.0
    elif se == 0.0:
        t_stat = math.inf if diff > 0 else -math.inf
    else:
        t_stat = diff / se
    p_value = student_t_sf2(t_stat, df)
    return MeanTestResult(variable, mean_a, float(math.sqrt(va)), na, mean_b, float(math.sqrt(vb)), nb, t_stat, p_value, df, mode)


# Variables of the group-comparison table: excess returns around the
# release day, the three-day average, then volume change and range.
MAJORITY_VARIABLES = (
    "ret_ex[t]",
    "ret_ex[t-1]",
    "ret_ex[t+1]",
    "ret_ex[3day]",
    "dvolume",
    "range",
)


@dataclass(frozen=True)
class MajoritySample:
    """Release-day measurements for one (report, stock), with its
    majority-rule class; here t is the release trading day itself."""

    report_id: str
    stock_id: str
    majority_class: str
    ret_ex_t: float
    ret_ex_prev: float
    ret_ex_next: float
    ret_ex_3day: float
    dvolume: float
    range_x100: float

    def variable(self, name: str) -> float:
        return {
            "ret_ex[t]": self.ret_ex_t,
            "ret_ex[t-1]": self.ret_ex_prev,
            "ret_ex[t+1]": self.ret_ex_next,
            "ret_ex[3day]": self.ret_ex_3day,
            "dvolume": self.dvolume,
            "range": self.range_x100,
        }[name]


def build_majority_samples(
    records: Iterable[ReportRecord],
    tokens_by_report: Mapping[str, Sequence[str]],
    lexicon,
    market: MarketData,
    start: Date | None = None,
    end: Date | None = None,
) -> tuple[list[MajoritySample], dict[str, int]]:
    """Join majority classes to release-day metrics for each (report, stock).

    ``tokens_by_report`` holds the segmented cleaned text; pairs with
    missing market data are dropped and tallied, like panel rows.
    """
    calendar = market.calendar
    samples: list[MajoritySample] = []
    drops: dict[str, int] = {}

    def drop(reason: str) -> None:
        drops[reason] = drops.get(reason, 0) + 1

    for record in records:
        if start is not None and record.release_date < start:
            continue
        if end is not None and record.release_date > end:
            continue
        tokens = tokens_by_report.get(record.report_id)
        if tokens is None:
            drop("no tokens")
            continue
        cls = classify_majority(tokens, lexicon)
        for stock_id in record.stock_codes:
            try:
                s_day = calendar.align(record.release_date, "same-or-next")
                prev_day = calendar.shift(s_day, -1)
                next_day = calendar.shift(s_day, 1)
                sample = MajoritySample(
                    report_id=record.report_id,
                    stock_id=stock_id,
                    majority_class=cls,
                    ret_ex_t=excess_return(market, stock_id, s_day),
                    ret_ex_prev=excess_return(market, stock_id, prev_day),
                    ret_ex_next=excess_return(market, stock_id, next_day),
                    ret_ex_3day=label_window_return(market, stock_id, s_day),
                    dvolume=delta_volume(market, stock_id, s_day),
                    range_x100=garman_klass_range(market.bars.bar(stock_id, s_day)) * RANGE_SCALE,
                )
            except MappingError:
                drop("no industry mapping")
                continue
            except HistoryError:
                drop("insufficient history")
                continue
            except (GapError, CalendarRangeError):
                drop("missing market data")
                continue
            except DomainError:
                drop("volume domain")
                continue
            samples.append(sample)
    return samples, drops


def majority_group_tests(
    samples: Sequence[MajoritySample], mode: str = "welch"
) -> list[MeanTestResult | None]:
    """Positive-group vs negative-group tests, one per table variable.

    Entries are None (untestable) when either group has fewer than two
    samples; neutral-class samples never participate.
    """
    group_a = [s for s in samples if s.majority_class == POSITIVE]
    group_b = [s for s in samples if s.majority_class == NEGATIVE]
    results: list[MeanTestResult | None] = []
    for variable in MAJORITY_VARIABLES:
        if len(group_a) < 2 or len(group_b) < 2:
            results.append(None)
            continue
        results.append(
            mean_difference_test(
                [s.variable(variable) for s in group_a],
                [s.variable(variable) for s in group_b],
                mode=mode,
                variable=variable,
            )
        )
    return results
