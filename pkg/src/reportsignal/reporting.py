"""Human-readable and machine-readable rendering of analysis results.

Every analysis artifact is emitted twice: a fixed-width text table meant
for reading (coefficient rows with significance stars, t-statistics in
parentheses underneath), and a delimited file with full-precision values
meant for diffing and downstream tooling. Significance stars come in two
presets because the source tables use different thresholds.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

from .econometrics import (
    MAJORITY_VARIABLES,
    MeanTestResult,
    OUTCOME_NAMES,
    REGRESSOR_NAMES,
    RegressionFit,
    SectorResult,
)
from .errors import ConfigurationError

# Ascending p-value thresholds, strongest marker first; the first
# threshold that p falls under wins.
STAR_PRESETS: dict[str, tuple[tuple[float, str], ...]] = {
    "table3": ((0.001, "***"), (0.01, "**"), (0.05, "*")),
    "table4": ((0.01, "***"), (0.05, "**"), (0.1, "*")),
}

OUTCOME_ORDER = ("range", "ret_ex", "delta_volume")

REGRESSION_CSV_HEADER = (
    "outcome",
    "regressor",
    "coef",
    "se",
    "t_stat",
    "p_value",
    "stars",
    "n_obs",
    "r_squared",
)

INDUSTRY_CSV_HEADER = ("sector", "n_rows", "status") + REGRESSION_CSV_HEADER

MEAN_TEST_CSV_HEADER = (
    "variable",
    "mean_pos",
    "sd_pos",
    "n_pos",
    "mean_neg",
    "sd_neg",
    "n_neg",
    "diff",
    "t_stat",
    "p_value",
    "df",
    "stars",
    "mode",
)


def star_preset(name: str) -> tuple[tuple[float, str], ...]:
    try:
        return STAR_PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown star preset {name!r}; expected one of {sorted(STAR_PRESETS)}"
        ) from None


def star_marker(p_value: float, preset: Sequence[tuple[float, str]]) -> str:
    """Return the marker of the tightest threshold that p_value beats."""
    for threshold, marker in preset:
        if p_value < threshold:
            return marker
    return ""


def star_legend(preset: Sequence[tuple[float, str]]) -> str:
    parts = [f"{marker} p-value < {threshold:g}" for threshold, marker in reversed(list(preset))]
    return ", ".join(parts)


def _fmt(value: float, spec: str) -> str:
    return format(value, spec)


def _cell(text: str, width: int) -> str:
    """Right-justify, but keep one separating space when the text overflows."""
    return text.rjust(width) if len(text) < width else " " + text


def format_regression_table(
    fits: dict[str, RegressionFit],
    stars: str = "table3",
    title: str = "Pooled regressions",
) -> str:
    """Fixed-width table: one column per outcome, coefficient row with
    stars followed by a parenthesized t-statistic row per regressor."""
    preset = star_preset(stars)
    outcomes = [key for key in OUTCOME_ORDER if key in fits]
    if not outcomes:
        raise ConfigurationError("no fits to format")

    name_w = max(len(n) for n in REGRESSOR_NAMES + ("Observations", "R-squared")) + 2
    col_w = 16
    header_cells = [OUTCOME_NAMES[key] for key in outcomes]
    lines = [title]
    width = name_w + col_w * len(outcomes)
    lines.append("=" * width)
    lines.append("".ljust(name_w) + "".join(_cell(h, col_w) for h in header_cells))
    lines.append("-" * width)

    reference = fits[outcomes[0]]
    for i, regressor in enumerate(reference.regressors):
        coef_cells = []
        t_cells = []
        for key in outcomes:
            fit = fits[key]
            marker = star_marker(fit.p_values[i], preset)
            coef_cells.append(_cell(_fmt(fit.coef[i], ".4f") + marker, col_w))
            t_cells.append(_cell(f"({_fmt(fit.t_stats[i], '.3f')})", col_w))
        lines.append(regressor.ljust(name_w) + "".join(coef_cells))
        lines.append("".ljust(name_w) + "".join(t_cells))

    lines.append("-" * width)
    obs_cells = [_cell(str(fits[key].n_obs), col_w) for key in outcomes]
    r2_cells = [_cell(_fmt(fits[key].r_squared, ".3f"), col_w) for key in outcomes]
    lines.append("Observations".ljust(name_w) + "".join(obs_cells))
    lines.append("R-squared".ljust(name_w) + "".join(r2_cells))
    lines.append("-" * width)
    lines.append(star_legend(preset))
    return "\n".join(lines) + "\n"


def regression_records(
    fits: dict[str, RegressionFit], stars: str = "table3"
) -> list[tuple]:
    """Full-precision rows for the machine-readable export."""
    preset = star_preset(stars)
    rows = []
    for key in OUTCOME_ORDER:
        if key not in fits:
            continue
        fit = fits[key]
        for i, regressor in enumerate(fit.regressors):
            rows.append(
                (
                    OUTCOME_NAMES[key],
                    regressor,
                    repr(float(fit.coef[i])),
                    repr(float(fit.se[i])),
                    repr(float(fit.t_stats[i])),
                    repr(float(fit.p_values[i])),
                    star_marker(fit.p_values[i], preset),
                    fit.n_obs,
                    repr(float(fit.r_squared)),
                )
            )
    return rows


def write_regression_csv(fits: dict[str, RegressionFit], path, stars: str = "table3") -> None:
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(REGRESSION_CSV_HEADER)
        writer.writerows(regression_records(fits, stars))


def format_industry_table(
    results: Iterable[SectorResult],
    stars: str = "table4",
    min_rows: int = 50,
) -> str:
    """Sector-by-sector sentiment coefficients: pos and neg columns per
    outcome, two lines per fitted sector (coefficients, then t-stats)."""
    preset = star_preset(stars)
    columns = [
        (key, regressor)
        for key in OUTCOME_ORDER
        for regressor in ("pos[t-1]", "neg[t-1]")
    ]
    name_w = 22
    col_w = 16
    width = name_w + 6 + col_w * len(columns)
    lines = ["Industry-subset regressions"]
    lines.append("=" * width)
    head = "Sector".ljust(name_w) + "n".rjust(6)
    for key, regressor in columns:
        short = "pos" if regressor.startswith("pos") else "neg"
        head += _cell(f"{short}:{OUTCOME_NAMES[key]}", col_w)
    lines.append(head)
    lines.append("-" * width)

    for result in results:
        if result.fits is None:
            lines.append(
                result.sector.ljust(name_w)
                + str(result.n_rows).rjust(6)
                + f"  skipped (n={result.n_rows} < min_rows={min_rows})"
            )
            continue
        coef_cells = []
        t_cells = []
        for key, regressor in columns:
            fit = result.fits[key]
            i = fit.regressors.index(regressor)
            marker = star_marker(fit.p_values[i], preset)
            coef_cells.append(_cell(_fmt(fit.coef[i], ".4f") + marker, col_w))
            t_cells.append(_cell(f"({_fmt(fit.t_stats[i], '.3f')})", col_w))
        lines.append(result.sector.ljust(name_w) + str(result.n_rows).rjust(6) + "".join(coef_cells))
        lines.append("".ljust(name_w + 6) + "".join(t_cells))

    lines.append("-" * width)
    lines.append(star_legend(preset))
    return "\n".join(lines) + "\n"


def industry_records(results: Iterable[SectorResult], stars: str = "table4") -> list[tuple]:
    preset = star_preset(stars)
    rows = []
    for result in results:
        if result.fits is None:
            rows.append(
                (result.sector, result.n_rows, "skipped", "", "", "", "", "", "", "", "", "")
            )
            continue
        for key in OUTCOME_ORDER:
            fit = result.fits[key]
            for i, regressor in enumerate(fit.regressors):
                rows.append(
                    (
                        result.sector,
                        result.n_rows,
                        "fitted",
                        OUTCOME_NAMES[key],
                        regressor,
                        repr(float(fit.coef[i])),
                        repr(float(fit.se[i])),
                        repr(float(fit.t_stats[i])),
                        repr(float(fit.p_values[i])),
                        star_marker(fit.p_values[i], preset),
                        fit.n_obs,
                        repr(float(fit.r_squared)),
                    )
                )
    return rows


def write_industry_csv(results: Iterable[SectorResult], path, stars: str = "table4") -> None:
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(INDUSTRY_CSV_HEADER)
        writer.writerows(industry_records(results, stars))


def format_mean_test_table(
    results: Sequence[MeanTestResult | None],
    stars: str = "table3",
) -> str:
    """One row per variable: group means (sd, n), difference, t with stars."""
    preset = star_preset(stars)
    name_w = 14
    lines = ["Group mean comparison: majority-positive vs majority-negative reports"]
    header = (
        "variable".ljust(name_w)
        + "mean(pos)".rjust(12)
        + "sd(pos)".rjust(10)
        + "n(pos)".rjust(8)
        + "mean(neg)".rjust(12)
        + "sd(neg)".rjust(10)
        + "n(neg)".rjust(8)
        + "diff".rjust(12)
        + "t-stat".rjust(12)
    )
    width = len(header)
    lines.append("=" * width)
    lines.append(header)
    lines.append("-" * width)
    for variable, result in zip(MAJORITY_VARIABLES, results):
        if result is None:
            lines.append(variable.ljust(name_w) + "  skipped (a group has fewer than 2 rows)")
            continue
        marker = star_marker(result.p_value, preset)
        lines.append(
            variable.ljust(name_w)
            + _fmt(result.mean_a, ".4f").rjust(12)
            + _fmt(result.std_a, ".4f").rjust(10)
            + str(result.n_a).rjust(8)
            + _fmt(result.mean_b, ".4f").rjust(12)
            + _fmt(result.std_b, ".4f").rjust(10)
            + str(result.n_b).rjust(8)
            + _fmt(result.mean_a - result.mean_b, ".4f").rjust(12)
            + (_fmt(result.t_stat, ".3f") + marker).rjust(12)
        )
    lines.append("-" * width)
    lines.append(star_legend(preset))
    return "\n".join(lines) + "\n"


def mean_test_records(
    results: Sequence[MeanTestResult | None], stars: str = "table3"
) -> list[tuple]:
    preset = star_preset(stars)
    rows = []
    for variable, result in zip(MAJORITY_VARIABLES, results):
        if result is None:
            rows.append((variable,) + ("",) * (len(MEAN_TEST_CSV_HEADER) - 1))
            continue
        rows.append(
            (
                variable,
                repr(float(result.mean_a)),
                repr(float(result.std_a)),
                result.n_a,
                repr(float(result.mean_b)),
                repr(float(result.std_b)),
                result.n_b,
                repr(float(result.mean_a - result.mean_b)),
                repr(float(result.t_stat)),
                repr(float(result.p_value)),
                repr(float(result.df)),
                star_marker(result.p_value, preset),
                result.mode,
            )
        )
    return rows


def write_mean_test_csv(
    results: Sequence[MeanTestResult | None], path, stars: str = "table3"
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(MEAN_TEST_CSV_HEADER)
        writer.writerows(mean_test_records(results, stars))


def write_daily_sentiment(series, path) -> None:
    """Whitespace-delimited plot data: date, mean pos/neu/neg, row count."""
    with open(path, "w", encoding="utf-8") as stream:
        stream.write("# date mean_pos mean_neu mean_neg n_rows\n")
        for day in series:
            stream.write(
                f"{day.date.isoformat()} {day.mean_pos!r} {day.mean_neu!r} "
                f"{day.mean_neg!r} {day.n_rows}\n"
            )


def write_gnuplot_script(data_filename: str, path) -> None:
    """A minimal gnuplot driver for the daily sentiment series."""
    script = (
        "set title 'Daily average sentiment'\n"
        "set xdata time\n"
        "set timefmt '%Y-%m-%d'\n"
        "set format x '%Y-%m'\n"
        "set ylabel 'mean probability'\n"
        "set key outside\n"
        f"plot '{data_filename}' using 1:2 with lines title 'positive', \\\n"
        f"     '{data_filename}' using 1:3 with lines title 'neutral', \\\n"
        f"     '{data_filename}' using 1:4 with lines title 'negative'\n"
    )
    with open(path, "w", encoding="utf-8") as stream:
        stream.write(script)
