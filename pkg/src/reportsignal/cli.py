"""Command-line pipeline driver.

Verbs:
  synth    generate a synthetic dataset with planted effects
  ingest   parse and validate all inputs, persist a cleaned cache
  label    rank-label the training-range reports by market reaction
  score    produce sentiment scores (lexicon scorer or external file)
  analyze  build the panel, fit the regressions, run the group tests

Every verb is also importable as a function taking a RunConfig, so the
test-suite and library users can drive stages without a subprocess.
Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from dataclasses import asdict
from datetime import date as Date, timedelta
from pathlib import Path

from .config import (
    RunConfig,
    VALID_SCORERS,
    VALID_SE,
    VALID_STARS,
    VALID_TTEST,
    load_config,
)
from .corpus import CorpusIndex, load_risk_warning_patterns, parse_corpus, prepare_report, serialize_corpus
from .econometrics import (
    build_majority_samples,
    build_panel,
    majority_group_tests,
    run_industry_regressions,
    run_pooled_regressions,
    write_panel,
)
from .errors import (
    CalendarRangeError,
    ConfigurationError,
    DataError,
    DomainError,
    GapError,
    HistoryError,
    MappingError,
    NumericalError,
    PipelineError,
)
from .labeling import NEGATIVE, NEUTRAL, POSITIVE, assign_labels, write_labels
from .market import TradingCalendar, load_market
from .metrics import LONG_COUNT_WINDOW, label_window_return
from .reporting import (
    format_industry_table,
    format_mean_test_table,
    format_regression_table,
    write_daily_sentiment,
    write_gnuplot_script,
    write_industry_csv,
    write_mean_test_csv,
    write_regression_csv,
)
from .sentiment import (
    daily_average_sentiment,
    lexicon_score,
    load_external_scores,
    load_lexicon,
    write_scores,
)
from .synthkit import SynthSpec, generate, write_dataset

REPORT_FORMAT_VERSION = 1
_REJECT_CAP = 1000  # rejects listed per report file; counts stay exact


def _ensure_out(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(payload, stream, indent=2, sort_keys=True)
        stream.write("\n")


def _reject_payload(rejects) -> dict:
    listed = [asdict(r) for r in rejects[:_REJECT_CAP]]
    return {
        "n_rejects": len(rejects),
        "rejects": listed,
        "truncated": len(rejects) > _REJECT_CAP,
    }


def _load_inputs(config: RunConfig):
    parse = parse_corpus(config.corpus, max_error_rate=config.max_error_rate)
    loaded = load_market(
        config.bars,
        config.indices,
        config.industry,
        calendar_path=config.calendar,
        infer_calendar=config.infer_calendar,
    )
    return parse, loaded


def firewall_fence(calendar: TradingCalendar, test_start: Date) -> Date:
    """Earliest market date the analyze stage may touch.

    The deepest look-back from any test-range row is 90 calendar days of
    report counting followed by 60 trading days of volume history; reads
    below that point can only concern the training period.
    """
    try:
        anchor = calendar.align(test_start - timedelta(days=LONG_COUNT_WINDOW), "same-or-next")
        return calendar.shift(anchor, -60)
    except CalendarRangeError:
        return calendar.first()


# ---------------------------------------------------------------------------
# verbs


def cmd_synth(out_dir: Path, seed: int) -> int:
    spec = SynthSpec(seed=seed)
    dataset = generate(spec)
    write_dataset(dataset, out_dir, seed=seed)
    print(
        f"synth: seed {seed}: wrote {len(dataset.records)} reports, "
        f"{len(dataset.bars)} bars, {len(dataset.calendar_dates)} trading days -> {out_dir}"
    )
    return 0


def cmd_ingest(config: RunConfig) -> int:
    out = _ensure_out(config)
    parse, loaded = _load_inputs(config)
    market = loaded.market
    market.calendar.require_coverage(
        config.train_start, config.test_end, lookback_days=LONG_COUNT_WINDOW, post_trading_days=1
    )

    cache = out / "cache"
    cache.mkdir(parents=True, exist_ok=True)
    # The corpus cache is canonical (rejected rows gone, fields re-escaped);
    # market files are validated here but cached verbatim, their loaders
    # re-apply the same row filters deterministically.
    serialize_corpus(parse.records, cache / "corpus.csv")
    shutil.copyfile(config.bars, cache / "bars.csv")
    shutil.copyfile(config.indices, cache / "indices.csv")
    shutil.copyfile(config.industry, cache / "industry.csv")
    with open(cache / "calendar.txt", "w", encoding="utf-8") as stream:
        stream.write("".join(d.isoformat() + "\n" for d in market.calendar.dates))

    report = {
        "format_version": REPORT_FORMAT_VERSION,
        "corpus": {
            "n_records": len(parse.records),
            "error_rate": parse.error_rate,
            **_reject_payload(parse.rejects),
        },
        "bars": {"n_rows": loaded.n_bars, **_reject_payload(loaded.bar_rejects)},
        "indices": {"n_rows": loaded.n_index_rows, **_reject_payload(loaded.index_rejects)},
        "calendar": {
            "first": market.calendar.first().isoformat(),
            "last": market.calendar.last().isoformat(),
            "n_days": len(market.calendar),
        },
        "train_range": [config.train_start.isoformat(), config.train_end.isoformat()],
        "test_range": [config.test_start.isoformat(), config.test_end.isoformat()],
    }
    _write_json(report, out / "ingest_report.json")
    print(
        f"ingest: {len(parse.records)} reports ({len(parse.rejects)} rejected), "
        f"{loaded.n_bars} bars ({len(loaded.bar_rejects)} rejected), "
        f"{loaded.n_index_rows} index rows ({len(loaded.index_rejects)} rejected)"
    )
    return 0


def cmd_label(config: RunConfig) -> int:
    out = _ensure_out(config)
    parse, loaded = _load_inputs(config)
    market = loaded.market

    pool: list[tuple[str, str, float]] = []
    drops: dict[str, int] = {}

    def drop(reason: str) -> None:
        drops[reason] = drops.get(reason, 0) + 1

    for record in parse.records:
        if not (config.train_start <= record.release_date <= config.train_end):
            continue
        for stock_id in record.stock_codes:
            try:
                release_day = market.calendar.align(record.release_date, "same-or-next")
            except CalendarRangeError:
                drop("release date beyond calendar")
                continue
            try:
                window_return = label_window_return(market, stock_id, release_day)
            except CalendarRangeError:
                drop("label window outside calendar")
            except MappingError:
                drop("no industry mapping")
            except (GapError, HistoryError):
                drop("missing market data")
            except DomainError:
                drop("bad market data")
            else:
                pool.append((record.report_id, stock_id, window_return))

    if not pool:
        raise DataError("labeling pool is empty: no training-range pair survived")
    labeled = assign_labels(pool)
    write_labels(labeled, out / "labels.csv")

    counts = {POSITIVE: 0, NEUTRAL: 0, NEGATIVE: 0}
    for row in labeled:
        counts[row.label] += 1
    report = {
        "format_version": REPORT_FORMAT_VERSION,
        "n_pool": len(labeled),
        "counts": counts,
        "drops": drops,
        "train_range": [config.train_start.isoformat(), config.train_end.isoformat()],
    }
    _write_json(report, out / "label_report.json")
    print(
        f"label: {len(labeled)} pairs labeled "
        f"({counts[POSITIVE]} positive / {counts[NEUTRAL]} neutral / {counts[NEGATIVE]} negative), "
        f"{sum(drops.values())} dropped"
    )
    return 0


def _loaded_lexicon(config: RunConfig):
    lexicon = load_lexicon(config.lexicon)
    if config.scorer == "lexicon" and len(lexicon) == 0:
        raise ConfigurationError(f"lexicon file {config.lexicon} has no entries")
    return lexicon


def cmd_score(config: RunConfig) -> int:
    out = _ensure_out(config)
    parse = parse_corpus(config.corpus, max_error_rate=config.max_error_rate)

    if config.scorer == "lexicon":
        lexicon = _loaded_lexicon(config)
        patterns = load_risk_warning_patterns(config.risk_warnings)
        dictionary = lexicon.segment_dictionary()
        scores = []
        for record in parse.records:
            cleaned = prepare_report(record, dictionary, patterns, config.tail_fraction)
            scores.append(
                lexicon_score(cleaned.tokens, lexicon, config.temperature, record.report_id)
            )
        rejects = []
    else:
        if config.scores is None:
            raise ConfigurationError("scorer 'external' requires a scores path in the config")
        known = {record.report_id for record in parse.records}
        scores, rejects = load_external_scores(
            config.scores, known, max_error_rate=config.max_error_rate
        )

    write_scores(scores, out / "scores.csv")
    report = {
        "format_version": REPORT_FORMAT_VERSION,
        "scorer": config.scorer,
        "n_scored": len(scores),
        **_reject_payload(rejects),
    }
    _write_json(report, out / "score_report.json")
    print(f"score: {len(scores)} reports scored via {config.scorer} ({len(rejects)} rejected)")
    return 0


def cmd_analyze(config: RunConfig) -> int:
    out = _ensure_out(config)
    parse, loaded = _load_inputs(config)
    market = loaded.market
    market.calendar.require_coverage(
        config.test_start, config.test_end, lookback_days=LONG_COUNT_WINDOW, post_trading_days=1
    )
    fence = firewall_fence(market.calendar, config.test_start)
    market.set_fence(fence)

    corpus_index = CorpusIndex(parse.records)
    test_records = [
        r for r in parse.records if config.test_start <= r.release_date <= config.test_end
    ]

    lexicon = _loaded_lexicon(config)
    patterns = load_risk_warning_patterns(config.risk_warnings)
    dictionary = lexicon.segment_dictionary() if len(lexicon) else None
    tokens_by_report = {}
    if dictionary is not None:
        for record in test_records:
            cleaned = prepare_report(record, dictionary, patterns, config.tail_fraction)
            tokens_by_report[record.report_id] = cleaned.tokens

    score_rejects = []
    if config.scorer == "external":
        if config.scores is None:
            raise ConfigurationError("scorer 'external' requires a scores path in the config")
        known = {record.report_id for record in parse.records}
        accepted, score_rejects = load_external_scores(
            config.scores, known, max_error_rate=config.max_error_rate
        )
        scores = {score.report_id: score for score in accepted}
    else:
        scores = {
            report_id: lexicon_score(tokens, lexicon, config.temperature, report_id)
            for report_id, tokens in tokens_by_report.items()
        }

    panel = build_panel(
        parse.records,
        scores,
        market,
        corpus_index,
        start=config.test_start,
        end=config.test_end,
        vix_mode=config.vix_mode,
    )
    if not panel.rows:
        raise DataError(
            f"empty panel: all {panel.n_pairs} test-range pairs dropped ({panel.drops})"
        )

    fits = run_pooled_regressions(panel.rows, se_type=config.se)
    sectors = run_industry_regressions(
        panel.rows, market, min_rows=config.min_rows, se_type=config.se
    )
    samples, majority_drops = build_majority_samples(
        test_records,
        tokens_by_report,
        lexicon,
        market,
        start=config.test_start,
        end=config.test_end,
    )
    tests = majority_group_tests(samples, mode=config.ttest)

    series_entries = []
    n_series_skipped = 0
    for record in test_records:
        score = scores.get(record.report_id)
        for _stock_id in record.stock_codes:
            if score is None:
                n_series_skipped += 1
                continue
            try:
                market.calendar.align(record.release_date, "same-or-next")
            except CalendarRangeError:
                n_series_skipped += 1
                continue
            series_entries.append((record.release_date, score))
    series = daily_average_sentiment(series_entries)

    write_panel(panel.rows, out / "panel.csv")
    regression_text = format_regression_table(
        fits,
        stars=config.stars,
        title=f"Pooled regressions ({config.se} standard errors)",
    )
    (out / "regressions.txt").write_text(regression_text, encoding="utf-8")
    write_regression_csv(fits, out / "regressions.csv", stars=config.stars)
    industry_text = format_industry_table(sectors, stars="table4", min_rows=config.min_rows)
    (out / "industry.txt").write_text(industry_text, encoding="utf-8")
    write_industry_csv(sectors, out / "industry.csv", stars="table4")
    mean_text = format_mean_test_table(tests, stars=config.stars)
    (out / "mean_tests.txt").write_text(mean_text, encoding="utf-8")
    write_mean_test_csv(tests, out / "mean_tests.csv", stars=config.stars)
    write_daily_sentiment(series, out / "daily_sentiment.dat")
    write_gnuplot_script("daily_sentiment.dat", out / "daily_sentiment.gp")

    majority_counts = {POSITIVE: 0, NEUTRAL: 0, NEGATIVE: 0}
    for sample in samples:
        majority_counts[sample.majority_class] += 1
    report = {
        "format_version": REPORT_FORMAT_VERSION,
        "fence": fence.isoformat(),
        "options": {
            "scorer": config.scorer,
            "stars": config.stars,
            "se": config.se,
            "ttest": config.ttest,
            "vix_mode": config.vix_mode,
            "min_rows": config.min_rows,
            "temperature": config.temperature,
            "tail_fraction": config.tail_fraction,
        },
        "panel": {
            "n_pairs": panel.n_pairs,
            "n_rows": len(panel.rows),
            "n_dropped": panel.n_dropped,
            "drops": panel.drops,
            "n_flagged_negative_range": panel.n_flagged_negative_range,
        },
        "majority": {
            "n_samples": len(samples),
            "counts": majority_counts,
            "drops": majority_drops,
        },
        "scores": {"n_available": len(scores), **_reject_payload(score_rejects)},
        "daily_series": {
            "n_days": len(series),
            "n_entries": len(series_entries),
            "n_skipped": n_series_skipped,
        },
        "test_range": [config.test_start.isoformat(), config.test_end.isoformat()],
    }
    _write_json(report, out / "analyze_report.json")

    sys.stdout.write(regression_text + "\n" + industry_text + "\n" + mean_text)
    print(
        f"analyze: {len(panel.rows)} panel rows ({panel.n_dropped} dropped), "
        f"{len(samples)} majority samples, outputs in {out}"
    )
    return 0


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    """Usage errors map to the configuration-error exit code."""

    def error(self, message):
        raise ConfigurationError(message)


def _add_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="run configuration JSON file")
    parser.add_argument("--out", type=Path, help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="generator seed (overrides config)")
    parser.add_argument("--scorer", choices=VALID_SCORERS, help="sentiment scorer (overrides config)")
    parser.add_argument("--stars", choices=VALID_STARS, help="star-threshold preset (overrides config)")
    parser.add_argument("--se", choices=VALID_SE, help="standard-error type (overrides config)")
    parser.add_argument("--ttest", choices=VALID_TTEST, help="mean-test statistic (overrides config)")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.config is None:
        raise ConfigurationError(f"{args.command} requires --config <file>")
    config = load_config(args.config)
    if args.out is not None:
        config.out = args.out
    if args.seed is not None:
        config.seed = args.seed
    if args.scorer is not None:
        config.scorer = args.scorer
    if args.stars is not None:
        config.stars = args.stars
    if args.se is not None:
        config.se = args.se
    if args.ttest is not None:
        config.ttest = args.ttest
    config.validate()
    config.check_input_paths()
    return config


def main(argv=None) -> int:
    parser = _Parser(
        prog="reportsignal",
        description="Analyst-report sentiment and market-reaction pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for verb, text in (
        ("synth", "generate a synthetic dataset with planted effects"),
        ("ingest", "validate inputs and persist a cleaned cache"),
        ("label", "rank-label training-range reports by market reaction"),
        ("score", "produce sentiment scores for the corpus"),
        ("analyze", "build the panel, run regressions and group tests"),
    ):
        _add_flags(sub.add_parser(verb, help=text))

    try:
        args = parser.parse_args(argv)
        if args.command == "synth":
            seed = args.seed
            out = args.out
            if args.config is not None:
                loaded = load_config(args.config)
                seed = seed if seed is not None else loaded.seed
                out = out if out is not None else loaded.out
            return cmd_synth(out if out is not None else Path("synth-data"),
                             seed if seed is not None else 0)
        config = _resolve_config(args)
        handler = {
            "ingest": cmd_ingest,
            "label": cmd_label,
            "score": cmd_score,
            "analyze": cmd_analyze,
        }[args.command]
        return handler(config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
