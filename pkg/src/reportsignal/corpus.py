"""Analyst-report corpus: parsing, cleaning, and dictionary segmentation.

Corpus files are UTF-8 CSV with the exact header

    report_id,title,abstract,stock_codes,release_date

where ``stock_codes`` holds one or more exchange codes joined by ``;``
(e.g. ``600519.SH;000001.SZ``) and ``release_date`` is ISO ``YYYY-MM-DD``.
Parsing is strict about the header (fatal) and lenient about rows: bad
rows are collected as rejects and the parse only fails once the reject
share exceeds ``max_error_rate``.

Cleaning normalises whitespace, drops control characters, and cuts
boilerplate risk-warning tails; segmentation is greedy forward maximum
matching against a word dictionary.
"""

from __future__ import annotations

import csv
import io
import re
import unicodedata
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path
from typing import Iterable, Iterator, Mapping, TextIO

from .errors import ArgumentError, DataError, SchemaError

CORPUS_HEADER = ("report_id", "title", "abstract", "stock_codes", "release_date")

# Exchange code: numeric ticker, a dot, and an upper-case venue suffix.
_STOCK_CODE_RE = re.compile(r"^[0-9]{1,6}\.[A-Z]{1,4}$")

# Unicode categories removed outright during cleaning: control and format
# characters (zero-width joiners and friends).
_STRIP_CATEGORIES = ("Cc", "Cf")


@dataclass(frozen=True)
class ReportRecord:
    """One analyst report as parsed from a corpus file."""

    report_id: str
    title: str
    abstract: str
    stock_codes: tuple[str, ...]
    release_date: Date


@dataclass(frozen=True)
class RowReject:
    """A corpus/score/market row that failed validation, with its line number."""

    line: int
    reason: str


@dataclass
class ParseResult:
    records: list[ReportRecord]
    rejects: list[RowReject] = field(default_factory=list)

    @property
    def error_rate(self) -> float:
        total = len(self.records) + len(self.rejects)
        return len(self.rejects) / total if total else 0.0


def _open_source(source) -> tuple[TextIO, bool]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    return source, False


def parse_corpus(
    source,
    date_range: tuple[Date, Date] | None = None,
    max_error_rate: float = 0.1,
) -> ParseResult:
    """Parse a corpus file (path or text stream) into validated records.

    Rows with the wrong field count, an empty report_id, malformed stock
    codes, an unparseable date, or a date outside ``date_range`` are
    rejected individually. A wrong header, a duplicate report_id, or a
    reject share above ``max_error_rate`` aborts the parse.
    """
    stream, owned = _open_source(source)
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("corpus file is empty, expected a header row")
        if tuple(h.strip() for h in header) != CORPUS_HEADER:
            raise SchemaError(
                f"corpus header {header!r} does not match {','.join(CORPUS_HEADER)}"
            )

        records: list[ReportRecord] = []
        rejects: list[RowReject] = []
        seen: set[str] = set()
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            reason = None
            record = None
            if len(row) != len(CORPUS_HEADER):
                reason = f"expected {len(CORPUS_HEADER)} fields, got {len(row)}"
            else:
                report_id, title, abstract, codes_raw, date_raw = row
                report_id = report_id.strip()
                if not report_id:
                    reason = "empty report_id"
                else:
                    codes = tuple(c.strip() for c in codes_raw.split(";") if c.strip())
                    bad = [c for c in codes if not _STOCK_CODE_RE.match(c)]
                    if not codes:
                        reason = "no stock codes"
                    elif bad:
                        reason = f"malformed stock code {bad[0]!r}"
                    else:
                        try:
                            release = Date.fromisoformat(date_raw.strip())
                        except ValueError:
                            reason = f"unparseable release_date {date_raw!r}"
                        else:
                            if date_range is not None and not (
                                date_range[0] <= release <= date_range[1]
                            ):
                                reason = f"release_date {release} outside {date_range[0]}..{date_range[1]}"
                            else:
                                record = ReportRecord(report_id, title, abstract, codes, release)
            if reason is not None:
                rejects.append(RowReject(line_no, reason))
                continue
            assert record is not None
            if record.report_id in seen:
                raise DataError(f"duplicate report_id {record.report_id!r} at line {line_no}")
            seen.add(record.report_id)
            records.append(record)

        result = ParseResult(records, rejects)
        if result.error_rate > max_error_rate:
            raise DataError(
                f"corpus reject rate {result.error_rate:.3f} exceeds {max_error_rate:.3f} "
                f"({len(rejects)} of {len(records) + len(rejects)} rows)"
            )
        return result
    finally:
        if owned:
            stream.close()


def serialize_corpus(records: Iterable[ReportRecord], destination) -> None:
    """Write records back out in the corpus CSV format (round-trips with parse)."""
    stream, owned = (
        (open(destination, "w", encoding="utf-8", newline=""), True)
        if isinstance(destination, (str, Path))
        else (destination, False)
    )
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CORPUS_HEADER)
        for r in records:
            writer.writerow(
                [r.report_id, r.title, r.abstract, ";".join(r.stock_codes), r.release_date.isoformat()]
            )
    finally:
        if owned:
            stream.close()


def load_risk_warning_patterns(path) -> tuple[str, ...]:
    """Read boilerplate tail markers, one per line; '#' lines are comments."""
    patterns = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            patterns.append(line)
    return tuple(patterns)


def clean_text(
    raw: str,
    risk_warning_patterns: Iterable[str] = (),
    tail_fraction: float = 0.25,
) -> str:
    """Normalise report text and strip boilerplate risk-warning tails.

    Control/format characters become spaces, runs of whitespace collapse
    to single spaces, and the text is trimmed. Then, repeatedly, the
    earliest risk-warning marker that starts inside the trailing
    ``tail_fraction`` of the text is found and everything from it onward
    is removed. The function is idempotent: cleaning a cleaned text is a
    no-op.
    """
    if not (0.0 <= tail_fraction <= 1.0):
        raise ArgumentError(f"tail_fraction must be in [0, 1], got {tail_fraction}")
    chars = [
        " " if unicodedata.category(ch) in _STRIP_CATEGORIES else ch for ch in raw
    ]
    text = " ".join("".join(chars).split())

    patterns = [p for p in risk_warning_patterns if p]
    while patterns and text:
        gate = int(len(text) * (1.0 - tail_fraction))
        cut = None
        for pattern in patterns:
            idx = text.find(pattern, gate)
            if idx != -1 and (cut is None or idx < cut):
                cut = idx
        if cut is None:
            break
        text = text[:cut].rstrip()
    return text


class SegmentDictionary:
    """Word list with lookup set and max word length, for greedy matching.

    Accepts an iterable of words or of (word, weight) pairs, or a mapping
    word -> weight. Weights are kept only for callers that want them;
    matching itself is purely longest-first.
    """

    def __init__(self, entries):
        weights: dict[str, float] = {}
        if isinstance(entries, Mapping):
            items: Iterator = iter(entries.items())
        else:
            items = iter(entries)
        for entry in items:
            if isinstance(entry, str):
                word, weight = entry, 1.0
            else:
                word, weight = entry
            if not word:
                raise ArgumentError("empty word in segmentation dictionary")
            prior = weights.get(word)
            if prior is None or weight > prior:
                weights[word] = float(weight)
        if not weights:
            raise ArgumentError("segmentation dictionary is empty")
        self.weights = weights
        self.words = frozenset(weights)
        self.max_len = max(len(w) for w in self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)


def segment(text: str, dictionary) -> list[str]:
    """Greedy forward maximum matching.

    Scanning left to right, the longest dictionary word starting at the
    cursor becomes the next token; if none matches, the single character
    does. Whitespace separates tokens and is never part of one.
    """
    if not isinstance(dictionary, SegmentDictionary):
        dictionary = SegmentDictionary(dictionary)
    tokens: list[str] = []
    i, n = 0, len(text)
    max_len = dictionary.max_len
    words = dictionary.words
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        match = None
        for length in range(min(max_len, n - i), 1, -1):
            candidate = text[i : i + length]
            if candidate in words:
                match = candidate
                break
        if match is None:
            match = text[i]
        tokens.append(match)
        i += len(match)
    return tokens


@dataclass(frozen=True)
class CleanedReport:
    """A report after cleaning and segmentation."""

    report_id: str
    text: str
    tokens: tuple[str, ...]


def prepare_report(
    record: ReportRecord,
    dictionary,
    risk_warning_patterns: Iterable[str] = (),
    tail_fraction: float = 0.25,
) -> CleanedReport:
    """Clean the title+abstract concatenation of a record and segment it."""
    joined = f"{record.title} {record.abstract}"
    text = clean_text(joined, risk_warning_patterns, tail_fraction)
    return CleanedReport(record.report_id, text, tuple(segment(text, dictionary)))


class CorpusIndex:
    """Per-stock sorted release dates, for counting reports in date windows."""

    def __init__(self, records: Iterable[ReportRecord]):
        by_stock: dict[str, list[Date]] = {}
        n = 0
        for record in records:
            n += 1
            for sid in record.stock_codes:
                by_stock.setdefault(sid, []).append(record.release_date)
        for dates in by_stock.values():
            dates.sort()
        self._dates = by_stock
        self.n_records = n

    def count_between(self, stock_id: str, first: Date, last: Date) -> int:
        """Number of reports citing ``stock_id`` with release date in [first, last]."""
        if first > last:
            return 0
        dates = self._dates.get(stock_id)
        if not dates:
            return 0
        return bisect_right(dates, last) - bisect_left(dates, first)

    def stocks(self) -> list[str]:
        return sorted(self._dates)
