"""CSV event log loading, validation and case-level filtering."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from types import MappingProxyType
from typing import BinaryIO, Callable, Iterable, Mapping, Sequence, Union

CsvSource = Union[bytes, str, os.PathLike, BinaryIO]

# Issue codes that cause a row to be dropped.
REJECTING_CODES = frozenset({"TIMESTAMP_PARSE", "EMPTY_ACTIVITY", "EMPTY_CASE", "ROW_SHAPE"})
DEGENERATE_FRACTION = 0.5


class EventLogError(ValueError):
    pass


class MissingColumn(EventLogError):
    def __init__(self, column: str):
        super().__init__(f"mapped column {column!r} not found in header")
        self.column = column


class EmptyInput(EventLogError):
    pass


class MalformedCsv(EventLogError):
    pass


class DegenerateInput(EventLogError):
    pass


@dataclass(frozen=True)
class ColumnMapping:
    case_id: str = "case_id"
    activity: str = "activity"
    timestamp: str = "timestamp"

    def columns(self) -> tuple[str, str, str]:
        return (self.case_id, self.activity, self.timestamp)


@dataclass(frozen=True)
class Event:
    case_id: str
    activity: str
    timestamp: datetime
    attributes: Mapping[str, str] = field(default_factory=dict, compare=True)

    def __post_init__(self):
        if not self.activity or not self.activity.strip():
            raise ValueError("activity must be non-empty")
        if self.timestamp.tzinfo is None:
            object.__setattr__(self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc))


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[Event, ...]

    def __post_init__(self):
        if any(e.case_id != self.case_id for e in self.events):
            raise ValueError(f"trace {self.case_id!r} contains events of another case")

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)


@dataclass(frozen=True)
class EventLog:
    """Immutable log of traces keyed by case id (iteration order is sorted by case id)."""

    traces: Mapping[str, Trace]
    column_mapping: ColumnMapping = ColumnMapping()
    source_digest: str = ""

    def __post_init__(self):
        ordered = {k: self.traces[k] for k in sorted(self.traces)}
        object.__setattr__(self, "traces", MappingProxyType(ordered))

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces.values())

    def __eq__(self, other):
        if not isinstance(other, EventLog):
            return NotImplemented
        return dict(self.traces) == dict(other.traces) and self.column_mapping == other.column_mapping

    __hash__ = None

    @property
    def n_events(self) -> int:
        return sum(len(t) for t in self.traces.values())

    def variants(self) -> Counter:
        return Counter(t.activities for t in self.traces.values())

    def content_digest(self) -> str:
        """SHA-256 over cases, activities, timestamps and attributes (independent of source bytes)."""
        h = hashlib.sha256()
        for case_id, trace in self.traces.items():
            h.update(case_id.encode() + b"\x1e")
            for e in trace.events:
                attrs = json.dumps(dict(sorted(e.attributes.items())), sort_keys=True)
                h.update(f"{e.activity}\x1f{e.timestamp.isoformat()}\x1f{attrs}\x1d".encode())
        return h.hexdigest()

    @classmethod
    def from_events(cls, events: Iterable[Event], column_mapping: ColumnMapping = ColumnMapping(),
                    source_digest: str = "") -> "EventLog":
        grouped: dict[str, list[Event]] = {}
        for e in events:
            grouped.setdefault(e.case_id, []).append(e)
        # sorted() is stable, so equal timestamps keep input order
        traces = {c: Trace(c, tuple(sorted(evs, key=lambda e: e.timestamp))) for c, evs in grouped.items()}
        log = cls(traces, column_mapping, source_digest)
        if not source_digest:
            object.__setattr__(log, "source_digest", log.content_digest())
        return log


@dataclass(frozen=True)
class Issue:
    row: int
    code: str
    message: str

    @property
    def rejecting(self) -> bool:
        return self.code in REJECTING_CODES


@dataclass(frozen=True)
class QualityReport:
    n_cases: int
    n_events: int
    n_rejected_rows: int
    issues: tuple[Issue, ...]
    activity_vocabulary: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "n_cases": self.n_cases,
            "n_events": self.n_events,
            "n_rejected_rows": self.n_rejected_rows,
            "issues": [{"row": i.row, "code": i.code, "message": i.message} for i in self.issues],
            "activity_vocabulary": list(self.activity_vocabulary),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def parse_timestamp(text: str) -> datetime:
    """Parse ISO-8601; naive values are taken as UTC and everything is normalised to UTC."""
    s = text.strip()
    if not s:
        raise ValueError("empty timestamp")
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    ts = datetime.fromisoformat(s)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _read_bytes(source: CsvSource) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def load_event_log(source: CsvSource, mapping: ColumnMapping | None = None) -> tuple[EventLog, QualityReport]:
    """Load an RFC-4180 CSV event log.

    Rows with an empty case id, empty activity or unparseable timestamp are
    skipped and reported; if more than half of the rows are rejected the whole
    input is refused with :class:`DegenerateInput`. Extra columns become
    string attributes on each event.
    """
    mapping = mapping or ColumnMapping()
    raw = _read_bytes(source)
    digest = hashlib.sha256(raw).hexdigest()
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MalformedCsv(f"input is not valid UTF-8: {exc}") from exc

    try:
        rows = list(csv.reader(io.StringIO(text, newline=""), strict=True))
    except csv.Error as exc:
        raise MalformedCsv(str(exc)) from exc
    if not rows:
        raise EmptyInput("no header row")
    header = [h.strip() for h in rows[0]]
    for col in mapping.columns():
        if col not in header:
            raise MissingColumn(col)
    data = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not data:
        raise EmptyInput("no data rows")

    i_case, i_act, i_ts = (header.index(c) for c in mapping.columns())
    extra = [(i, h) for i, h in enumerate(header) if h not in mapping.columns()]
    issues: list[Issue] = []
    events: list[Event] = []
    seen: set[tuple[str, str, datetime]] = set()
    # row numbers are 1-based over the file, header is row 1
    for rowno, row in enumerate(data, start=2):
        if len(row) != len(header):
            issues.append(Issue(rowno, "ROW_SHAPE", f"expected {len(header)} fields, got {len(row)}"))
            continue
        case_id, activity = row[i_case].strip(), row[i_act].strip()
        if not case_id:
            issues.append(Issue(rowno, "EMPTY_CASE", "case id is empty"))
            continue
        if not activity:
            issues.append(Issue(rowno, "EMPTY_ACTIVITY", "activity is empty"))
            continue
        try:
            ts = parse_timestamp(row[i_ts])
        except ValueError:
            issues.append(Issue(rowno, "TIMESTAMP_PARSE", f"cannot parse timestamp {row[i_ts]!r}"))
            continue
        key = (case_id, activity, ts)
        if key in seen:
            issues.append(Issue(rowno, "DUPLICATE_EVENT", "same case, activity and timestamp seen before"))
        seen.add(key)
        attrs = {h: row[i] for i, h in extra if row[i] != ""}
        events.append(Event(case_id, activity, ts, attrs))

    n_rejected = sum(1 for i in issues if i.rejecting)
    if n_rejected > DEGENERATE_FRACTION * len(data):
        raise DegenerateInput(f"{n_rejected} of {len(data)} rows rejected")

    log = EventLog.from_events(events, mapping, digest)
    report = QualityReport(
        n_cases=len(log),
        n_events=log.n_events,
        n_rejected_rows=n_rejected,
        issues=tuple(issues),
        activity_vocabulary=tuple(sorted({e.activity for e in events})),
    )
    return log, report


def to_csv(log: EventLog, mapping: ColumnMapping | None = None) -> bytes:
    """Serialise back to the input schema; attribute columns follow the mapped ones, sorted."""
    mapping = mapping or log.column_mapping
    attr_cols = sorted({k for t in log for e in t for k in e.attributes})
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow([*mapping.columns(), *attr_cols])
    for trace in log:
        for e in trace:
            writer.writerow([e.case_id, e.activity, format_timestamp(e.timestamp),
                             *(e.attributes.get(k, "") for k in attr_cols)])
    return buf.getvalue().encode("utf-8")


def filter_log(log: EventLog, predicate: Callable[[Trace], bool]) -> EventLog:
    kept = {c: t for c, t in log.traces.items() if predicate(t)}
    return EventLog(kept, log.column_mapping, log.source_digest)


def contains_activity(*labels: str) -> Callable[[Trace], bool]:
    wanted = set(labels)
    return lambda trace: any(e.activity in wanted for e in trace)


def has_attribute(name: str, value: str) -> Callable[[Trace], bool]:
    return lambda trace: any(e.attributes.get(name) == value for e in trace)


@dataclass(frozen=True)
class LogStatistics:
    n_cases: int
    n_events: int
    activity_frequencies: Mapping[str, int]
    trace_length_distribution: Mapping[int, int]
    start: datetime | None
    end: datetime | None

    @property
    def time_span(self) -> timedelta:
        if self.start is None or self.end is None:
            return timedelta(0)
        return self.end - self.start


def log_statistics(log: EventLog) -> LogStatistics:
    freqs: Counter = Counter()
    lengths: Counter = Counter()
    start = end = None
    for trace in log:
        lengths[len(trace)] += 1
        for e in trace:
            freqs[e.activity] += 1
            if start is None or e.timestamp < start:
                start = e.timestamp
            if end is None or e.timestamp > end:
                end = e.timestamp
    return LogStatistics(
        n_cases=len(log),
        n_events=sum(freqs.values()),
        activity_frequencies=dict(sorted(freqs.items())),
        trace_length_distribution=dict(sorted(lengths.items())),
        start=start,
        end=end,
    )


def log_from_sequences(sequences: Sequence[Sequence[str]], start: datetime | None = None,
                       step: timedelta = timedelta(hours=1)) -> EventLog:
    """Build a log from plain activity sequences, one case per sequence, evenly spaced in time."""
    start = start or datetime(2024, 1, 1, tzinfo=timezone.utc)
    width = len(str(max(len(sequences) - 1, 0)))
    events = []
    for i, seq in enumerate(sequences):
        case = f"c{i:0{width}d}"
        for j, act in enumerate(seq):
            events.append(Event(case, act, start + j * step))
    return EventLog.from_events(events)
