"""Incident-record and hospitalization ingestion.

Parses the dispatch-centre CSV export (one row per EMS incident), classifies
each record into the four analysis streams (pandemic / non-pandemic crossed
with admitted / defunct), aggregates records to daily count series, and
computes the three response-time intervals.

Defunct matching is exact string equality after case-folding and trimming
against a closed list of dispositions; pandemic matching looks for the token
"pandem" anywhere in the problem string so label variants are absorbed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    DomainError,
    DuplicateKeyError,
    FlaggedRecordError,
    GapError,
    ParameterError,
    RangeError,
    SchemaError,
)
from .series import DailySeries

__all__ = [
    "IncidentRecord",
    "IncidentTable",
    "ParseReport",
    "ResponseIntervals",
    "Stream",
    "Status",
    "StreamLabel",
    "DEFUNCT_DISPOSITIONS",
    "parse_incidents",
    "classify_incident",
    "daily_counts",
    "response_intervals",
    "parse_hospitalization",
    "incidents_to_csv",
]

# Closed list: dispositions that end without a patient transport.
DEFUNCT_DISPOSITIONS = frozenset({
    "call cancelled",
    "no patient",
    "other",
    "refusal",
    "duplicate call",
    "false alarm call",
    "information call only",
})

PANDEMIC_TOKEN = "pandem"

INCIDENT_COLUMNS = {
    "incidentprimarykey": "primary_key",
    "jurisdiction": "jurisdiction",
    "problem": "problem",
    "priority_number": "priority",
    "time_phonepickup": "t_phone_pickup",
    "time_first_unit_assigned": "t_assigned",
    "time_first_unit_enroute": "t_enroute",
    "time_first_unit_arrived": "t_arrived",
    "call_disposition": "disposition",
    "longitude": "longitude",
    "latitude": "latitude",
}

MANDATORY_COLUMNS = ("incidentprimarykey", "problem", "call_disposition")

# Header names for round-tripping a parsed table back to CSV.
CANONICAL_HEADER = (
    "IncidentPrimaryKey", "Jurisdiction", "Problem", "Priority_Number",
    "Time_PhonePickUp", "Time_First_Unit_Assigned", "Time_First_Unit_Enroute",
    "Time_First_Unit_Arrived", "Call_Disposition", "Longitude", "Latitude",
)


class Stream(str, Enum):
    PANDEMIC = "pandemic"
    NON_PANDEMIC = "non_pandemic"


class Status(str, Enum):
    ADMITTED = "admitted"
    DEFUNCT = "defunct"


@dataclass(frozen=True)
class StreamLabel:
    stream: Stream
    status: Status


@dataclass(frozen=True)
class IncidentRecord:
    """One EMS incident row."""

    primary_key: str
    jurisdiction: str = ""
    problem: str = ""
    priority: int | None = None
    t_phone_pickup: datetime | None = None
    t_assigned: datetime | None = None
    t_enroute: datetime | None = None
    t_arrived: datetime | None = None
    disposition: str = ""
    longitude: float | None = None
    latitude: float | None = None

    def timestamps(self) -> tuple[datetime | None, ...]:
        return (self.t_phone_pickup, self.t_assigned, self.t_enroute, self.t_arrived)


@dataclass(frozen=True)
class ResponseIntervals:
    """Fractional minutes between consecutive dispatch milestones."""

    assignment_min: float | None
    dispatch_min: float | None
    arrival_min: float | None


@dataclass
class ParseReport:
    rows_read: int = 0
    rows_rejected: int = 0
    reasons: dict[str, int] = field(default_factory=dict)
    flagged_keys: list[str] = field(default_factory=list)
    referred_count: int = 0  # "Referred" is not in the defunct list; tallied separately

    def add_reject(self, reason: str) -> None:
        self.rows_rejected += 1
        self.reasons[reason] = self.reasons.get(reason, 0) + 1

    def to_json_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_rejected": self.rows_rejected,
            "reasons": dict(sorted(self.reasons.items())),
            "flagged_keys": list(self.flagged_keys),
            "referred_count": self.referred_count,
        }


@dataclass
class IncidentTable:
    records: list[IncidentRecord]
    report: ParseReport

    def __len__(self) -> int:
        return len(self.records)


def parse_incidents(source, timestamp_format: str | None = None) -> IncidentTable:
    """Parse a dispatch CSV into incident records plus a parse report.

    Unparseable timestamps become absent values.  Rows missing a mandatory
    field are rejected and tallied by reason.  Records whose present
    timestamps run backwards are retained (they still count toward demand)
    but their keys are flagged for exclusion from response-time statistics.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("CSV is empty; expected a header row")

    norm = [h.strip().lower() for h in header]
    for col in MANDATORY_COLUMNS:
        if col not in norm:
            raise SchemaError(f"missing mandatory column: {col}")
    positions = {INCIDENT_COLUMNS[h]: i for i, h in enumerate(norm) if h in INCIDENT_COLUMNS}

    report = ParseReport()
    records: list[IncidentRecord] = []
    seen: dict[str, int] = {}

    for row in reader:
        if not any(cell.strip() for cell in row):
            continue
        report.rows_read += 1

        def cell(name: str) -> str:
            pos = positions.get(name)
            return row[pos].strip() if pos is not None and pos < len(row) else ""

        key = cell("primary_key")
        if not key:
            report.add_reject("missing_primary_key")
            continue
        problem = cell("problem")
        if not problem:
            report.add_reject("missing_problem")
            continue
        disposition = cell("disposition")
        if not disposition:
            report.add_reject("missing_disposition")
            continue

        priority: int | None = None
        raw_priority = cell("priority")
        if raw_priority:
            try:
                priority = int(raw_priority)
            except ValueError:
                report.add_reject("invalid_priority")
                continue
            if not 1 <= priority <= 15:
                report.add_reject("invalid_priority")
                continue

        record = IncidentRecord(
            primary_key=key,
            jurisdiction=cell("jurisdiction"),
            problem=problem,
            priority=priority,
            t_phone_pickup=_parse_ts(cell("t_phone_pickup"), timestamp_format),
            t_assigned=_parse_ts(cell("t_assigned"), timestamp_format),
            t_enroute=_parse_ts(cell("t_enroute"), timestamp_format),
            t_arrived=_parse_ts(cell("t_arrived"), timestamp_format),
            disposition=disposition,
            longitude=_parse_float(cell("longitude")),
            latitude=_parse_float(cell("latitude")),
        )
        seen[key] = seen.get(key, 0) + 1
        if _timestamps_inverted(record):
            report.flagged_keys.append(key)
        if disposition.strip().lower() == "referred":
            report.referred_count += 1
        records.append(record)

    duplicates = [k for k, count in seen.items() if count > 1]
    if duplicates:
        raise DuplicateKeyError(duplicates)
    return IncidentTable(records=records, report=report)


def classify_incident(record: IncidentRecord) -> StreamLabel:
    """Assign the (stream, status) pair; total on records with both strings."""
    if not record.problem.strip() or not record.disposition.strip():
        raise ParameterError("classification needs non-empty problem and disposition")
    status = (Status.DEFUNCT
              if record.disposition.strip().lower() in DEFUNCT_DISPOSITIONS
              else Status.ADMITTED)
    stream = (Stream.PANDEMIC
              if PANDEMIC_TOKEN in record.problem.lower()
              else Stream.NON_PANDEMIC)
    return StreamLabel(stream=stream, status=status)


def daily_counts(table, label_filter, calendar: tuple[date, date]) -> DailySeries:
    """Count matching records per local pickup date over a contiguous calendar.

    ``label_filter`` is a predicate on StreamLabel (or None for all records).
    Dates without matches get 0.  A matching record whose pickup date falls
    outside the calendar is an error, not a silent drop; records without a
    pickup timestamp cannot be dated and contribute nowhere.
    """
    start, end = calendar
    if end < start:
        raise ParameterError("calendar end precedes start")
    n = (end - start).days + 1
    counts = np.zeros(n)
    records = table.records if isinstance(table, IncidentTable) else table
    for record in records:
        if label_filter is not None and not label_filter(classify_incident(record)):
            continue
        if record.t_phone_pickup is None:
            continue
        day = record.t_phone_pickup.date()
        offset = (day - start).days
        if not 0 <= offset < n:
            raise RangeError(
                f"record {record.primary_key} pickup {day.isoformat()} outside calendar")
        counts[offset] += 1
    return DailySeries(start, counts)


def response_intervals(record: IncidentRecord) -> ResponseIntervals:
    """Minutes between pickup->assigned, assigned->enroute, enroute->arrived.

    An interval is defined only when both bounding timestamps exist; a
    negative interval means the record is flagged and must not enter
    response-time statistics.
    """
    if _timestamps_inverted(record):
        raise FlaggedRecordError(
            f"record {record.primary_key} has inverted timestamps")
    return ResponseIntervals(
        assignment_min=_minutes(record.t_phone_pickup, record.t_assigned),
        dispatch_min=_minutes(record.t_assigned, record.t_enroute),
        arrival_min=_minutes(record.t_enroute, record.t_arrived),
    )


def parse_hospitalization(source) -> DailySeries:
    """Read a ``date,count`` CSV of daily hospitalization admissions.

    Dates must be strictly increasing and contiguous (no interpolation);
    counts must be non-negative.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("hospitalization CSV is empty")
    norm = [h.strip().lower() for h in header]
    if norm[:2] != ["date", "count"]:
        raise SchemaError("expected header 'date,count'")

    days: list[date] = []
    vals: list[float] = []
    for row in reader:
        if not any(cell.strip() for cell in row):
            continue
        day = date.fromisoformat(row[0].strip())
        count = float(row[1])
        if count < 0:
            raise DomainError(f"negative count {count} on {day.isoformat()}")
        if days:
            step = (day - days[-1]).days
            if step <= 0:
                raise GapError(f"dates not strictly increasing at {day.isoformat()}")
            if step > 1:
                missing = days[-1] + timedelta(days=1)
                raise GapError(f"missing date {missing.isoformat()}")
        days.append(day)
        vals.append(count)
    if not days:
        raise SchemaError("hospitalization CSV has no data rows")
    return DailySeries(days[0], np.asarray(vals))


def incidents_to_csv(table) -> str:
    """Serialize records back to the canonical column layout."""
    records = table.records if isinstance(table, IncidentTable) else table
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CANONICAL_HEADER)
    for r in records:
        writer.writerow([
            r.primary_key,
            r.jurisdiction,
            r.problem,
            "" if r.priority is None else r.priority,
            _format_ts(r.t_phone_pickup),
            _format_ts(r.t_assigned),
            _format_ts(r.t_enroute),
            _format_ts(r.t_arrived),
            r.disposition,
            "" if r.longitude is None else repr(r.longitude),
            "" if r.latitude is None else repr(r.latitude),
        ])
    return out.getvalue()


def _timestamps_inverted(record: IncidentRecord) -> bool:
    chain = [t for t in record.timestamps() if t is not None]
    return any(b < a for a, b in zip(chain, chain[1:]))


def _minutes(t0: datetime | None, t1: datetime | None) -> float | None:
    if t0 is None or t1 is None:
        return None
    return (t1 - t0).total_seconds() / 60.0


def _parse_ts(text: str, fmt: str | None) -> datetime | None:
    if not text:
        return None
    try:
        if fmt is not None:
            return datetime.strptime(text, fmt)
        return datetime.fromisoformat(text)
    except ValueError:
        return None


def _parse_float(text: str) -> float | None:
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        return None


def _format_ts(t: datetime | None) -> str:
    return "" if t is None else t.strftime("%Y-%m-%d %H:%M:%S")


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8-sig")
    if isinstance(source, str):
        if "\n" in source:
            return source
        return Path(source).read_text(encoding="utf-8-sig")
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8-sig") if isinstance(data, bytes) else data
    raise ParameterError(f"cannot read CSV from {type(source).__name__}")
