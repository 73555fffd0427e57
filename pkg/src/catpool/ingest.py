"""Claim-export parsing and monthly loss aggregation.

Monetary amounts are carried as integer cents so aggregation is exact; they
convert to floating point only at the analysis boundary. The canonical
aggregated format is a CSV with header ``state,year,month,loss_cents``,
sorted by (state, year, month), UTF-8, LF line endings, one row per month of
the window including zero months.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError

DEFAULT_SCHEMA = {
    "date": "dateOfLoss",
    "state": "state",
    "building": "buildingDamageAmount",
    "contents": "contentsDamageAmount",
}

Month = Tuple[int, int]


@dataclass(frozen=True)
class ClaimRecord:
    """One parsed claim row.

    Attributes:
        date_of_loss: Calendar date of the loss.
        state: Two-letter state code as found in the export.
        building_damage: Building damage in integer cents, >= 0.
        contents_damage: Contents damage in integer cents, >= 0.
    """

    date_of_loss: dt.date
    state: str
    building_damage: int
    contents_damage: int

    @property
    def total_cents(self) -> int:
        return self.building_damage + self.contents_damage


@dataclass(frozen=True)
class RejectedRow:
    row_number: int
    reason: str


@dataclass(frozen=True)
class LossSeries:
    """Monthly total losses for one state over a fixed window.

    ``values`` holds integer cents, one entry per calendar month starting at
    ``start``; months without claims hold 0.
    """

    state: str
    start: Month
    values: np.ndarray

    @property
    def months(self) -> int:
        return self.values.size

    def dollars(self) -> np.ndarray:
        return self.values.astype(float) / 100.0


@dataclass(frozen=True)
class MonthlyAggregate:
    """Aggregation output plus the bookkeeping the conservation checks need."""

    series: List[LossSeries]
    accepted: int
    out_of_window: int
    out_of_state: int


def _parse_cents(raw: Optional[str]) -> int:
    if raw is None or raw.strip() == "":
        return 0
    amount = Decimal(raw.strip())
    cents = int((amount * 100).to_integral_value())
    return cents


def _parse_date(raw: str) -> dt.date:
    return dt.date.fromisoformat(raw.strip()[:10])


def parse_claims(path, schema=None,
                 rejects: Optional[list] = None) -> Iterator[ClaimRecord]:
    """Stream claim records from a delimited export with a header row.

    Rows with unparseable dates or negative amounts are appended to
    ``rejects`` (as :class:`RejectedRow` with 1-based data row numbers) and
    skipped; missing damage fields count as zero.
    """
    schema = dict(DEFAULT_SCHEMA, **(schema or {}))
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file, expected a header row")
        missing = [column for column in schema.values()
                   if column not in reader.fieldnames]
        if missing:
            raise DataError(
                f"{path}: missing mapped column(s) {', '.join(missing)}")
        for row_number, row in enumerate(reader, start=1):
            try:
                date_of_loss = _parse_date(row[schema["date"]] or "")
            except ValueError:
                if rejects is not None:
                    rejects.append(RejectedRow(row_number, "unparseable date"))
                continue
            try:
                building = _parse_cents(row.get(schema["building"]))
                contents = _parse_cents(row.get(schema["contents"]))
            except InvalidOperation:
                if rejects is not None:
                    rejects.append(RejectedRow(row_number, "unparseable amount"))
                continue
            if building < 0 or contents < 0:
                if rejects is not None:
                    rejects.append(RejectedRow(row_number, "negative amount"))
                continue
            yield ClaimRecord(
                date_of_loss=date_of_loss,
                state=(row[schema["state"]] or "").strip().upper(),
                building_damage=building,
                contents_damage=contents,
            )


def months_in_window(window: Tuple[Month, Month]) -> int:
    (start_year, start_month), (end_year, end_month) = window
    return (end_year - start_year) * 12 + (end_month - start_month) + 1


def aggregate_monthly(records: Iterable[ClaimRecord], states: Sequence[str],
                      window: Tuple[Month, Month]) -> MonthlyAggregate:
    """Sum building + contents damage per state and calendar month.

    Claims dated outside the window are counted and dropped (never silently);
    claims for states outside the filter are counted separately. Every output
    series spans the full window, zero-filled.
    """
    start, end = window
    if start > end:
        raise ValueError(f"window start {start} is after end {end}")
    n_months = months_in_window(window)
    wanted = {s.upper() for s in states}
    totals = {state: np.zeros(n_months, dtype=np.int64) for state in wanted}

    accepted = out_of_window = out_of_state = 0
    for record in records:
        month = (record.date_of_loss.year, record.date_of_loss.month)
        if not start <= month <= end:
            out_of_window += 1
            continue
        if record.state not in wanted:
            out_of_state += 1
            continue
        index = (month[0] - start[0]) * 12 + (month[1] - start[1])
        totals[record.state][index] += record.total_cents
        accepted += 1

    series = [LossSeries(state=state, start=start, values=totals[state])
              for state in sorted(wanted)]
    return MonthlyAggregate(series=series, accepted=accepted,
                            out_of_window=out_of_window,
                            out_of_state=out_of_state)


def persist_series(series: Sequence[LossSeries], path) -> None:
    """Write the canonical aggregated CSV; read_series inverts it exactly."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["state", "year", "month", "loss_cents"])
        for entry in sorted(series, key=lambda s: s.state):
            year, month = entry.start
            for value in entry.values:
                writer.writerow([entry.state, year, month, int(value)])
                month += 1
                if month > 12:
                    month = 1
                    year += 1


def read_series(path) -> List[LossSeries]:
    """Read the canonical aggregated CSV back into loss series."""
    by_state: dict = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        expected = ["state", "year", "month", "loss_cents"]
        if reader.fieldnames != expected:
            raise DataError(
                f"{path}: expected header {','.join(expected)}, "
                f"got {reader.fieldnames}")
        for row in reader:
            by_state.setdefault(row["state"], []).append(
                (int(row["year"]), int(row["month"]), int(row["loss_cents"])))
    series = []
    for state in sorted(by_state):
        rows = by_state[state]
        if rows != sorted(rows):
            raise DataError(f"{path}: rows for {state} not sorted by month")
        series.append(LossSeries(
            state=state, start=(rows[0][0], rows[0][1]),
            values=np.array([cents for _, _, cents in rows], dtype=np.int64)))
    return series


def series_matrix(series: Sequence[LossSeries],
                  states: Sequence[str]) -> np.ndarray:
    """Column-stack the chosen states' dollar series in the given order."""
    by_state = {entry.state: entry for entry in series}
    missing = [s for s in states if s.upper() not in by_state]
    if missing:
        raise DataError(f"no aggregated series for state(s) {missing}")
    columns = [by_state[s.upper()].dollars() for s in states]
    lengths = {c.size for c in columns}
    if len(lengths) != 1:
        raise DataError("aggregated series differ in length")
    return np.column_stack(columns)
