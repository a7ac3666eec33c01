"""Energy readings: the CSV loader and the in-memory reading set.

CSV format: header ``building_id,attribute,timestamp_iso8601,value``,
UTF-8, comma separated, timestamps ISO-8601 with an explicit zone.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator

CSV_HEADER = ["building_id", "attribute", "timestamp_iso8601", "value"]


class Attribute(enum.Enum):
    ELECTRICITY = "electricity"
    EMISSION = "emission"
    WATER = "water"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class ReadingsError(ValueError):
    """Raised on malformed input rows, with the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _parse_timestamp(raw: str) -> datetime:
    # fromisoformat on 3.10 does not accept a trailing Z
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError("timestamp lacks a zone")
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class Reading:
    building: str
    attribute: Attribute
    timestamp: datetime
    value: float


@dataclass
class ReadingSet:
    """All loaded readings plus the (building, attribute, timestamp) key index."""

    readings: list[Reading] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.readings)

    def __iter__(self) -> Iterator[Reading]:
        return iter(self.readings)

    def buildings(self) -> list[str]:
        return sorted({r.building for r in self.readings})

    def select(self, attribute: Attribute,
               buildings: Iterable[str] | None = None) -> list[Reading]:
        """Readings of one attribute, optionally restricted to buildings.

        An empty or None restriction means all buildings (the overview).
        """
        wanted = set(buildings) if buildings else None
        return [r for r in self.readings
                if r.attribute is attribute
                and (wanted is None or r.building in wanted)]


def load_readings(source: IO[str], known_buildings: Iterable[str] | None = None,
                  date_range: tuple[datetime, datetime] | None = None) -> ReadingSet:
    """Parse a readings CSV stream, rejecting every malformed row.

    known_buildings, when given, makes unknown building ids an error.
    date_range, when given, bounds every timestamp (inclusive).
    """
    known = set(known_buildings) if known_buildings is not None else None
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ReadingsError(1, "empty file, expected header") from None
    if [h.strip() for h in header] != CSV_HEADER:
        raise ReadingsError(1, f"bad header {header!r}, expected {CSV_HEADER!r}")

    readings: list[Reading] = []
    seen: set[tuple[str, Attribute, datetime]] = set()
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ReadingsError(line, f"expected 4 fields, got {len(row)}")
        building = row[0].strip()
        if not building:
            raise ReadingsError(line, "empty building id")
        if known is not None and building not in known:
            raise ReadingsError(line, f"unknown building id {building!r}")
        try:
            attribute = Attribute(row[1].strip())
        except ValueError:
            raise ReadingsError(line, f"unknown attribute {row[1]!r}") from None
        try:
            timestamp = _parse_timestamp(row[2])
        except ValueError as exc:
            raise ReadingsError(line, f"bad timestamp {row[2]!r}: {exc}") from None
        if date_range is not None and not (date_range[0] <= timestamp <= date_range[1]):
            raise ReadingsError(line, f"timestamp {row[2]} outside declared range")
        try:
            value = float(row[3])
        except ValueError:
            raise ReadingsError(line, f"bad value {row[3]!r}") from None
        if not value >= 0:
            raise ReadingsError(line, f"negative value {value}")
        key = (building, attribute, timestamp)
        if key in seen:
            raise ReadingsError(line, f"duplicate reading for {building}/{attribute.value}"
                                      f"/{timestamp.isoformat()}")
        seen.add(key)
        readings.append(Reading(building, attribute, timestamp, value))
    return ReadingSet(readings)


def write_readings(sink: IO[str], readings: Iterable[Reading]) -> int:
    """Serialize readings back to the CSV wire format. Returns rows written."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    n = 0
    for r in readings:
        writer.writerow([r.building, r.attribute.value,
                         r.timestamp.isoformat().replace("+00:00", "Z"),
                         f"{r.value:.6f}".rstrip("0").rstrip(".")])
        n += 1
    return n
