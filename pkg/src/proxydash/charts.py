"""Chart identities and the temporal aggregations behind the dashboard.

The dashboard is a fixed 3 x 4 universe: three attributes (rows) at four
granularities (columns).  Distribution is a histogram over raw values;
Yearly / Monthly / Weekly are per-building bucket means (calendar year,
month-of-year averaged across years, day-of-week averaged).  Drilling
down slices a chart into per-period sub-charts one rung finer:
Yearly -> months of that year, Monthly -> ISO weeks of that month,
Weekly -> days of that week.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from .dataset import Attribute, Reading, ReadingSet

HISTOGRAM_BINS = 12

MONTH_LABELS = ["Jan", "Feb", "Mar", "Apr", "May", "Jun",
                "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]
DAY_LABELS = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]


class Granularity(enum.Enum):
    DISTRIBUTION = "distribution"
    YEARLY = "yearly"
    MONTHLY = "monthly"
    WEEKLY = "weekly"


class DrillDownError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class ChartId:
    attribute: Attribute
    granularity: Granularity

    def key(self) -> str:
        return f"{self.attribute.value}:{self.granularity.value}"

    @staticmethod
    def from_key(key: str) -> "ChartId":
        a, g = key.split(":")
        return ChartId(Attribute(a), Granularity(g))


# Row-major dashboard order: one attribute per row, one granularity per column.
ATTRIBUTE_ROWS = (Attribute.ELECTRICITY, Attribute.EMISSION, Attribute.WATER)
GRANULARITY_COLS = (Granularity.DISTRIBUTION, Granularity.YEARLY,
                    Granularity.MONTHLY, Granularity.WEEKLY)
CHART_UNIVERSE = tuple(ChartId(a, g) for a in ATTRIBUTE_ROWS for g in GRANULARITY_COLS)


@dataclass(frozen=True)
class ChartData:
    """One renderable chart: per-building bucket means or a histogram.

    period labels the drill-down slice this chart covers (None on the
    primary layer).  Buckets with no readings are omitted, never
    zero-filled.
    """

    chart: ChartId
    series: tuple[tuple[str, tuple[tuple[str, float], ...]], ...] = ()
    histogram: tuple[tuple[float, float, int], ...] | None = None
    period: str | None = None


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _bucket_series(rows: list[Reading], key_fn, label_fn) -> tuple:
    """Group rows by (building, key), average, order buildings and keys."""
    grouped: dict[str, dict] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        grouped[r.building][key_fn(r)].append(r.value)
    series = []
    for building in sorted(grouped):
        buckets = tuple((label_fn(k), _mean(vs))
                        for k, vs in sorted(grouped[building].items()))
        series.append((building, buckets))
    return tuple(series)


def _histogram(values: list[float]) -> tuple[tuple[float, float, int], ...]:
    lo, hi = min(values), max(values)
    if hi == lo:
        # Degenerate spread: a single bin holding every reading.
        return ((lo, hi, len(values)),)
    width = (hi - lo) / HISTOGRAM_BINS
    counts = [0] * HISTOGRAM_BINS
    for v in values:
        idx = min(int((v - lo) / width), HISTOGRAM_BINS - 1)
        counts[idx] += 1
    return tuple((lo + i * width, lo + (i + 1) * width, counts[i])
                 for i in range(HISTOGRAM_BINS))


def aggregate(readings: ReadingSet, chart: ChartId,
              building_filter: Iterable = ()) -> ChartData:
    """Aggregate readings into one chart; empty filter means all buildings."""
    rows = readings.select(chart.attribute, building_filter)
    if not rows:
        return ChartData(chart)
    g = chart.granularity
    if g is Granularity.DISTRIBUTION:
        return ChartData(chart, histogram=_histogram([r.value for r in rows]))
    if g is Granularity.YEARLY:
        return ChartData(chart, series=_bucket_series(
            rows, lambda r: r.timestamp.year, str))
    if g is Granularity.MONTHLY:
        return ChartData(chart, series=_bucket_series(
            rows, lambda r: r.timestamp.month, lambda m: MONTH_LABELS[m - 1]))
    return ChartData(chart, series=_bucket_series(
        rows, lambda r: r.timestamp.isoweekday(), lambda d: DAY_LABELS[d - 1]))


def _iso_week_label(ts) -> str:
    y, w, _ = ts.isocalendar()
    return f"{y}-W{w:02d}"


def drill_down(chart: ChartId, readings: ReadingSet,
               building_filter: Iterable = ()) -> list[ChartData]:
    """Split a trend chart into per-period sub-charts one rung finer.

    Periods are the actual calendar slices present in the filtered data,
    in chronological order; each sub-chart keeps the parent's chart id
    and carries its slice in ``period``.
    """
    if chart.granularity is Granularity.DISTRIBUTION:
        raise DrillDownError("distribution charts have no secondary layer")
    rows = readings.select(chart.attribute, building_filter)

    if chart.granularity is Granularity.YEARLY:
        period_of = lambda r: r.timestamp.year
        label_of = str
        key_fn = lambda r: r.timestamp.month
        bucket_label = lambda m: MONTH_LABELS[m - 1]
    elif chart.granularity is Granularity.MONTHLY:
        period_of = lambda r: (r.timestamp.year, r.timestamp.month)
        label_of = lambda p: f"{p[0]}-{p[1]:02d}"
        key_fn = lambda r: r.timestamp.isocalendar()[:2]
        bucket_label = lambda k: f"{k[0]}-W{k[1]:02d}"
    else:  # WEEKLY -> days of that ISO week
        period_of = lambda r: r.timestamp.isocalendar()[:2]
        label_of = lambda p: f"{p[0]}-W{p[1]:02d}"
        key_fn = lambda r: r.timestamp.date()
        bucket_label = lambda d: d.isoformat()

    by_period: dict = defaultdict(list)
    for r in rows:
        by_period[period_of(r)].append(r)
    return [ChartData(chart, series=_bucket_series(by_period[p], key_fn, bucket_label),
                      period=label_of(p))
            for p in sorted(by_period)]
