"""Aggregation tests against a naive group-by oracle."""

import random
from collections import defaultdict
from datetime import datetime, timedelta, timezone

import pytest

from proxydash.charts import (CHART_UNIVERSE, ChartId, DrillDownError,
                              Granularity, aggregate, drill_down)
from proxydash.dataset import Attribute, Reading, ReadingSet


def make_readings(n=1000, seed=7, buildings=("B1", "B2", "B3")):
    rng = random.Random(seed)
    t0 = datetime(2016, 1, 1, tzinfo=timezone.utc)
    span_hours = 2 * 365 * 24
    rows = []
    for _ in range(n):
        rows.append(Reading(
            building=rng.choice(buildings),
            attribute=rng.choice(list(Attribute)),
            timestamp=t0 + timedelta(hours=rng.randrange(span_hours)),
            value=rng.uniform(0, 500),
        ))
    # De-duplicate identical keys the blunt way for oracle clarity.
    seen = {}
    for r in rows:
        seen[(r.building, r.attribute, r.timestamp)] = r
    return ReadingSet(sorted(seen.values(),
                             key=lambda r: (r.building, r.attribute.value,
                                            r.timestamp)))


def oracle_means(readings, attribute, key_fn, buildings=None):
    """Brute-force (building, key) -> mean, independent of the aggregator."""
    groups = defaultdict(list)
    for r in readings:
        if r.attribute is not attribute:
            continue
        if buildings and r.building not in buildings:
            continue
        groups[(r.building, key_fn(r))].append(r.value)
    return {k: sum(v) / len(v) for k, v in groups.items()}


def test_chart_universe_cardinality():
    assert len(CHART_UNIVERSE) == 12
    assert len(set(CHART_UNIVERSE)) == 12


def test_single_reading_yearly_bucket():
    rs = ReadingSet([Reading("B1", Attribute.WATER,
                             datetime(2016, 5, 1, tzinfo=timezone.utc), 42.0)])
    cd = aggregate(rs, ChartId(Attribute.WATER, Granularity.YEARLY))
    assert cd.series == (("B1", (("2016", 42.0),)),)


def test_empty_filter_equals_all_buildings():
    rs = make_readings()
    for chart in CHART_UNIVERSE:
        assert aggregate(rs, chart, ()) == aggregate(rs, chart, rs.buildings())


def test_no_matching_readings_is_empty_not_error():
    rs = make_readings()
    cd = aggregate(rs, ChartId(Attribute.WATER, Granularity.YEARLY), ("ZZ",))
    assert cd.series == () and cd.histogram is None


@pytest.mark.parametrize("granularity,key_fn", [
    (Granularity.YEARLY, lambda r: r.timestamp.year),
    (Granularity.MONTHLY, lambda r: r.timestamp.month),
    (Granularity.WEEKLY, lambda r: r.timestamp.isoweekday()),
])
def test_bucket_means_match_group_by_oracle(granularity, key_fn):
    rs = make_readings()
    for attribute in Attribute:
        cd = aggregate(rs, ChartId(attribute, granularity))
        want = oracle_means(rs, attribute, key_fn)
        got_pairs = sum(len(buckets) for _, buckets in cd.series)
        assert got_pairs == len(want)
        label_to_key = {}
        for (b, key), mean in want.items():
            label_to_key.setdefault(b, {})[key] = mean
        for building, buckets in cd.series:
            keys = sorted(label_to_key[building])
            assert len(buckets) == len(keys)
            for (label, got), key in zip(buckets, keys):
                assert got == pytest.approx(label_to_key[building][key], abs=1e-9)


def test_bucket_order_is_chronological():
    rs = make_readings()
    cd = aggregate(rs, ChartId(Attribute.WATER, Granularity.MONTHLY))
    month_order = ["Jan", "Feb", "Mar", "Apr", "May", "Jun",
                   "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]
    for _, buckets in cd.series:
        labels = [b[0] for b in buckets]
        assert labels == sorted(labels, key=month_order.index)


def test_histogram_conservation_and_bins():
    rs = make_readings()
    for attribute in Attribute:
        cd = aggregate(rs, ChartId(attribute, Granularity.DISTRIBUTION))
        n_rows = len(rs.select(attribute))
        assert sum(c for _, _, c in cd.histogram) == n_rows
        assert len(cd.histogram) == 12
        expected_width = (cd.histogram[-1][1] - cd.histogram[0][0]) / 12
        for lo, hi, _ in cd.histogram:
            assert hi - lo == pytest.approx(expected_width, rel=1e-9)


def test_histogram_degenerate_single_value():
    t = datetime(2016, 1, 1, tzinfo=timezone.utc)
    rs = ReadingSet([Reading("B1", Attribute.WATER, t + timedelta(hours=k), 5.0)
                     for k in range(10)])
    cd = aggregate(rs, ChartId(Attribute.WATER, Granularity.DISTRIBUTION))
    assert cd.histogram == ((5.0, 5.0, 10),)


def test_distribution_has_no_drill_down():
    rs = make_readings()
    with pytest.raises(DrillDownError, match="no secondary layer"):
        drill_down(ChartId(Attribute.WATER, Granularity.DISTRIBUTION), rs)


def test_yearly_drill_down_two_years():
    rs = make_readings()
    subs = drill_down(ChartId(Attribute.WATER, Granularity.YEARLY), rs)
    assert [cd.period for cd in subs] == ["2016", "2017"]
    # Sub-chart buckets must match a brute-force mean over the year slice.
    for cd in subs:
        year = int(cd.period)
        want = oracle_means(
            [r for r in rs if r.timestamp.year == year],
            Attribute.WATER, lambda r: r.timestamp.month)
        for building, buckets in cd.series:
            keys = sorted(k for (b, k) in want if b == building)
            assert len(buckets) == len(keys)
            for (label, got), key in zip(buckets, keys):
                assert got == pytest.approx(want[(building, key)], abs=1e-9)


def test_monthly_drill_down_single_month():
    t0 = datetime(2016, 3, 1, tzinfo=timezone.utc)
    rs = ReadingSet([Reading("B1", Attribute.EMISSION, t0 + timedelta(days=d), 10.0 + d)
                     for d in range(28)])
    subs = drill_down(ChartId(Attribute.EMISSION, Granularity.MONTHLY), rs)
    assert len(subs) == 1
    assert subs[0].period == "2016-03"
    # Weeks inside the month, chronological.
    labels = [b[0] for b in subs[0].series[0][1]]
    assert labels == sorted(labels)


def test_weekly_drill_down_days_of_week():
    t0 = datetime(2016, 3, 7, tzinfo=timezone.utc)  # a Monday
    rs = ReadingSet([Reading("B1", Attribute.WATER, t0 + timedelta(days=d), float(d))
                     for d in range(7)])
    subs = drill_down(ChartId(Attribute.WATER, Granularity.WEEKLY), rs)
    assert len(subs) == 1
    buckets = subs[0].series[0][1]
    assert [b[0] for b in buckets] == [
        (t0 + timedelta(days=d)).date().isoformat() for d in range(7)]
    assert [b[1] for b in buckets] == [float(d) for d in range(7)]


def test_drill_down_respects_filter():
    rs = make_readings()
    subs = drill_down(ChartId(Attribute.WATER, Granularity.YEARLY), rs, ("B1",))
    for cd in subs:
        assert all(b == "B1" for b, _ in cd.series)


def test_filter_monotonicity_against_brute_force():
    # Aggregation with filter F must use exactly the readings whose
    # building is in F; checked against the independent group-by.
    rs = make_readings(n=2000, seed=9)
    for flt in ((), ("B1",), ("B1", "B3"), ("B1", "B2", "B3")):
        want = oracle_means(rs, Attribute.EMISSION,
                            lambda r: r.timestamp.year,
                            buildings=set(flt) or None)
        cd = aggregate(rs, ChartId(Attribute.EMISSION, Granularity.YEARLY), flt)
        got = {(b, int(label)): mean
               for b, buckets in cd.series for label, mean in buckets}
        assert got.keys() == want.keys()
        for key, mean in want.items():
            assert got[key] == pytest.approx(mean, abs=1e-9)
