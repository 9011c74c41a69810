import random
from datetime import date

import pytest

from conftest import make_cube
from gantryflow.model import UnknownCorridor, VehicleType, Weekday
from gantryflow.views import (
    NoData,
    ViewFilters,
    avg_travel_time,
    best_departure,
    compare_totals,
    hourly_distribution,
    matrix_to_csv_text,
    vehicle_type_counts,
    weekday_hour_counts,
)


def test_hourly_single_peak_at_16():
    cube = make_cube({("NF03-S", "2018-09-03", 16, 31): (120, 100_000)})
    profile = hourly_distribution(cube, "NF03-S")
    assert len(profile.counts) == 24
    assert profile.counts.index(max(profile.counts)) == 16
    assert profile.total() == 120


def test_hourly_empty_cube_is_zeros():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (1, 840)})
    cube.cells.clear()
    assert hourly_distribution(cube, "NF01-N").counts == (0,) * 24


def test_hourly_unknown_corridor():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (1, 840)})
    with pytest.raises(UnknownCorridor):
        hourly_distribution(cube, "NF09-X")


def test_hourly_vehicle_filter():
    cube = make_cube({
        ("NF01-N", "2018-09-03", 8, 31): (10, 8400),
        ("NF01-N", "2018-09-03", 8, 5): (4, 4000),
    })
    cars = hourly_distribution(cube, "NF01-N", ViewFilters(vehicle_types=frozenset({31})))
    assert cars.counts[8] == 10
    assert cars.total() == 10


def test_hourly_date_filter():
    cube = make_cube({
        ("NF01-N", "2018-09-03", 8, 31): (10, 8400),
        ("NF01-N", "2018-09-20", 8, 31): (7, 5600),
    })
    early = hourly_distribution(
        cube, "NF01-N", ViewFilters(date_from=date(2018, 9, 1), date_to=date(2018, 9, 10))
    )
    assert early.total() == 10


def test_weekday_matrix_single_cell():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (5, 4200)})  # a Monday
    matrix = weekday_hour_counts(cube, "NF01-N")
    assert matrix.values[Weekday.MON][8] == 5
    assert matrix.total() == 5
    flat = [v for row in matrix.values for v in row]
    assert sum(1 for v in flat if v) == 1


def test_matrix_total_equals_hourly_total():
    rng = random.Random(1)
    cells = {}
    for day in range(1, 31):
        for hour in (6, 8, 16):
            for code in (31, 32):
                cells[("NF03-S", f"2018-09-{day:02d}", hour, code)] = (
                    rng.randint(1, 50), rng.randint(600, 2000),
                )
    cube = make_cube(cells)
    hourly = hourly_distribution(cube, "NF03-S")
    matrix = weekday_hour_counts(cube, "NF03-S")
    types = vehicle_type_counts(cube, "NF03-S")
    assert matrix.total() == hourly.total() == cube.total_count("NF03-S")
    assert sum(p.total() for p in types.values()) == hourly.total()
    # per-hour conservation across the type split
    for h in range(24):
        assert sum(p.counts[h] for p in types.values()) == hourly.counts[h]


def test_weekend_rows_dominate_when_rates_doubled():
    cells = {}
    for day in range(1, 31):
        weekday = date(2018, 9, day).weekday()
        count = 20 if weekday >= 5 else 10  # Sat/Sun doubled
        cells[("NF01-S", f"2018-09-{day:02d}", 10, 31)] = (count, count * 900)
    cube = make_cube(cells)
    matrix = weekday_hour_counts(cube, "NF01-S")
    row_sums = [sum(row) for row in matrix.values]
    # September 2018: 4 of Mon..Fri occurrences except Sat/Sun have 5
    for weekend in (Weekday.SAT, Weekday.SUN):
        for workday in (Weekday.MON, Weekday.TUE, Weekday.WED, Weekday.THU, Weekday.FRI):
            assert row_sums[weekend] > row_sums[workday]


def test_vehicle_type_single_code():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (3, 2520)})
    types = vehicle_type_counts(cube, "NF01-N")
    assert list(types) == [VehicleType.of(31)]
    assert types[VehicleType.of(31)].counts[8] == 3


def test_vehicle_type_unknown_code_preserved():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 99): (2, 1200)})
    types = vehicle_type_counts(cube, "NF01-N")
    (vt,) = types
    assert vt.code == 99
    assert vt.label == "Unknown(99)"


def test_avg_travel_time_example():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (4, 3360)})
    profile = avg_travel_time(cube, "NF01-N", min_samples=1)
    assert profile.minutes[Weekday.MON][8] == 14.0  # 3360/4/60


def test_avg_travel_time_min_samples():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (4, 3360)})
    profile = avg_travel_time(cube, "NF01-N", min_samples=5)
    assert profile.minutes[Weekday.MON][8] is None


def test_avg_travel_time_aggregates_types_and_dates():
    # same weekday (Mondays 3rd and 10th), mixed vehicle types
    cube = make_cube({
        ("NF01-N", "2018-09-03", 8, 31): (2, 1680),
        ("NF01-N", "2018-09-10", 8, 5): (2, 2000),
    })
    profile = avg_travel_time(cube, "NF01-N", min_samples=4)
    assert profile.minutes[Weekday.MON][8] == round(3680 / 4 / 60, 1)


def test_avg_travel_time_reproducible_from_cells():
    rng = random.Random(9)
    cells = {}
    for day in range(1, 15):
        cells[("NF03-N", f"2018-09-{day:02d}", 9, 31)] = (
            rng.randint(5, 40), rng.randint(5000, 40000),
        )
    cube = make_cube(cells)
    profile = avg_travel_time(cube, "NF03-N", min_samples=1)
    for weekday in Weekday:
        count = sum(
            c for (cid, d, h, code), (c, s) in cells.items()
            if date.fromisoformat(d).weekday() == weekday
        )
        total = sum(
            s for (cid, d, h, code), (c, s) in cells.items()
            if date.fromisoformat(d).weekday() == weekday
        )
        entry = profile.minutes[weekday][9]
        if count:
            assert entry is not None
            assert abs(entry - total / count / 60) <= 0.05  # rounding bound
        else:
            assert entry is None


def test_best_departure_picks_minimum():
    cube = make_cube({
        ("NF01-N", "2018-09-03", 5, 31): (10, 10 * 720),   # 12.0 min
        ("NF01-N", "2018-09-03", 16, 31): (10, 10 * 1080),  # 18.0 min
    })
    assert best_departure(cube, "NF01-N", Weekday.MON, range(0, 24)) == (5, 12.0)


def test_best_departure_tie_breaks_earliest():
    cube = make_cube({
        ("NF01-N", "2018-09-03", 8, 31): (10, 10 * 780),  # 13.0
        ("NF01-N", "2018-09-03", 9, 31): (10, 10 * 780),  # 13.0
    })
    assert best_departure(cube, "NF01-N", Weekday.MON, range(0, 24)) == (8, 13.0)


def test_best_departure_no_data():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (2, 1400)})  # below floor
    with pytest.raises(NoData):
        best_departure(cube, "NF01-N", Weekday.MON, range(0, 24), min_samples=5)
    with pytest.raises(NoData):  # wrong weekday
        best_departure(cube, "NF01-N", Weekday.TUE, range(0, 24), min_samples=1)


def test_best_departure_window_validation():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (10, 8000)})
    with pytest.raises(ValueError):
        best_departure(cube, "NF01-N", Weekday.MON, [])
    with pytest.raises(ValueError):
        best_departure(cube, "NF01-N", Weekday.MON, [22, 25])


def test_best_departure_respects_window():
    cube = make_cube({
        ("NF01-N", "2018-09-03", 3, 31): (10, 10 * 600),   # 10.0 min, outside window
        ("NF01-N", "2018-09-03", 9, 31): (10, 10 * 900),   # 15.0 min
    })
    assert best_departure(cube, "NF01-N", Weekday.MON, range(6, 21)) == (9, 15.0)


def test_compare_totals_monthly_scale():
    # totals at the scale of real monthly freeway counts
    cube = make_cube({
        ("NF01-N", "2018-09-03", 8, 31): (681_435, 681_435 * 900),
        ("NF03-N", "2018-09-03", 8, 31): (817_154, 817_154 * 900),
    })
    cmp = compare_totals(cube, "NF01-N", "NF03-N")
    assert (cmp.total_a, cmp.total_b) == (681_435, 817_154)
    assert cmp.busier == "NF03-N"


def test_compare_totals_equal_and_empty():
    cube = make_cube(
        {("NF01-N", "2018-09-03", 8, 31): (5, 4500)},
        corridor_ids=("NF01-N", "NF01-S"),
    )
    assert compare_totals(cube, "NF01-N", "NF01-S").busier == "NF01-N"
    cube2 = make_cube({
        ("NF01-N", "2018-09-03", 8, 31): (5, 4500),
        ("NF01-S", "2018-09-03", 9, 31): (5, 4200),
    })
    assert compare_totals(cube2, "NF01-N", "NF01-S").busier is None


def test_holiday_grouped_as_weekend_when_enabled():
    # 2018-09-24 is a Monday and the default holiday
    cube = make_cube({("NF01-N", "2018-09-24", 10, 31): (7, 6300)})
    plain = weekday_hour_counts(cube, "NF01-N")
    assert plain.values[Weekday.MON][10] == 7
    grouped = weekday_hour_counts(
        cube, "NF01-N", ViewFilters(holidays_as_weekend=True)
    )
    assert grouped.values[Weekday.SUN][10] == 7
    assert grouped.values[Weekday.MON][10] == 0
    assert grouped.total() == plain.total()


def test_matrix_csv_shape():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (5, 4500)})
    text = matrix_to_csv_text(weekday_hour_counts(cube, "NF01-N"))
    lines = text.strip().split("\n")
    assert lines[0] == "weekday," + ",".join(str(h) for h in range(24))
    assert len(lines) == 8
    assert lines[1].startswith("Mon,")
    # avg profile: absent cells are empty fields
    avg_text = matrix_to_csv_text(avg_travel_time(cube, "NF01-N", min_samples=1))
    assert avg_text.splitlines()[1].split(",")[9] == "15.0"  # 4500/5/60


def test_view_json_dict_shapes():
    cube = make_cube({("NF01-N", "2018-09-03", 8, 31): (5, 4500)})
    hourly = hourly_distribution(cube, "NF01-N").to_json_dict()
    assert list(hourly) == ["corridor", "vehicle_types", "counts", "total"]
    assert len(hourly["counts"]) == 24
    heat = weekday_hour_counts(cube, "NF01-N").to_json_dict()
    assert heat["weekdays"] == ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]
    assert len(heat["values"]) == 7
