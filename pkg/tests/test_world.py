import dataclasses
import datetime as dt

import pytest

from rescuectx.world import (
    DIFFICULTIES,
    ConfigError,
    Group,
    Schedule,
    ValidationError,
    day_night,
    default_area,
    load_area,
    parse_clock,
)

from helpers import MINI_AREA


def test_default_area_has_eight_trails():
    area = default_area()
    assert len(area.trails) == 8
    assert all(t.difficulty in DIFFICULTIES for t in area.trails)
    assert area.weather_stations
    assert not area.warnings


def test_default_area_entry_points_within_trails():
    for t in default_area().trails:
        assert all(0.0 <= s <= t.length for s in t.entry_points)


def test_empty_trail_list_is_rejected():
    text = MINI_AREA.split("[[trail]]")[0] + "[[weather_station]]" + MINI_AREA.split("[[weather_station]]")[1]
    with pytest.raises(ValidationError) as exc:
        load_area(text)
    assert any("trail" in p for p in exc.value.problems)


def test_one_point_trail_is_rejected():
    text = MINI_AREA.replace("points = [[100, 500], [1900, 500]]", "points = [[100, 500]]")
    with pytest.raises(ValidationError):
        load_area(text)


def test_validation_lists_every_problem():
    text = MINI_AREA.replace('difficulty = "D2"', 'difficulty = "D9"').replace(
        "influence_radius = 5000.0", "influence_radius = -1.0")
    with pytest.raises(ValidationError) as exc:
        load_area(text)
    assert len(exc.value.problems) == 2


def test_unknown_key_reports_path():
    with pytest.raises(ConfigError) as exc:
        load_area(MINI_AREA.replace("max_range = 5000.0\nnoise_sigma = 0.0\n\n[[bts_station]]\nid = \"B2\"",
                                    "max_range = 5000.0\ncolour = 1\n\n[[bts_station]]\nid = \"B2\"", 1))
    assert "bts_station[0]" in str(exc.value)
    with pytest.raises(ConfigError):
        load_area("[bogus]\nx = 1\n")
    with pytest.raises(ConfigError):
        load_area("not toml = = =")


def test_sparse_bts_coverage_warns():
    text = MINI_AREA.replace("max_range = 5000.0", "max_range = 300.0")
    area = load_area(text)
    assert any("fewer than 2 BTS" in w for w in area.warnings)


@pytest.fixture
def area_6_20():
    return dataclasses.replace(
        load_area(MINI_AREA), schedule=Schedule(summer_sunrise=dt.time(6), summer_sunset=dt.time(20))
    )


def test_day_night_examples(area_6_20):
    assert day_night("14:00", area_6_20) == "Day"
    assert day_night("23:00", area_6_20) == "Night"
    assert day_night("20:00", area_6_20) == "Night"
    assert day_night("06:00", area_6_20) == "Day"
    assert day_night(parse_clock("05:59") + 86400, area_6_20) == "Night"


def test_winter_schedule_is_shorter():
    area = default_area()
    assert day_night("17:00", area, "Summer") == "Day"
    assert day_night("17:00", area, "Winter") == "Night"


def test_group_leader_defaults_to_first_member():
    assert Group("G1", ["a", "b"]).leader_id == "a"
    with pytest.raises(ValueError):
        Group("G1", ["a"])
    with pytest.raises(ValueError):
        Group("G1", ["a", "a"])
    with pytest.raises(ValueError):
        Group("G1", ["a", "b"], leader_id="c")
