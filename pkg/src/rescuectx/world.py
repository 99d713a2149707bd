"""Domain model of the monitored area and its inhabitants.

``AreaConfig`` is the static part (trails, stations, thresholds) and is
immutable once loaded.  ``Tourist``, ``Group`` and ``Animal`` are the
dynamic part, owned and mutated by the simulator only.
"""

from __future__ import annotations

import datetime as dt
import enum
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .geo import (
    GeoPoint,
    GeometryError,
    LocalProjection,
    TrailPolyline,
    distance,
    position_at_arclength,
    project_onto_trail,
    segment_intersections,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DIFFICULTIES = ("D1", "D2", "D3", "D4")
AVALANCHE_LEVELS = ("A1", "A2", "A3", "A4", "A5")
SEASONS = ("Summer", "Winter")
DAY, NIGHT = "Day", "Night"


class ConfigError(ValueError):
    """Malformed configuration text; ``path`` names the offending entry."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationError(ValueError):
    """Well-formed configuration that breaks one or more invariants."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class PhoneMode(str, enum.Enum):
    GPS_CONSENT = "GpsConsent"
    BTS_ONLY = "BtsOnly"
    GPS_REFUSED = "GpsRefused"


class TouristState(str, enum.Enum):
    HIKING = "Hiking"
    LOST = "Lost"
    NO_MOTION = "NoMotion"
    RESCUED = "Rescued"
    EVACUATING = "Evacuating"
    DEPARTED = "Departed"


@dataclass(frozen=True)
class SpecialPlace:
    center: GeoPoint
    radius: float

    def contains(self, p: GeoPoint) -> bool:
        return distance(self.center, p) <= self.radius


@dataclass(frozen=True)
class Crossing:
    arclength: float
    other: str
    other_arclength: float
    point: GeoPoint


@dataclass(frozen=True)
class Trail:
    id: str
    polyline: TrailPolyline
    difficulty: str
    entry_points: tuple[float, ...] = ()
    special_places: tuple[SpecialPlace, ...] = ()

    @property
    def length(self) -> float:
        return self.polyline.length


@dataclass(frozen=True)
class WeatherStation:
    id: str
    location: GeoPoint
    influence_radius: float


@dataclass(frozen=True)
class BtsStation:
    id: str
    location: GeoPoint
    max_range: float
    path_loss_exponent: float = 3.0
    noise_sigma: float = 0.05
    reference_rssi: float = -40.0
    reference_distance: float = 1.0


@dataclass(frozen=True)
class Thresholds:
    wind: tuple[float, float] = (8.0, 17.0)
    visibility: tuple[float, float] = (1000.0, 200.0)
    temperature_summer: tuple[float, float] = (10.0, 0.0)
    temperature_winter: tuple[float, float] = (-5.0, -15.0)
    rain: tuple[float, float] = (2.0, 8.0)
    offtrail: float = 50.0
    accuracy: float = 100.0
    group_radius: float = 100.0
    comparability: float = 0.10
    entry_radius: float = 50.0
    signal_timeout: float = 600.0
    idle_radius: float = 30.0
    station_snap: float = 250.0


@dataclass(frozen=True)
class DetectorConfig:
    leader_distance: float = 200.0
    animal_distance: float = 50.0
    no_motion_seconds: float = 900.0


@dataclass(frozen=True)
class Schedule:
    summer_sunrise: dt.time = dt.time(5, 0)
    summer_sunset: dt.time = dt.time(20, 30)
    winter_sunrise: dt.time = dt.time(7, 15)
    winter_sunset: dt.time = dt.time(16, 0)


@dataclass(frozen=True)
class AreaConfig:
    name: str
    trails: tuple[Trail, ...]
    weather_stations: tuple[WeatherStation, ...]
    bts_stations: tuple[BtsStation, ...]
    bounds: tuple[float, float, float, float]
    thresholds: Thresholds = Thresholds()
    detectors: DetectorConfig = DetectorConfig()
    schedule: Schedule = Schedule()
    season: str = "Summer"
    date: dt.date = dt.date(2021, 9, 19)
    avalanche: str = "A1"
    origin_lat: float = 49.55
    origin_lon: float = 19.49
    warnings: tuple[str, ...] = ()
    crossings: dict[str, tuple[Crossing, ...]] = field(default_factory=dict, compare=False)
    station_trail: dict[str, tuple[str, float] | None] = field(default_factory=dict, compare=False)

    def trail(self, trail_id: str) -> Trail:
        return self._trail_index()[trail_id]

    def _trail_index(self) -> dict[str, Trail]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {t.id: t for t in self.trails}
            object.__setattr__(self, "_idx", idx)
        return idx

    @property
    def projection(self) -> LocalProjection:
        return LocalProjection(self.origin_lat, self.origin_lon)

    def in_bounds(self, p: GeoPoint) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= p.x <= x1 and y0 <= p.y <= y1

    def entry_locations(self) -> list[tuple[str, float, GeoPoint]]:
        out = []
        for t in self.trails:
            for s in t.entry_points:
                out.append((t.id, s, position_at_arclength(t.polyline, s)))
        return out


@dataclass
class Tourist:
    id: str
    phone_mode: PhoneMode
    trail_id: str
    arclength: float
    direction: int
    speed: float
    entered_at: float
    group_id: str | None = None
    state: TouristState = TouristState.HIKING
    departed_at: float | None = None
    offtrail_point: GeoPoint | None = None
    resume_at: float | None = None
    rescue_outcome: str | None = None


@dataclass
class Group:
    id: str
    member_ids: list[str]
    leader_id: str = ""

    def __post_init__(self) -> None:
        if len(self.member_ids) < 2:
            raise ValueError("a group has at least two members")
        if len(set(self.member_ids)) != len(self.member_ids):
            raise ValueError("group members must be distinct")
        if not self.leader_id:
            self.leader_id = self.member_ids[0]
        if self.leader_id not in self.member_ids:
            raise ValueError("the leader must be a group member")


@dataclass
class Animal:
    id: str
    location: GeoPoint
    speed: float
    heading: float
    dangerous: bool = True
    gps_equipped: bool = True


# ---------------------------------------------------------------------------
# loading

_SECTION_KEYS: dict[str, dict[str, tuple[type, ...]]] = {
    "area": {
        "name": (str,),
        "origin_lat": (float, int),
        "origin_lon": (float, int),
        "min_x": (float, int),
        "min_y": (float, int),
        "max_x": (float, int),
        "max_y": (float, int),
        "season": (str,),
        "date": (str, dt.date),
        "avalanche": (str,),
    },
    "schedule": {k: (str,) for k in Schedule.__dataclass_fields__},
    "thresholds": {
        **{k: (list,) for k in ("wind", "visibility", "temperature_summer", "temperature_winter", "rain")},
        **{
            k: (float, int)
            for k in (
                "offtrail",
                "accuracy",
                "group_radius",
                "comparability",
                "entry_radius",
                "signal_timeout",
                "idle_radius",
                "station_snap",
            )
        },
    },
    "detectors": {k: (float, int) for k in DetectorConfig.__dataclass_fields__},
    "trail": {
        "id": (str,),
        "difficulty": (str,),
        "points": (list,),
        "entry_points": (list,),
        "special_places": (list,),
    },
    "weather_station": {"id": (str,), "x": (float, int), "y": (float, int), "influence_radius": (float, int)},
    "bts_station": {
        "id": (str,),
        "x": (float, int),
        "y": (float, int),
        "max_range": (float, int),
        "path_loss_exponent": (float, int),
        "noise_sigma": (float, int),
        "reference_rssi": (float, int),
        "reference_distance": (float, int),
    },
}
_REQUIRED = {
    "area": ("min_x", "min_y", "max_x", "max_y"),
    "trail": ("id", "difficulty", "points"),
    "weather_station": ("id", "x", "y", "influence_radius"),
    "bts_station": ("id", "x", "y", "max_range"),
}
_TABLES = ("area", "schedule", "thresholds", "detectors")
_ARRAYS = ("trail", "weather_station", "bts_station")


def _check_table(path: str, section: str, table: Any) -> None:
    if not isinstance(table, dict):
        raise ConfigError(path, "expected a table")
    allowed = _SECTION_KEYS[section]
    for key, value in table.items():
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")
        types = allowed[key]
        if isinstance(value, bool) or not isinstance(value, types):
            raise ConfigError(f"{path}.{key}", f"expected {' or '.join(t.__name__ for t in types)}")
    for key in _REQUIRED.get(section, ()):
        if key not in table:
            raise ConfigError(f"{path}.{key}", "missing required key")


def _parse_time(path: str, text: str) -> dt.time:
    try:
        hh, mm = text.split(":")
        return dt.time(int(hh), int(mm))
    except ValueError:
        raise ConfigError(path, f"bad time {text!r}, expected HH:MM") from None


def _pair(path: str, value: list) -> tuple[float, float]:
    if len(value) != 2 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(path, "expected two numbers")
    return float(value[0]), float(value[1])


def load_area(text: str) -> AreaConfig:
    """Parse and validate an area description in TOML."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<document>", str(exc)) from None

    for key in doc:
        if key not in _TABLES and key not in _ARRAYS:
            raise ConfigError(key, "unknown section")
    for key in _TABLES:
        if key in doc:
            _check_table(key, key, doc[key])
    for key in _ARRAYS:
        entries = doc.get(key, [])
        if not isinstance(entries, list):
            raise ConfigError(key, "expected an array of tables")
        for i, entry in enumerate(entries):
            _check_table(f"{key}[{i}]", key, entry)
    if "area" not in doc:
        raise ConfigError("area", "missing section")

    problems: list[str] = []
    area = doc["area"]
    bounds = (float(area["min_x"]), float(area["min_y"]), float(area["max_x"]), float(area["max_y"]))
    if not (bounds[0] < bounds[2] and bounds[1] < bounds[3]):
        problems.append("area: empty bounding box")

    th_doc = doc.get("thresholds", {})
    th_kwargs: dict[str, Any] = {}
    for key, value in th_doc.items():
        if isinstance(value, list):
            th_kwargs[key] = _pair(f"thresholds.{key}", value)
        else:
            th_kwargs[key] = float(value)
    thresholds = Thresholds(**th_kwargs)
    for name, increasing in (
        ("wind", True),
        ("rain", True),
        ("visibility", False),
        ("temperature_summer", False),
        ("temperature_winter", False),
    ):
        lo, hi = getattr(thresholds, name)
        if (increasing and not lo < hi) or (not increasing and not lo > hi):
            problems.append(f"thresholds.{name}: must be strictly {'increasing' if increasing else 'decreasing'}")

    detectors = DetectorConfig(**{k: float(v) for k, v in doc.get("detectors", {}).items()})
    schedule = Schedule(
        **{k: _parse_time(f"schedule.{k}", v) for k, v in doc.get("schedule", {}).items()}
    )

    trails: list[Trail] = []
    for i, entry in enumerate(doc.get("trail", [])):
        path = f"trail[{i}]"
        try:
            coords = [_pair(f"{path}.points[{j}]", p) for j, p in enumerate(entry["points"])]
            poly = TrailPolyline.from_coords(coords)
        except GeometryError as exc:
            problems.append(f"{path}: {exc}")
            continue
        if entry["difficulty"] not in DIFFICULTIES:
            problems.append(f"{path}.difficulty: {entry['difficulty']!r} not in D1..D4")
        entries = []
        for j, e in enumerate(entry.get("entry_points", [])):
            if e == "start":
                entries.append(0.0)
            elif e == "end":
                entries.append(poly.length)
            elif isinstance(e, (int, float)) and not isinstance(e, bool):
                if not 0.0 <= e <= poly.length:
                    problems.append(f"{path}.entry_points[{j}]: outside [0, {poly.length:.1f}]")
                entries.append(float(e))
            else:
                raise ConfigError(f"{path}.entry_points[{j}]", "expected 'start', 'end' or a number")
        places = []
        for j, sp in enumerate(entry.get("special_places", [])):
            if not isinstance(sp, dict) or set(sp) != {"x", "y", "radius"}:
                raise ConfigError(f"{path}.special_places[{j}]", "expected {x, y, radius}")
            places.append(SpecialPlace(GeoPoint(float(sp["x"]), float(sp["y"])), float(sp["radius"])))
        trails.append(Trail(entry["id"], poly, entry["difficulty"], tuple(entries), tuple(places)))
    if not trails:
        problems.append("trail: at least one trail is required")
    if len({t.id for t in trails}) != len(trails):
        problems.append("trail: duplicate trail ids")

    weather = []
    for entry in doc.get("weather_station", []):
        weather.append(
            WeatherStation(entry["id"], GeoPoint(float(entry["x"]), float(entry["y"])), float(entry["influence_radius"]))
        )
    bts = []
    for entry in doc.get("bts_station", []):
        kwargs = {k: float(v) for k, v in entry.items() if k not in ("id", "x", "y")}
        bts.append(BtsStation(entry["id"], GeoPoint(float(entry["x"]), float(entry["y"])), **kwargs))

    if not weather:
        problems.append("weather_station: at least one weather station is required")
    for s in weather:
        if s.influence_radius <= 0:
            problems.append(f"weather_station {s.id}: influence_radius must be positive")
    for s in bts:
        if s.max_range <= 0:
            problems.append(f"bts_station {s.id}: max_range must be positive")
        if s.path_loss_exponent < 1:
            problems.append(f"bts_station {s.id}: path_loss_exponent must be >= 1")
    season = area.get("season", "Summer")
    if season not in SEASONS:
        problems.append(f"area.season: {season!r} not in {SEASONS}")
    avalanche = area.get("avalanche", "A1")
    if avalanche not in AVALANCHE_LEVELS:
        problems.append(f"area.avalanche: {avalanche!r} not in A1..A5")
    if problems:
        raise ValidationError(problems)

    date = area.get("date", dt.date(2021, 9, 19))
    if isinstance(date, str):
        try:
            date = dt.date.fromisoformat(date)
        except ValueError:
            raise ConfigError("area.date", f"bad date {date!r}") from None

    cfg = AreaConfig(
        name=area.get("name", "area"),
        trails=tuple(trails),
        weather_stations=tuple(weather),
        bts_stations=tuple(bts),
        bounds=bounds,
        thresholds=thresholds,
        detectors=detectors,
        schedule=schedule,
        season=season,
        date=date,
        avalanche=avalanche,
        origin_lat=float(area.get("origin_lat", 49.55)),
        origin_lon=float(area.get("origin_lon", 19.49)),
    )
    return finalize_area(cfg)


def finalize_area(cfg: AreaConfig) -> AreaConfig:
    """Compute derived lookups (crossings, station snapping, coverage warnings)."""
    crossings: dict[str, list[Crossing]] = {t.id: [] for t in cfg.trails}
    for i, a in enumerate(cfg.trails):
        for b in cfg.trails[i + 1 :]:
            for pt, sa, sb in segment_intersections(a.polyline, b.polyline):
                crossings[a.id].append(Crossing(sa, b.id, sb, pt))
                crossings[b.id].append(Crossing(sb, a.id, sa, pt))
    station_trail: dict[str, tuple[str, float] | None] = {}
    for s in cfg.weather_stations:
        best = None
        for t in cfg.trails:
            pr = project_onto_trail(s.location, t.polyline)
            if pr.distance <= cfg.thresholds.station_snap and (best is None or pr.distance < best[2]):
                best = (t.id, pr.arclength, pr.distance)
        station_trail[s.id] = (best[0], best[1]) if best else None
    warnings = list(cfg.warnings)
    for t in cfg.trails:
        n = max(2, int(t.length // 50.0) + 1)
        for k in range(n):
            p = position_at_arclength(t.polyline, t.length * k / (n - 1))
            reach = sum(1 for b in cfg.bts_stations if distance(b.location, p) <= b.max_range)
            if reach < 2:
                warnings.append(f"trail {t.id}: fewer than 2 BTS stations reach arclength {t.length * k / (n - 1):.0f} m")
                break
        for p in t.polyline.points:
            if not cfg.in_bounds(p):
                warnings.append(f"trail {t.id}: point ({p.x}, {p.y}) outside area bounds")
                break
    object.__setattr__(cfg, "crossings", {k: tuple(sorted(v, key=lambda c: c.arclength)) for k, v in crossings.items()})
    object.__setattr__(cfg, "station_trail", station_trail)
    object.__setattr__(cfg, "warnings", tuple(warnings))
    return cfg


def load_area_file(path: str | Path) -> AreaConfig:
    return load_area(Path(path).read_text(encoding="utf-8"))


def default_area() -> AreaConfig:
    text = resources.files("rescuectx").joinpath("data/default_area.toml").read_text(encoding="utf-8")
    return load_area(text)


def _seconds(t: dt.time) -> int:
    return t.hour * 3600 + t.minute * 60 + t.second


def parse_clock(value: str | dt.time | float | int) -> float:
    """Seconds since midnight from ``"HH:MM"``, a ``time`` or a number."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        value = _parse_time("clock", value)
    return float(_seconds(value))


def day_night(clock: str | dt.time | float, config: AreaConfig, season: str | None = None) -> str:
    """Day on the half-open interval [sunrise, sunset), Night otherwise."""
    season = season or config.season
    sched = config.schedule
    if season == "Winter":
        rise, sset = _seconds(sched.winter_sunrise), _seconds(sched.winter_sunset)
    else:
        rise, sset = _seconds(sched.summer_sunrise), _seconds(sched.summer_sunset)
    sec = math.fmod(parse_clock(clock), 86400.0)
    if sec < 0:
        sec += 86400.0
    return DAY if rise <= sec < sset else NIGHT
