"""Raw sensor data to located, tagged context (algorithms A1 and A2).

A1 turns BTS signal strengths and optional GPS fixes into one position per
phone, assigns it to a trail and tracks arrivals/departures.  A2 bins raw
weather readings into W/F/T/R tags and picks the station whose data applies
to a given tourist.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .broker import WeatherReading
from .geo import (
    GeoPoint,
    circle_intersection,
    closest_circle_point,
    distance,
    position_at_arclength,
    project_onto_trail,
)
from .world import AreaConfig, BtsStation, Thresholds, WeatherStation

GPS_ACCURACY = 5.0
MIN_BTS_ACCURACY = 10.0


class FixSource(str, enum.Enum):
    GPS = "Gps"
    BTS = "BtsTrilateration"
    GROUP = "GroupImproved"


class UnlocatableError(ValueError):
    """Fewer than two BTS measurements and no GPS fix."""


class DataError(ValueError):
    """A raw reading that cannot be tagged (non-finite value)."""


@dataclass(frozen=True, slots=True)
class GeoFix:
    tourist_id: str
    point: GeoPoint
    source: FixSource
    accuracy: float
    timestamp: float


@dataclass(frozen=True, slots=True)
class LowAccuracyEvent:
    tourist_id: str
    station_id: str
    mismatch: float
    timestamp: float


@dataclass(frozen=True, slots=True)
class WeatherTags:
    wind: str
    fog: str
    temperature: str
    rain: str

    def atoms(self) -> tuple[str, str, str, str]:
        return (self.wind, self.fog, self.temperature, self.rain)


# --- signal model -----------------------------------------------------------

def expected_rssi(station: BtsStation, d: float) -> float:
    """Log-distance path loss: received power at distance ``d`` meters."""
    d = max(d, station.reference_distance)
    return station.reference_rssi - 10.0 * station.path_loss_exponent * math.log10(d / station.reference_distance)


def rssi_to_distance(station: BtsStation, rssi: float) -> float:
    return station.reference_distance * 10.0 ** (
        (station.reference_rssi - rssi) / (10.0 * station.path_loss_exponent)
    )


# --- A1 ---------------------------------------------------------------------

def a1_geolocate(
    tourist_id: str,
    bts: Sequence[tuple[BtsStation, float]],
    gps: GeoPoint | None,
    previous: GeoFix | None,
    timestamp: float,
    accuracy_threshold: float = 100.0,
) -> tuple[GeoFix, LowAccuracyEvent | None]:
    """Locate one phone for one cycle.

    GPS always wins when present.  Otherwise the two strongest stations'
    circles are intersected and the third-strongest station picks between
    the candidates; its distance mismatch drives the low-accuracy report.
    """
    if gps is not None:
        return GeoFix(tourist_id, gps, FixSource.GPS, GPS_ACCURACY, timestamp), None
    if len(bts) < 2:
        raise UnlocatableError(f"{tourist_id}: {len(bts)} BTS measurement(s) and no GPS")

    ranked = sorted(bts, key=lambda m: (-m[1], m[0].id))
    (s1, q1), (s2, q2) = ranked[0], ranked[1]
    r1, r2 = rssi_to_distance(s1, q1), rssi_to_distance(s2, q2)
    candidates = circle_intersection(s1.location, r1, s2.location, r2)
    if not candidates:
        candidates = [closest_circle_point(s1.location, r1, s2.location, r2)]

    event = None
    if len(ranked) >= 3:
        s3, q3 = ranked[2]
        r3 = rssi_to_distance(s3, q3)
        errors = [abs(distance(c, s3.location) - r3) for c in candidates]
        k = min(range(len(candidates)), key=lambda i: (errors[i], i))
        if len(candidates) == 2 and abs(errors[0] - errors[1]) <= accuracy_threshold and len(ranked) > 3:
            # the third station barely separates the mirror points; let the rest vote
            rest = [(s, rssi_to_distance(s, q)) for s, q in ranked[3:]]
            spread = [sum(abs(distance(c, s.location) - r) for s, r in rest) for c in candidates]
            if abs(spread[0] - spread[1]) > accuracy_threshold:
                k = 0 if spread[0] < spread[1] else 1
        point, mismatch = candidates[k], errors[k]
        if mismatch > accuracy_threshold:
            event = LowAccuracyEvent(tourist_id, s3.id, mismatch, timestamp)
        accuracy = max(MIN_BTS_ACCURACY, mismatch)
    else:
        if previous is not None and len(candidates) == 2:
            k = min(range(2), key=lambda i: (distance(candidates[i], previous.point), i))
        else:
            k = 0
        point = candidates[k]
        accuracy = accuracy_threshold
    return GeoFix(tourist_id, point, FixSource.BTS, accuracy, timestamp), event


@dataclass(frozen=True, slots=True)
class RouteAssignment:
    trail_id: str
    arclength: float
    off_trail: bool
    distance: float


def assign_route(
    point: GeoPoint, area: AreaConfig, previous_trail: str | None = None, offtrail: float | None = None
) -> RouteAssignment:
    """Nearest trail, sticky to the previous trail while within the off-trail band."""
    limit = area.thresholds.offtrail if offtrail is None else offtrail
    if previous_trail is not None:
        pr = project_onto_trail(point, area.trail(previous_trail).polyline)
        if pr.distance <= limit:
            return RouteAssignment(previous_trail, pr.arclength, False, pr.distance)
    best = None
    for trail in area.trails:
        pr = project_onto_trail(point, trail.polyline)
        if best is None or pr.distance < best[1].distance:
            best = (trail.id, pr)
    assert best is not None
    tid, pr = best
    return RouteAssignment(tid, pr.arclength, pr.distance > limit, pr.distance)


def improve_with_group(
    fix: GeoFix,
    anchor: GeoFix,
    anchor_route: RouteAssignment,
    area: AreaConfig,
    group_radius: float | None = None,
) -> GeoFix | None:
    """Pull a BTS fix toward a co-member's GPS position along that member's trail.

    Returns ``None`` when the fix is not BTS-based or the member is farther
    than ``group_radius``.
    """
    radius = area.thresholds.group_radius if group_radius is None else group_radius
    if fix.source is not FixSource.BTS or anchor.source is not FixSource.GPS:
        return None
    if distance(fix.point, anchor.point) > radius:
        return None
    trail = area.trail(anchor_route.trail_id)
    own = project_onto_trail(fix.point, trail.polyline)
    s = 0.5 * (own.arclength + anchor_route.arclength)
    point = position_at_arclength(trail.polyline, min(max(s, 0.0), trail.length))
    return GeoFix(fix.tourist_id, point, FixSource.GROUP, 0.5 * (fix.accuracy + anchor.accuracy), fix.timestamp)


# --- A2 ---------------------------------------------------------------------

def _bin_up(value: float, lo: float, hi: float) -> int:
    return 1 if value < lo else (2 if value < hi else 3)


def _bin_down(value: float, lo: float, hi: float) -> int:
    return 1 if value > lo else (2 if value > hi else 3)


def a2_tag_weather(reading: WeatherReading, thresholds: Thresholds, season: str = "Summer") -> WeatherTags:
    """Bin a raw reading into three levels per factor.

    Wind and rain bins are half-open ``[lo, hi)`` going up; visibility and
    temperature are mirrored (lower value, higher level).
    """
    values = (reading.wind, reading.visibility, reading.temperature, reading.rain)
    if not all(math.isfinite(v) for v in values):
        raise DataError(f"non-finite reading from {reading.station_id}: {values}")
    temp = thresholds.temperature_winter if season == "Winter" else thresholds.temperature_summer
    return WeatherTags(
        f"W{_bin_up(reading.wind, *thresholds.wind)}",
        f"F{_bin_down(reading.visibility, *thresholds.visibility)}",
        f"T{_bin_down(reading.temperature, *temp)}",
        f"R{_bin_up(reading.rain, *thresholds.rain)}",
    )


@dataclass(frozen=True, slots=True)
class StationChoice:
    station_id: str
    in_range: int


def select_station(
    position: GeoPoint,
    trail_id: str | None,
    heading: tuple[float, float],
    area: AreaConfig,
    stations: Iterable[WeatherStation] | None = None,
) -> StationChoice:
    """Pick the weather station whose readings apply to a tourist.

    Among stations whose influence circle covers the tourist, those on the
    tourist's own trail are preferred, then the nearest; when the two
    nearest are within the comparability band the one ahead in the travel
    direction wins.  With no station in range the global nearest is used.
    """
    pool_all = list(area.weather_stations if stations is None else stations)
    measured = [(distance(s.location, position), i, s) for i, s in enumerate(pool_all)]
    in_range = [m for m in measured if m[0] <= m[2].influence_radius]
    if not in_range:
        nearest = min(measured, key=lambda m: (m[0], m[1]))
        return StationChoice(nearest[2].id, 0)
    on_trail = [
        m for m in in_range if trail_id is not None and (area.station_trail.get(m[2].id) or (None,))[0] == trail_id
    ]
    pool = sorted(on_trail or in_range, key=lambda m: (m[0], m[1]))
    pick = pool[0]
    if len(pool) >= 2:
        d0, d1 = pool[0][0], pool[1][0]
        if d1 - d0 < area.thresholds.comparability * d1:
            hx, hy = heading
            ahead = [
                m for m in pool[:2] if (m[2].location.x - position.x) * hx + (m[2].location.y - position.y) * hy > 0
            ]
            if len(ahead) == 1:
                pick = ahead[0]
    return StationChoice(pick[2].id, len(in_range))


# --- arrivals and departures -------------------------------------------------

@dataclass(frozen=True, slots=True)
class TrackEvent:
    kind: str  # "arrival" | "departure"
    tourist_id: str
    timestamp: float
    reason: str = ""


class ArrivalTracker:
    """Turns a stream of fixes into arrival and departure events.

    A tourist arrives with its first in-bounds fix and departs either by
    reaching an entry-point region after having left it, or when fixes stop
    for longer than the signal timeout.
    """

    def __init__(self, area: AreaConfig):
        self.area = area
        self._entries = [p for _, _, p in area.entry_locations()]
        self._radius = area.thresholds.entry_radius
        self._timeout = area.thresholds.signal_timeout
        self._last_seen: dict[str, float] = {}
        self._left_entry: dict[str, bool] = {}
        self.departed: set[str] = set()
        self.arrivals = 0
        self.departures = 0

    @property
    def present(self) -> set[str]:
        return set(self._last_seen)

    def _at_entry(self, p: GeoPoint) -> bool:
        return any(distance(p, e) <= self._radius for e in self._entries)

    def observe(self, tourist_id: str, point: GeoPoint, timestamp: float) -> list[TrackEvent]:
        if tourist_id in self.departed:
            return []
        at_entry = self._at_entry(point)
        if tourist_id not in self._last_seen:
            if not self.area.in_bounds(point):
                return []
            self._last_seen[tourist_id] = timestamp
            self._left_entry[tourist_id] = not at_entry
            self.arrivals += 1
            return [TrackEvent("arrival", tourist_id, timestamp)]
        self._last_seen[tourist_id] = timestamp
        if at_entry and self._left_entry[tourist_id]:
            self._depart(tourist_id)
            return [TrackEvent("departure", tourist_id, timestamp, "exit")]
        if not at_entry:
            self._left_entry[tourist_id] = True
        return []

    def sweep(self, now: float) -> list[TrackEvent]:
        gone = sorted(tid for tid, seen in self._last_seen.items() if now - seen > self._timeout)
        for tid in gone:
            self._depart(tid)
        return [TrackEvent("departure", tid, now, "signal_lost") for tid in gone]

    def _depart(self, tourist_id: str) -> None:
        del self._last_seen[tourist_id]
        del self._left_entry[tourist_id]
        self.departed.add(tourist_id)
        self.departures += 1
