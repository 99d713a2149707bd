"""Planar geometry for the monitored area.

Coordinates are local meters (x east, y north) around an area origin.
Conversion to latitude/longitude uses an equirectangular projection, which
is accurate enough for areas a few tens of kilometers across.
"""

from __future__ import annotations

import math
from array import array
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

from . import _kernels

TANGENT_TOL = 1e-9
EARTH_RADIUS = 6_371_008.8


class GeometryError(ValueError):
    """Degenerate geometric input (coincident centers, bad polyline...)."""


@dataclass(frozen=True, slots=True)
class GeoPoint:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


def distance(a: GeoPoint, b: GeoPoint) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


@dataclass(frozen=True, slots=True)
class ProjectionResult:
    point: GeoPoint
    segment_index: int
    arclength: float
    distance: float


@dataclass(frozen=True)
class TrailPolyline:
    points: tuple[GeoPoint, ...]
    cumulative_arclength: tuple[float, ...] = field(init=False)
    _xs: array = field(init=False, repr=False, compare=False)
    _ys: array = field(init=False, repr=False, compare=False)
    _cum: array = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pts = tuple(self.points)
        if len(pts) < 2:
            raise GeometryError("a trail needs at least two points")
        cum = [0.0]
        for a, b in zip(pts, pts[1:]):
            step = distance(a, b)
            if step <= 0.0:
                raise GeometryError(f"consecutive trail points coincide at ({a.x}, {a.y})")
            cum.append(cum[-1] + step)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "cumulative_arclength", tuple(cum))
        object.__setattr__(self, "_xs", array("d", (p.x for p in pts)))
        object.__setattr__(self, "_ys", array("d", (p.y for p in pts)))
        object.__setattr__(self, "_cum", array("d", cum))

    @classmethod
    def from_coords(cls, coords: Sequence[Sequence[float]]) -> "TrailPolyline":
        return cls(tuple(GeoPoint(float(x), float(y)) for x, y in coords))

    @property
    def length(self) -> float:
        return self.cumulative_arclength[-1]

    def heading_at(self, s: float) -> tuple[float, float]:
        """Unit tangent (dx, dy) of the segment containing arclength ``s``."""
        i = self._segment_for(s)
        a, b = self.points[i], self.points[i + 1]
        d = distance(a, b)
        return (b.x - a.x) / d, (b.y - a.y) / d

    def _segment_for(self, s: float) -> int:
        i = bisect_right(self.cumulative_arclength, s) - 1
        return min(max(i, 0), len(self.points) - 2)


def project_onto_trail(p: GeoPoint, t: TrailPolyline) -> ProjectionResult:
    i, qx, qy, s, d = _kernels.project_polyline(t._xs, t._ys, t._cum, p.x, p.y)
    return ProjectionResult(GeoPoint(qx, qy), i, s, d)


def position_at_arclength(t: TrailPolyline, s: float) -> GeoPoint:
    if not 0.0 <= s <= t.length:
        raise ValueError(f"arclength {s} outside [0, {t.length}]")
    i = t._segment_for(s)
    s0, s1 = t.cumulative_arclength[i], t.cumulative_arclength[i + 1]
    f = (s - s0) / (s1 - s0)
    a, b = t.points[i], t.points[i + 1]
    return GeoPoint(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))


def circle_intersection(c1: GeoPoint, r1: float, c2: GeoPoint, r2: float) -> list[GeoPoint]:
    """Intersection points of two circles (0, 1 or 2 points).

    Tangency within ``TANGENT_TOL`` yields a single point.  With two points
    the one to the left of the c1->c2 direction comes first.
    """
    if r1 <= 0 or r2 <= 0:
        raise GeometryError("radii must be positive")
    dx, dy = c2.x - c1.x, c2.y - c1.y
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise GeometryError("coincident circle centers")
    ux, uy = dx / d, dy / d
    if abs(d - (r1 + r2)) <= TANGENT_TOL:
        return [GeoPoint(c1.x + r1 * ux, c1.y + r1 * uy)]
    if abs(d - abs(r1 - r2)) <= TANGENT_TOL:
        sign = 1.0 if r1 > r2 else -1.0
        return [GeoPoint(c1.x + sign * r1 * ux, c1.y + sign * r1 * uy)]
    if d > r1 + r2 or d < abs(r1 - r2):
        return []
    a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    h = math.sqrt(max(r1 * r1 - a * a, 0.0))
    mx, my = c1.x + a * ux, c1.y + a * uy
    return [GeoPoint(mx - h * uy, my + h * ux), GeoPoint(mx + h * uy, my - h * ux)]


def closest_circle_point(c1: GeoPoint, r1: float, c2: GeoPoint, r2: float) -> GeoPoint:
    """Best single estimate when two circles do not intersect.

    Takes the midpoint of the gap (or overlap) along the line of centers.
    """
    dx, dy = c2.x - c1.x, c2.y - c1.y
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise GeometryError("coincident circle centers")
    ux, uy = dx / d, dy / d
    # positions measured along the c1->c2 line, c1 at 0
    if d >= r1 + r2:
        along = (r1 + d - r2) / 2.0
    elif r1 >= r2:
        along = (r1 + d + r2) / 2.0
    else:
        along = (d - r2 - r1) / 2.0
    return GeoPoint(c1.x + along * ux, c1.y + along * uy)


@dataclass(frozen=True)
class LocalProjection:
    """Equirectangular mapping between local meters and degrees."""

    origin_lat: float
    origin_lon: float

    def to_latlon(self, p: GeoPoint) -> tuple[float, float]:
        lat = self.origin_lat + math.degrees(p.y / EARTH_RADIUS)
        lon = self.origin_lon + math.degrees(
            p.x / (EARTH_RADIUS * math.cos(math.radians(self.origin_lat)))
        )
        return lat, lon

    def from_latlon(self, lat: float, lon: float) -> GeoPoint:
        y = math.radians(lat - self.origin_lat) * EARTH_RADIUS
        x = math.radians(lon - self.origin_lon) * EARTH_RADIUS * math.cos(
            math.radians(self.origin_lat)
        )
        return GeoPoint(x, y)


def format_dms(lat: float, lon: float) -> str:
    """Render a position as ``49°34′24″N, 19°31′46″E`` (rounded seconds)."""

    def part(value: float, pos: str, neg: str) -> str:
        hemi = pos if value >= 0 else neg
        total = round(abs(value) * 3600)
        deg, rem = divmod(total, 3600)
        minutes, seconds = divmod(rem, 60)
        return f"{deg}°{minutes:02d}′{seconds:02d}″{hemi}"

    return f"{part(lat, 'N', 'S')}, {part(lon, 'E', 'W')}"


def segment_intersections(
    a: TrailPolyline, b: TrailPolyline, tol: float = 1e-6
) -> list[tuple[GeoPoint, float, float]]:
    """Points where two polylines touch or cross, with arclength on each."""
    found: list[tuple[GeoPoint, float, float]] = []
    for i in range(len(a.points) - 1):
        p, p2 = a.points[i], a.points[i + 1]
        rx, ry = p2.x - p.x, p2.y - p.y
        for j in range(len(b.points) - 1):
            q, q2 = b.points[j], b.points[j + 1]
            sx, sy = q2.x - q.x, q2.y - q.y
            denom = rx * sy - ry * sx
            if abs(denom) < 1e-12:
                continue
            qpx, qpy = q.x - p.x, q.y - p.y
            t = (qpx * sy - qpy * sx) / denom
            u = (qpx * ry - qpy * rx) / denom
            if -tol <= t <= 1 + tol and -tol <= u <= 1 + tol:
                t = min(max(t, 0.0), 1.0)
                u = min(max(u, 0.0), 1.0)
                pt = GeoPoint(p.x + t * rx, p.y + t * ry)
                sa = a.cumulative_arclength[i] + t * (
                    a.cumulative_arclength[i + 1] - a.cumulative_arclength[i]
                )
                sb = b.cumulative_arclength[j] + u * (
                    b.cumulative_arclength[j + 1] - b.cumulative_arclength[j]
                )
                if all(distance(pt, f[0]) > 1.0 for f in found):
                    found.append((pt, sa, sb))
    return found
