"""Run statistics: periodic dumps, report tables, correlations and a map snapshot."""

from __future__ import annotations

import csv
import json
import math
import random
import statistics
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .repository import ContextRow
from .world import AreaConfig

SHARING_BANDS = (0, 25, 50, 75, 100)
WEATHER_LEVELS = ("E2", "E3", "E4", "E5")
SITUATIONAL = ("E6g", "E6a", "E6m", "E6r")


class UndefinedCorrelationError(ValueError):
    pass


# --- small statistics ---------------------------------------------------------------

@dataclass(frozen=True)
class TransitionStats:
    count: int
    avg: float
    min: int
    max: int
    stddev: float


def context_transition_stats(transitions: Iterable[int]) -> TransitionStats:
    """Average/min/max/population standard deviation of per-tourist transition counts."""
    xs = list(transitions)
    if not xs:
        return TransitionStats(0, 0.0, 0, 0, 0.0)
    return TransitionStats(len(xs), statistics.fmean(xs), min(xs), max(xs), statistics.pstdev(xs))


def count_transitions(keys: Sequence[Any]) -> int:
    """Number of changes between consecutive entries."""
    return sum(1 for a, b in zip(keys, keys[1:]) if a != b)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError("sequences differ in length")
    if len(xs) < 2:
        raise UndefinedCorrelationError("need at least two points")
    try:
        r = statistics.correlation(xs, ys)
    except statistics.StatisticsError as exc:
        raise UndefinedCorrelationError(str(exc)) from None
    return max(-1.0, min(1.0, r))


SHARING_FIELDS = ("wind", "fog", "temperature", "rain", "difficulty", "day_night", "trail")


def sharing_fields(row: ContextRow) -> tuple:
    t = row.tags
    return (t.wind, t.fog, t.temperature, t.rain, row.difficulty, row.day_night, row.trail_id)


def sharing_band(a: Sequence, b: Sequence) -> int:
    """Percentage of equal fields, rounded to the nearest band."""
    frac = 100.0 * sum(1 for x, y in zip(a, b) if x == y) / len(a)
    return min(SHARING_BANDS, key=lambda band: (abs(band - frac), band))


def context_sharing_histogram(
    rows: Iterable[ContextRow | Sequence], sample: int = 2000, rng: random.Random | None = None
) -> dict[int, int]:
    """Histogram of pairwise sharing bands.

    All pairs are used when there are at most ``sample`` of them, otherwise
    ``sample`` pairs are drawn uniformly (with replacement).
    """
    items = [sharing_fields(r) if isinstance(r, ContextRow) else tuple(r) for r in rows]
    hist = {b: 0 for b in SHARING_BANDS}
    n = len(items)
    if n < 2:
        return {}
    if n * (n - 1) // 2 <= sample:
        for i in range(n):
            for j in range(i + 1, n):
                hist[sharing_band(items[i], items[j])] += 1
        return hist
    rng = rng or random.Random(0)
    for _ in range(sample):
        i, j = rng.sample(range(n), 2)
        hist[sharing_band(items[i], items[j])] += 1
    return hist


# --- dumps -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Dump:
    index: int
    timestamp: float
    total: int
    left: int
    current: int
    bts_located: int
    gps_located: int
    refused: int
    low_accuracy: int
    one_station: int
    weather_by_level: dict[str, int]
    weather_by_route: dict[str, dict[str, int]]
    situational: dict[str, int]
    situational_onsets: dict[str, int]
    weather_onsets: dict[str, int]
    groups: int
    group_members: int
    group_improvements: int
    proximity: dict[str, int]
    transitions: TransitionStats
    sharing: dict[int, int]
    solver_calls: int
    solver_starts: int
    solver_mean_ms: float
    solver_stddev_ms: float

    @property
    def weather_total(self) -> int:
        return sum(self.weather_by_level.values())

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["sharing"] = {str(k): v for k, v in self.sharing.items()}
        return d


def take_dump(index: int, timestamp: float, pipeline, sample: int = 2000) -> Dump:
    """Counter and context snapshot; reads only, never touches pipeline state."""
    c = pipeline.counters
    snap = pipeline.repo.snapshot(timestamp)
    rows = [snap.rows[k] for k in sorted(snap.rows)]
    by_route: dict[str, dict[str, int]] = defaultdict(dict)
    for (route, level), n in sorted(c.weather_by_route.items()):
        by_route[route][level] = n
    members = [r for r in rows if r.group_id is not None]
    stats = pipeline.reasoner.stats
    durations = stats.durations_ms
    return Dump(
        index=index,
        timestamp=timestamp,
        total=c.total,
        left=c.left,
        current=c.current,
        bts_located=c.bts_located,
        gps_located=c.gps_located,
        refused=c.refused,
        low_accuracy=c.low_accuracy,
        one_station=c.one_station,
        weather_by_level={lvl: c.weather_by_level[lvl] for lvl in WEATHER_LEVELS},
        weather_by_route=dict(by_route),
        situational={s: c.situational[s] for s in SITUATIONAL},
        situational_onsets={s: c.situational_onsets[s] for s in SITUATIONAL},
        weather_onsets={lvl: c.weather_onsets[lvl] for lvl in WEATHER_LEVELS},
        groups=len({r.group_id for r in members}),
        group_members=len(members),
        group_improvements=c.group_improvements,
        proximity={k: c.proximity[k] for k in ("1", "2", "3+")},
        transitions=context_transition_stats(d.transitions for d in pipeline.departed),
        sharing=context_sharing_histogram(rows, sample, random.Random(f"sharing:{index}")),
        solver_calls=stats.calls,
        solver_starts=stats.starts,
        solver_mean_ms=statistics.fmean(durations) if durations else 0.0,
        solver_stddev_ms=statistics.pstdev(durations) if len(durations) > 1 else 0.0,
    )


# --- journal reports -------------------------------------------------------------------------

@dataclass
class ThreatReport:
    by_level: dict[str, int] = field(default_factory=lambda: {lvl: 0 for lvl in WEATHER_LEVELS})
    by_route: dict[str, int] = field(default_factory=dict)
    by_route_level: dict[tuple[str, str], int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.by_level.values())


def threat_report(records: Iterable[Mapping[str, Any]]) -> ThreatReport:
    rep = ThreatReport()
    for r in records:
        if r.get("kind") != "verdict" or r["weather"] not in WEATHER_LEVELS:
            continue
        rep.by_level[r["weather"]] += 1
        rep.by_route[r["trail"]] = rep.by_route.get(r["trail"], 0) + 1
        key = (r["trail"], r["weather"])
        rep.by_route_level[key] = rep.by_route_level.get(key, 0) + 1
    return rep


def season_averages(reports: Mapping[str, Sequence[ThreatReport]]) -> dict[str, dict[str, float]]:
    """Mean per-level counts for each season's list of run reports."""
    out = {}
    for season, reps in reports.items():
        if not reps:
            continue
        out[season] = {lvl: statistics.fmean(r.by_level[lvl] for r in reps) for lvl in WEATHER_LEVELS}
        out[season]["total"] = statistics.fmean(r.total for r in reps)
    return out


@dataclass(frozen=True)
class ProximityReport:
    one_station: int
    two_stations: int
    three_plus: int
    events_per_tourist: float
    groups: int
    avg_group_size: float
    bts_members: int
    gps_members: int
    locations_improved: int


def proximity_and_redundancy_report(records: Iterable[Mapping[str, Any]]) -> ProximityReport:
    buckets = Counter()
    tourists = set()
    group_members: dict[str, set[str]] = defaultdict(set)
    modes: dict[str, str] = {}
    improved = 0
    for r in records:
        kind = r.get("kind")
        if kind == "station":
            n = r["in_range"]
            buckets["3+" if n >= 3 else str(n)] += 1
            tourists.add(r["id"])
        elif kind == "register":
            modes[r["id"]] = r["mode"]
            if r.get("group"):
                group_members[r["group"]].add(r["id"])
        elif kind == "group_improved":
            improved += 1
    members = [m for g in group_members.values() for m in g]
    gps = sum(1 for m in members if modes.get(m) == "GpsConsent")
    total_events = sum(buckets.values())
    return ProximityReport(
        one_station=buckets["1"] + buckets["0"],
        two_stations=buckets["2"],
        three_plus=buckets["3+"],
        events_per_tourist=total_events / len(tourists) if tourists else 0.0,
        groups=len(group_members),
        avg_group_size=statistics.fmean(len(g) for g in group_members.values()) if group_members else 0.0,
        bts_members=len(members) - gps,
        gps_members=gps,
        locations_improved=improved,
    )


# --- output files -------------------------------------------------------------------------------

def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.4f}" if isinstance(v, float) else v for v in row])


def write_reports(out_dir: Path, dumps: Sequence[Dump], records: Sequence[Mapping[str, Any]], meta: Mapping[str, Any]) -> dict[str, Path]:
    """Write one CSV per table plus ``summary.json``; returns the paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    p = paths["general_overview"] = out_dir / "general_overview.csv"
    _write_csv(p, ["dump", "time", "Total number of tourists", "Tourists who left", "Current tourists",
                   "Located by BTS", "Located by GPS", "GPS refused", "Low accuracy events",
                   "One weather detector events", "SAT solver starts", "SAT solver calls"],
               ([d.index, d.timestamp, d.total, d.left, d.current, d.bts_located, d.gps_located, d.refused,
                 d.low_accuracy, d.one_station, d.solver_starts, d.solver_calls] for d in dumps))

    rep = threat_report(records)
    p = paths["weather_threats"] = out_dir / "weather_threats.csv"
    routes = sorted(rep.by_route)
    _write_csv(p, ["level", *routes, "total"],
               ([lvl, *(rep.by_route_level.get((r, lvl), 0) for r in routes), rep.by_level[lvl]]
                for lvl in WEATHER_LEVELS))

    last = dumps[-1] if dumps else None
    p = paths["situational"] = out_dir / "situational_threats.csv"
    _write_csv(p, ["threat", "verdicts", "onsets"],
               ([s, last.situational[s], last.situational_onsets[s]] for s in SITUATIONAL) if last else [])

    prox = proximity_and_redundancy_report(records)
    p = paths["proximity"] = out_dir / "spatial_proximity.csv"
    _write_csv(p, ["Including one station", "Including two stations", "Including three or more stations",
                   "Events per tourist"],
               [[prox.one_station, prox.two_stations, prox.three_plus, prox.events_per_tourist]])
    p = paths["groups"] = out_dir / "tourist_groups.csv"
    _write_csv(p, ["Groups", "Average group size", "Members located by BTS", "Members located by GPS",
                   "Locations improved"],
               [[prox.groups, prox.avg_group_size, prox.bts_members, prox.gps_members, prox.locations_improved]])

    p = paths["transitions"] = out_dir / "context_transitions.csv"
    _write_csv(p, ["dump", "tourists", "avg", "min", "max", "stddev"],
               ([d.index, d.transitions.count, d.transitions.avg, d.transitions.min, d.transitions.max,
                 d.transitions.stddev] for d in dumps))

    p = paths["sharing"] = out_dir / "context_sharing.csv"
    _write_csv(p, ["dump", *(f"{b}%" for b in SHARING_BANDS)],
               ([d.index, *(d.sharing.get(b, 0) for b in SHARING_BANDS)] for d in dumps))

    p = paths["sat"] = out_dir / "sat_solver.csv"
    _write_csv(p, ["dump", "Number of SAT solver calls", "SAT solver starts", "Average response time [ms]",
                   "Standard deviation [ms]"],
               ([d.index, d.solver_calls, d.solver_starts, d.solver_mean_ms, d.solver_stddev_ms] for d in dumps))

    p = paths["summary"] = out_dir / "summary.json"
    summary = {
        "meta": dict(meta),
        "threats": {"by_level": rep.by_level, "by_route": dict(sorted(rep.by_route.items())), "total": rep.total},
        "proximity": asdict(prox),
        "dumps": [d.to_dict() for d in dumps],
    }
    p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


# --- SVG snapshot ------------------------------------------------------------------------------------

WEATHER_COLORS = {"E1": "green", "E2": "yellow", "E3": "orange", "E4": "red", "E5": "black"}
SITUATIONAL_COLOR = "violet"


def svg_snapshot(area: AreaConfig, rows: Mapping[str, ContextRow], verdicts: Sequence, width: int = 800) -> str:
    """Map of trails and tourists, dots colored by weather level.

    Tourists with a situational threat get a violet ring.
    """
    x0, y0, x1, y1 = area.bounds
    scale = width / (x1 - x0)
    height = math.ceil((y1 - y0) * scale)

    def xy(p) -> tuple[float, float]:
        return round((p.x - x0) * scale, 1), round(height - (p.y - y0) * scale, 1)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for t in area.trails:
        pts = " ".join(f"{a},{b}" for a, b in (xy(p) for p in t.polyline.points))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="gray" stroke-width="2"><title>{t.id}</title></polyline>')
    for v in sorted(verdicts, key=lambda v: v.tourist_id):
        row = rows.get(v.tourist_id)
        if row is None:
            continue
        cx, cy = xy(row.fix.point)
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="{WEATHER_COLORS[v.weather]}" stroke="gray"/>')
        if v.situational:
            parts.append(f'<circle cx="{cx}" cy="{cy}" r="6" fill="none" stroke="{SITUATIONAL_COLOR}" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
