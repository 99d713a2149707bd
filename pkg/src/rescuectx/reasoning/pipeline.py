"""The context-processing cycle.

Every cycle drains the broker, locates and tags each tourist, writes the
rows, takes a snapshot and evaluates threats on it.  Verdicts go to the
verdict feed, the journal and the per-tourist behavior traces.
"""

from __future__ import annotations

import dataclasses
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from ..broker import Broker, BtsSignal, ControlEvent, GpsFix, Subscription, Topic, WeatherReading
from ..geo import GeoPoint, distance
from ..preprocess import (
    ArrivalTracker,
    DataError,
    FixSource,
    GeoFix,
    RouteAssignment,
    UnlocatableError,
    WeatherTags,
    a1_geolocate,
    a2_tag_weather,
    assign_route,
    improve_with_group,
    select_station,
)
from ..repository import ContextRow, Journal, Repository, StaleWriteError
from ..threatlang import BehaviorPoint, behavior_point
from ..world import AreaConfig, PhoneMode, day_night
from .cascade import Reasoner, ThreatVerdict
from .detectors import SITUATIONAL, a3_detect_nonweather

BENIGN_TAGS = WeatherTags("W1", "F1", "T1", "R1")
WEATHER_THREATS = ("E2", "E3", "E4", "E5")


@dataclass
class Counters:
    """Cumulative run counters; population figures are refreshed each cycle."""

    total: int = 0
    left: int = 0
    current: int = 0
    bts_located: int = 0
    gps_located: int = 0
    refused: int = 0
    low_accuracy: int = 0
    one_station: int = 0
    unlocatable: int = 0
    dropped: int = 0
    verdicts: int = 0
    weather_by_level: Counter = field(default_factory=Counter)
    weather_by_route: Counter = field(default_factory=Counter)
    weather_onsets: Counter = field(default_factory=Counter)
    situational: Counter = field(default_factory=Counter)
    situational_onsets: Counter = field(default_factory=Counter)
    proximity: Counter = field(default_factory=Counter)
    group_improvements: int = 0
    feed_overflow: int = 0

    @property
    def weather_total(self) -> int:
        return sum(self.weather_by_level[lvl] for lvl in WEATHER_THREATS)


@dataclass
class _TouristState:
    mode: PhoneMode = PhoneMode.BTS_ONLY
    group_id: str | None = None
    fix: GeoFix | None = None
    fix_fresh: bool = False
    route: RouteAssignment | None = None
    direction: int = 1
    station: str | None = None
    anchor: GeoPoint | None = None
    anchor_t: float = 0.0
    last_key: tuple | None = None
    last_weather: str = "E1"
    last_situational: frozenset = frozenset()
    cycles: int = 0
    transitions: int = 0


@dataclass(frozen=True)
class DepartedStats:
    tourist_id: str
    cycles: int
    transitions: int
    reason: str


class Pipeline:
    def __init__(
        self,
        area: AreaConfig,
        broker: Broker,
        repo: Repository,
        journal: Journal | None = None,
        start_clock: float = 0.0,
        season: str | None = None,
        capacity: int = 1 << 20,
        keep_traces: bool = True,
        cache_verdicts: bool = True,
    ):
        self.area = area
        self.repo = repo
        self.journal = journal
        self.start_clock = start_clock
        self.season = season or area.season
        self.reasoner = Reasoner(cache=cache_verdicts)
        self.counters = Counters()
        self.tracker = ArrivalTracker(area)
        self._subs = {t: broker.subscribe(t, capacity) for t in Topic}
        self.feed: Subscription[ThreatVerdict] = Subscription(capacity)
        self.cycle_no = 0
        self.station_tags: dict[str, WeatherTags] = {}
        self.animals: dict[str, tuple[GeoPoint, bool]] = {}
        self.groups: dict[str, str] = {}  # group id -> leader id
        self.state: dict[str, _TouristState] = {}
        self.departed: list[DepartedStats] = []
        self.traces: dict[str, list[BehaviorPoint]] = defaultdict(list)
        self.keep_traces = keep_traces
        self.last_verdicts: list[ThreatVerdict] = []
        self._stations = {s.id: s for s in area.bts_stations}
        self._specials = [sp for t in area.trails for sp in t.special_places]

    # -- helpers ------------------------------------------------------------------

    def _log(self, kind: str, **fields) -> None:
        if self.journal is not None:
            self.journal.record(kind, **fields)

    def _ts(self, tid: str) -> _TouristState:
        st = self.state.get(tid)
        if st is None:
            st = self.state[tid] = _TouristState()
        return st

    def _control(self, msg_payload: ControlEvent, now: float) -> None:
        kind = msg_payload.kind
        if kind == "register":
            st = self._ts(msg_payload.get("tourist"))
            st.mode = PhoneMode(msg_payload.get("mode", PhoneMode.BTS_ONLY.value))
            st.group_id = msg_payload.get("group")
            if st.group_id is not None and msg_payload.get("leader") is not None:
                self.groups[st.group_id] = msg_payload.get("leader")
            self._log("register", t=now, id=msg_payload.get("tourist"), mode=st.mode.value, group=st.group_id)
        elif kind == "set_avalanche":
            level = msg_payload.get("level")
            self.repo.set_avalanche(level, msg_payload.get("by", "operator"), now)
            self._log("avalanche", t=now, level=level)
        elif kind == "swap_alerts":
            prev = self.repo.swap_alert_set(msg_payload.get("name"))
            self._log("alert_set", t=now, name=msg_payload.get("name"), previous=prev)
        else:
            self.counters.dropped += 1

    def _depart(self, tid: str, now: float, reason: str) -> None:
        self.repo.depart(tid)
        st = self.state.pop(tid, None)
        cycles = st.cycles if st else 0
        transitions = st.transitions if st else 0
        self.departed.append(DepartedStats(tid, cycles, transitions, reason))
        self._log("departure", t=now, id=tid, reason=reason, cycles=cycles, transitions=transitions)

    # -- the cycle ------------------------------------------------------------------

    def cycle(self, now: float) -> list[ThreatVerdict]:
        self.cycle_no += 1
        c = self.counters
        th = self.area.thresholds

        for msg in self._subs[Topic.CONTROL].drain():
            try:
                self._control(msg.payload, msg.timestamp)
            except (KeyError, ValueError):
                c.dropped += 1

        for msg in self._subs[Topic.WEATHER].drain():
            r: WeatherReading = msg.payload
            try:
                self.station_tags[r.station_id] = a2_tag_weather(r, th, self.season)
            except DataError:
                c.dropped += 1

        for msg in self._subs[Topic.GPS_ANIMAL].drain():
            g: GpsFix = msg.payload
            self.animals[g.entity_id] = (g.point, g.dangerous)

        bts: dict[str, list] = defaultdict(list)
        for msg in self._subs[Topic.BTS_MEASUREMENT].drain():
            s: BtsSignal = msg.payload
            station = self._stations.get(s.station_id)
            if station is None:
                c.dropped += 1
                continue
            bts[s.phone_id].append((station, s.rssi))
        gps: dict[str, GeoPoint] = {}
        for msg in self._subs[Topic.GPS_TOURIST].drain():
            gps[msg.payload.entity_id] = msg.payload.point

        # A1: locate every phone heard from this cycle
        fresh: dict[str, GeoFix] = {}
        for tid in sorted(set(bts) | set(gps)):
            if tid in self.tracker.departed:
                continue
            st = self.state.get(tid)
            prev = st.fix if st else None
            try:
                fix, event = a1_geolocate(tid, bts.get(tid, ()), gps.get(tid), prev, now, th.accuracy)
            except UnlocatableError:
                c.unlocatable += 1
                continue
            if event is not None:
                c.low_accuracy += 1
                self._log("low_accuracy", t=now, id=tid, station=event.station_id, mismatch=event.mismatch)
            fresh[tid] = fix

        for tid in sorted(fresh):
            for ev in self.tracker.observe(tid, fresh[tid].point, now):
                if ev.kind == "arrival":
                    self._log("arrival", t=now, id=tid)
                else:
                    self._depart(tid, now, ev.reason)
        for ev in self.tracker.sweep(now):
            self._depart(ev.tourist_id, now, ev.reason)
        present = self.tracker.present

        # routes for fresh fixes
        for tid in sorted(present & set(fresh)):
            st = self._ts(tid)
            st.fix, st.fix_fresh = fresh[tid], True
            prev_route = st.route
            st.route = assign_route(st.fix.point, self.area, prev_route.trail_id if prev_route else None)
            if prev_route is not None and prev_route.trail_id == st.route.trail_id:
                ds = st.route.arclength - prev_route.arclength
                if abs(ds) > 1.0:
                    st.direction = 1 if ds > 0 else -1
        for tid in present - set(fresh):
            self.state[tid].fix_fresh = False

        # group-based improvement of BTS fixes
        members: dict[str, list[str]] = defaultdict(list)
        for tid in sorted(present):
            gid = self.state[tid].group_id
            if gid is not None:
                members[gid].append(tid)
        for gid in sorted(members):
            anchors = [m for m in members[gid] if self.state[m].fix_fresh and self.state[m].fix.source is FixSource.GPS]
            if not anchors:
                continue
            for m in members[gid]:
                st = self.state[m]
                if not st.fix_fresh or st.fix.source is not FixSource.BTS:
                    continue
                best = min(anchors, key=lambda a: (distance(self.state[a].fix.point, st.fix.point), a))
                improved = improve_with_group(st.fix, self.state[best].fix, self.state[best].route, self.area)
                if improved is not None:
                    st.fix = improved
                    st.route = assign_route(improved.point, self.area, st.route.trail_id)
                    c.group_improvements += 1
                    self._log("group_improved", t=now, id=m, anchor=best, group=gid)

        # rows: every present tourist, refreshed with the latest weather and clock
        clock = self.start_clock + now
        dn = day_night(clock, self.area, self.season)
        avalanche = self.repo.avalanche.level
        dangerous = [p for p, danger in self.animals.values() if danger]
        rows: dict[str, ContextRow] = {}
        for tid in sorted(present):
            st = self.state[tid]
            if st.fix is None or st.route is None:
                continue
            trail = self.area.trail(st.route.trail_id)
            hx, hy = trail.polyline.heading_at(st.route.arclength)
            choice = select_station(st.fix.point, trail.id, (hx * st.direction, hy * st.direction), self.area)
            if choice.station_id != st.station:
                bucket = "3+" if choice.in_range >= 3 else str(choice.in_range)
                c.proximity[bucket] += 1
                self._log("station", t=now, id=tid, station=choice.station_id, in_range=choice.in_range)
                st.station = choice.station_id
            if choice.in_range == 1:
                c.one_station += 1
            if st.anchor is None or distance(st.fix.point, st.anchor) > th.idle_radius:
                st.anchor, st.anchor_t = st.fix.point, now
            rows[tid] = ContextRow(
                tourist_id=tid,
                fix=st.fix,
                trail_id=trail.id,
                arclength=st.route.arclength,
                direction=st.direction,
                difficulty=trail.difficulty,
                tags=self.station_tags.get(choice.station_id, BENIGN_TAGS),
                selected_station=choice.station_id,
                in_range_count=choice.in_range,
                day_night=dn,
                season=self.season,
                avalanche=avalanche,
                motion_idle_seconds=now - st.anchor_t,
                off_trail=st.route.off_trail,
                in_special_place=any(sp.contains(st.fix.point) for sp in self._specials),
                updated_at=now,
                cycle=self.cycle_no,
                group_id=st.group_id,
                animal_distance=min((distance(st.fix.point, p) for p in dangerous), default=None),
            )
        for tid, row in rows.items():
            leader = self.groups.get(row.group_id) if row.group_id else None
            if leader is None or leader == tid or leader not in rows:
                continue
            lrow = rows[leader]
            if lrow.trail_id == row.trail_id:
                gap = abs(lrow.arclength - row.arclength)
            else:
                gap = distance(lrow.fix.point, row.fix.point)
            rows[tid] = dataclasses.replace(row, leader_distance=gap)
        for tid in sorted(rows):
            try:
                self.repo.upsert_row(rows[tid])
            except StaleWriteError:
                c.dropped += 1

        # population counters
        c.total, c.left = self.tracker.arrivals, self.tracker.departures
        c.current = len(present)
        c.gps_located = sum(1 for t in present if self.state[t].fix.source is FixSource.GPS)
        c.bts_located = c.current - c.gps_located
        c.refused = sum(1 for t in present if self.state[t].mode is PhoneMode.GPS_REFUSED)

        return self._reason(now)

    def _reason(self, now: float) -> list[ThreatVerdict]:
        c = self.counters
        snap = self.repo.snapshot(now)
        proj = self.area.projection
        verdicts = []
        for tid in sorted(snap.rows):
            row = snap.rows[tid]
            st = self.state[tid]
            situational = a3_detect_nonweather(row, self.area.detectors)
            weather = self.reasoner.weather_cascade(row.atoms(), snap.alert_set)
            v = ThreatVerdict(tid, weather, situational, self.cycle_no, now, snap.alert_set.name)
            verdicts.append(v)

            c.verdicts += 1
            if weather != "E1":
                c.weather_by_level[weather] += 1
                c.weather_by_route[(row.trail_id, weather)] += 1
                if weather != st.last_weather:
                    c.weather_onsets[weather] += 1
            for label in situational:
                c.situational[label] += 1
                if label not in st.last_situational:
                    c.situational_onsets[label] += 1
            st.last_weather, st.last_situational = weather, situational
            key = row.context_key()
            if st.last_key is not None and key != st.last_key:
                st.transitions += 1
            st.last_key = key
            st.cycles += 1

            lat, lon = proj.to_latlon(row.fix.point)
            self._log(
                "verdict",
                cycle=self.cycle_no,
                t=now,
                id=tid,
                weather=weather,
                situational=sorted(situational),
                lat=round(lat, 6),
                lon=round(lon, 6),
                trail=row.trail_id,
                difficulty=row.difficulty,
                tags=list(row.tags.atoms()),
                alerts=snap.alert_set.name,
            )
            if self.keep_traces:
                self.traces[tid].append(behavior_point(v, row, self.area, self.start_clock))
            try:
                self.feed.put(v, timeout=0)
            except TimeoutError:
                c.feed_overflow += 1
        self.last_verdicts = verdicts
        return verdicts


__all__ = ["Counters", "DepartedStats", "Pipeline", "SITUATIONAL"]
