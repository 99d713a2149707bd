"""Step-based simulation of the monitored area.

Tourists walk along trails, switch at crossings, turn at dead ends and
leave at entry points.  Incidents (getting lost, stopping) are sampled with
hazards that grow with local weather severity.  Group followers replay
their leader's path with a lag that grows while they straggle.  Every step
emits the sensor messages a real deployment would produce.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..broker import Broker, BtsSignal, ControlEvent, GpsFix, Message, Topic, WeatherReading
from ..geo import GeoPoint, distance, position_at_arclength
from ..preprocess import a2_tag_weather, expected_rssi
from ..world import Animal, AreaConfig, Group, PhoneMode, Tourist, TouristState, Trail
from .scenario import WeatherScenario, weather_at

HOUR = 3600.0
END_TOL = 1.0


def poisson(rng: random.Random, mean: float) -> int:
    """Poisson variate by sequential multiplication; fine for the small means used here."""
    if mean <= 0:
        return 0
    if mean > 500:
        return max(0, round(rng.gauss(mean, math.sqrt(mean))))
    limit = math.exp(-mean)
    k, p = 0, rng.random()
    while p > limit:
        k += 1
        p *= rng.random()
    return k


@dataclass(frozen=True)
class InitialTourist:
    trail_id: str
    arclength: float
    direction: int = 1
    speed: float = 1.2
    phone_mode: PhoneMode = PhoneMode.GPS_CONSENT


@dataclass(frozen=True)
class SimParams:
    seed: int = 0
    duration: float = 3600.0
    speedup: float = 25.0
    tick: float = 30.0
    weather_interval: float = 60.0
    geo_interval: float = 30.0
    # arrivals: normal-shaped target population around a peak clock time
    peak_population: float = 150.0
    peak_clock: float = 14 * HOUR
    peak_sigma_hours: float = 4.0
    arrivals: bool = True
    prefill: bool = True
    initial_tourists: tuple[InitialTourist, ...] = ()
    speed_range: tuple[float, float] = (0.9, 1.5)
    p_switch: float = 0.3
    # incident rates per hour at unit weather multiplier
    p_lost: float = 0.04
    p_no_motion: float = 0.15
    p_straggle: float = 0.25
    weather_floor: float = 0.1
    p_self_return: float = 0.6
    p_evacuate: float = 0.3
    p_rest: float = 0.3
    no_motion_minutes: tuple[float, float] = (16.0, 40.0)
    lost_dwell_minutes: float = 25.0
    rescue_minutes: float = 30.0
    rest_minutes: tuple[float, float] = (15.0, 30.0)
    straggle_minutes: tuple[float, float] = (8.0, 20.0)
    lost_offset: tuple[float, float] = (20.0, 150.0)
    group_fraction: float = 0.3
    group_sizes: tuple[int, ...] = (2, 3, 4)
    phone_consent: float = 0.38
    phone_refused: float = 0.20
    animal_count: int = 6
    animal_speed: tuple[float, float] = (0.2, 0.8)
    p_dangerous: float = 0.5

    def __post_init__(self) -> None:
        probs = (
            "p_switch", "p_self_return", "p_evacuate", "p_rest", "group_fraction",
            "phone_consent", "phone_refused", "p_dangerous",
        )
        for name in probs:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("p_lost", "p_no_motion", "p_straggle", "weather_floor"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.phone_consent + self.phone_refused > 1.0:
            raise ValueError("phone_consent + phone_refused exceeds 1")
        if self.tick <= 0 or self.duration <= 0:
            raise ValueError("tick and duration must be positive")
        if self.weather_interval <= 0 or self.geo_interval <= 0:
            raise ValueError("reading intervals must be positive")
        if min(self.group_sizes, default=2) < 2:
            raise ValueError("groups have at least two members")


@dataclass(frozen=True, slots=True)
class SimEvent:
    timestamp: float
    kind: str
    entity: str
    detail: str = ""


@dataclass
class _Agent:
    tourist: Tourist
    position: GeoPoint
    follower: bool = False
    history_index: int = 0
    straggle_until: float | None = None
    resting: bool = False
    rested: set = field(default_factory=set)
    pending_rescue: bool = False


@dataclass
class _GroupTrack:
    group: Group
    history: list = field(default_factory=list)  # (point, trail, arclength, offtrail)
    leader_gone: bool = False
    leader_outcome: str = "exit"


def _trail_end_kind(area: AreaConfig, trail: Trail, at_start: bool) -> tuple[str, Any]:
    s = 0.0 if at_start else trail.length
    for e in trail.entry_points:
        if abs(e - s) <= END_TOL:
            return "entry", None
    for c in area.crossings.get(trail.id, ()):
        if abs(c.arclength - s) <= END_TOL:
            return "crossing", c
    return "dead_end", None


def _direction_on(trail: Trail, s: float, rng: random.Random) -> int:
    if s <= END_TOL:
        return 1
    if s >= trail.length - END_TOL:
        return -1
    return 1 if rng.random() < 0.5 else -1


def walk(area: AreaConfig, t: Tourist, dist: float, rng: random.Random, p_switch: float) -> bool:
    """Advance ``t`` by ``dist`` meters along the trail network.

    Returns True when the walk ends at an entry point (the tourist exits).
    A trail switch at a crossing ends the step at the crossing.
    """
    trail = area.trail(t.trail_id)
    s_old = t.arclength
    s_new = s_old + t.direction * dist
    lo, hi = (s_old, s_new) if t.direction > 0 else (s_new, s_old)
    passed = [
        c for c in area.crossings.get(trail.id, ())
        if END_TOL < c.arclength < trail.length - END_TOL
        and lo <= c.arclength <= hi and c.arclength != s_old
    ]
    passed.sort(key=lambda c: c.arclength * t.direction)
    for c in passed:
        if rng.random() < p_switch:
            other = area.trail(c.other)
            t.trail_id, t.arclength = other.id, c.other_arclength
            t.direction = _direction_on(other, c.other_arclength, rng)
            return False
    if 0.0 <= s_new <= trail.length:
        t.arclength = s_new
        return False
    at_start = s_new < 0.0
    kind, crossing = _trail_end_kind(area, trail, at_start)
    end_s = 0.0 if at_start else trail.length
    if kind == "entry":
        t.arclength = end_s
        return True
    if kind == "crossing":
        other = area.trail(crossing.other)
        t.trail_id, t.arclength = other.id, crossing.other_arclength
        t.direction = _direction_on(other, crossing.other_arclength, rng)
        return False
    overshoot = abs(s_new - end_s)
    t.direction = -t.direction
    t.arclength = min(max(end_s + t.direction * overshoot, 0.0), trail.length)
    return False


_STAY_CACHE: dict[tuple, tuple[AreaConfig, tuple[float, float, float]]] = {}


def _stay_moments(area: AreaConfig, params: SimParams, n: int) -> tuple[float, float, float]:
    rng = random.Random(12345)
    entries = area.entry_locations()
    specials = [(t.id, i, sp) for t in area.trails for i, sp in enumerate(t.special_places)]
    rest = params.p_rest * 60.0 * sum(params.rest_minutes) / 2.0
    # pauses at the fair-weather hazard floor stretch walking time proportionally
    pause = params.p_no_motion * params.weather_floor / HOUR * 60.0 * sum(params.no_motion_minutes) / 2.0
    m1 = m2 = m3 = 0.0
    for _ in range(n):
        tid, s, _p = entries[rng.randrange(len(entries))]
        trail = area.trail(tid)
        t = Tourist("mc", PhoneMode.BTS_ONLY, tid, s, _direction_on(trail, s, rng), rng.uniform(*params.speed_range), 0.0)
        elapsed, step = 0.0, params.tick
        rested: set = set()
        while elapsed < 24 * HOUR:
            elapsed += step
            if walk(area, t, t.speed * step, rng, params.p_switch):
                break
            pos = position_at_arclength(area.trail(t.trail_id).polyline, t.arclength)
            for key_t, i, sp in specials:
                if (key_t, i) not in rested and sp.contains(pos):
                    rested.add((key_t, i))
                    break
        stay = elapsed * (1.0 + pause) + rest * len(rested)
        m1 += stay
        m2 += stay * stay
        m3 += stay ** 3
    return m1 / n, m2 / n, m3 / n


def estimate_stay_moments(area: AreaConfig, params: SimParams, n: int = 300) -> tuple[float, float, float]:
    """Monte-Carlo raw moments of the time from entry to exit.

    Expected rest and pause delays are added to each simulated walk.
    """
    key = (id(area), tuple(params.speed_range), params.p_switch, params.tick, params.p_rest,
           tuple(params.rest_minutes), params.p_no_motion, params.weather_floor, tuple(params.no_motion_minutes), n)
    hit = _STAY_CACHE.get(key)
    if hit is None or hit[0] is not area:
        hit = _STAY_CACHE[key] = (area, _stay_moments(area, params, n))
    return hit[1]


def estimate_mean_stay(area: AreaConfig, params: SimParams, n: int = 300) -> float:
    return estimate_stay_moments(area, params, n)[0]


def _rate_coefficients(m1: float, m2: float, m3: float) -> tuple[float, float, float]:
    """Coefficients of N, N' and N'' in the arrival rate.

    Expanding ``N_pop(t) = int lambda(t - u) S(u) du`` to second order and
    requiring ``N_pop = N`` gives these in terms of the stay moments.
    """
    c = m2 / (2.0 * m1 * m1)
    d = (m2 * c / 2.0 - m3 / (6.0 * m1)) / m1
    return 1.0 / m1, c, d


class Simulator:
    """Scenario-driven world; ``step`` advances it by one tick and emits messages."""

    def __init__(self, area: AreaConfig, scenario: WeatherScenario, params: SimParams, broker: Broker | None = None):
        self.area = area
        self.scenario = scenario
        self.params = params
        self.broker = broker
        self.rng = random.Random(f"sim:{params.seed}:{scenario.id}")
        self.time = 0.0
        self.steps = 0
        self.agents: dict[str, _Agent] = {}
        self.groups: dict[str, _GroupTrack] = {}
        self.animals: list[Animal] = []
        self.events: list[SimEvent] = []
        self.readings: dict[str, WeatherReading] = {}
        self.avalanche = scenario.avalanche
        self._next_id = 0
        self._next_group = 0
        self._started = False
        moments = estimate_stay_moments(area, params) if (params.arrivals or params.prefill) else (1.0, 2.0, 6.0)
        self._mean_stay = moments[0]
        self._rate_coef = _rate_coefficients(*moments)
        self._specials = [(t.id, i, sp) for t in area.trails for i, sp in enumerate(t.special_places)]
        sizes = params.group_sizes
        self._mean_group = sum(sizes) / len(sizes)

    # -- population model --------------------------------------------------------

    def clock(self, t: float | None = None) -> float:
        return self.scenario.start_clock + (self.time if t is None else t)

    def target_population(self, clock: float) -> float:
        p = self.params
        h = clock / HOUR
        return p.peak_population * math.exp(-((h - p.peak_clock / HOUR) ** 2) / (2 * p.peak_sigma_hours ** 2))

    def arrival_rate(self, clock: float) -> float:
        """Tourists per second keeping the expected population on target.

        ``lambda = N / T + c N' + d N''`` with ``c`` and ``d`` matched to the
        stay-time moments; for exponential stays this is ``N' + N / T``.
        """
        p = self.params
        n = self.target_population(clock)
        z = (clock - p.peak_clock) / HOUR
        s2 = p.peak_sigma_hours ** 2
        dn = -n * z / s2 / HOUR
        ddn = n * (z * z / s2 - 1.0) / s2 / HOUR ** 2
        a, c, d = self._rate_coef
        return max(0.0, a * n + c * dn + d * ddn)

    # -- helpers -------------------------------------------------------------------

    def _log(self, kind: str, entity: str, detail: str = "") -> None:
        self.events.append(SimEvent(self.time, kind, entity, detail))

    def _new_id(self) -> str:
        self._next_id += 1
        return f"T{self._next_id:05d}"

    def _phone_mode(self) -> PhoneMode:
        r = self.rng.random()
        p = self.params
        if r < p.phone_consent:
            return PhoneMode.GPS_CONSENT
        if r < p.phone_consent + p.phone_refused:
            return PhoneMode.GPS_REFUSED
        return PhoneMode.BTS_ONLY

    def _position(self, t: Tourist) -> GeoPoint:
        if t.state is TouristState.LOST and t.offtrail_point is not None:
            return t.offtrail_point
        trail = self.area.trail(t.trail_id)
        return position_at_arclength(trail.polyline, min(max(t.arclength, 0.0), trail.length))

    def _spawn_party(self, trail_id: str, s: float, direction: int, messages: list) -> None:
        p = self.params
        speed = self.rng.uniform(*p.speed_range)
        tourists_in_groups = p.group_fraction
        # probability that a party is a group, so that group_fraction of tourists are in groups
        denom = tourists_in_groups / self._mean_group + (1 - tourists_in_groups)
        p_group = (tourists_in_groups / self._mean_group) / denom if denom > 0 else 0.0
        size = self.rng.choice(p.group_sizes) if self.rng.random() < p_group else 1
        ids = [self._new_id() for _ in range(size)]
        gid = None
        if size > 1:
            self._next_group += 1
            gid = f"G{self._next_group:04d}"
            track = _GroupTrack(Group(gid, list(ids)))
            self.groups[gid] = track
        for k, tid in enumerate(ids):
            t = Tourist(tid, self._phone_mode(), trail_id, s, direction, speed, self.time, gid)
            agent = _Agent(t, self._position(t), follower=k > 0)
            self.agents[tid] = agent
            self._log("arrival", tid, f"{trail_id}@{s:.0f}")
            messages.append((Topic.CONTROL, ControlEvent("register", (
                ("tourist", tid), ("mode", t.phone_mode.value), ("group", gid),
                ("leader", ids[0] if gid else None),
            ))))
        if gid is not None:
            track = self.groups[gid]
            lead = self.agents[ids[0]].tourist
            track.history.append((self._position(lead), lead.trail_id, lead.arclength, False))

    def _spawn_arrivals(self, count: int, messages: list) -> None:
        entries = self.area.entry_locations()
        for _ in range(count):
            tid, s, _p = entries[self.rng.randrange(len(entries))]
            trail = self.area.trail(tid)
            self._spawn_party(tid, s, _direction_on(trail, s, self.rng), messages)

    def _prefill(self, messages: list) -> None:
        n = poisson(self.rng, self.target_population(self.clock(0.0)) / self._mean_group_factor())
        lengths = [t.length for t in self.area.trails]
        for _ in range(n):
            trail = self.rng.choices(self.area.trails, weights=lengths)[0]
            s = self.rng.uniform(0.0, trail.length)
            self._spawn_party(trail.id, s, 1 if self.rng.random() < 0.5 else -1, messages)

    def _mean_group_factor(self) -> float:
        """Mean party size."""
        f = self.params.group_fraction
        denom = f / self._mean_group + (1 - f)
        return 1.0 / denom if denom > 0 else 1.0

    def _severity(self, point: GeoPoint) -> float:
        """Hazard multiplier from the nearest station's current tags and the avalanche level."""
        floor = self.params.weather_floor
        if not self.readings:
            return floor
        st = min(self.area.weather_stations, key=lambda w: distance(w.location, point))
        reading = self.readings.get(st.id)
        if reading is None:
            return floor
        tags = a2_tag_weather(reading, self.area.thresholds, self.scenario.season)
        worst = max(int(a[1]) for a in tags.atoms()) - 1
        aval = {"A1": 0, "A2": 0, "A3": 1, "A4": 2, "A5": 2}[self.avalanche]
        return floor + max(worst, aval)

    def _hazard(self, rate_per_hour: float, mult: float) -> bool:
        return self.rng.random() < 1.0 - math.exp(-rate_per_hour * mult * self.params.tick / HOUR)

    # -- dynamics -----------------------------------------------------------------------

    def _advance_walker(self, agent: _Agent, exits: list[str]) -> None:
        p = self.params
        t = agent.tourist
        now = self.time
        if t.state in (TouristState.NO_MOTION, TouristState.LOST, TouristState.RESCUED) or agent.resting:
            if t.resume_at is not None and now >= t.resume_at:
                self._resume(agent)
            return
        mult = self._severity(agent.position)
        if self._hazard(p.p_lost, mult):
            trail = self.area.trail(t.trail_id)
            hx, hy = trail.polyline.heading_at(t.arclength)
            off = self.rng.uniform(*p.lost_offset) * (1 if self.rng.random() < 0.5 else -1)
            base = self._position(t)
            cand = GeoPoint(base.x - hy * off, base.y + hx * off)
            if not self.area.in_bounds(cand):
                cand = GeoPoint(base.x + hy * off, base.y - hx * off)
            t.state, t.offtrail_point = TouristState.LOST, cand
            t.resume_at = now + self.rng.expovariate(1.0 / (p.lost_dwell_minutes * 60.0))
            self._log("lost", t.id, f"{abs(off):.0f}m")
            return
        if self._hazard(p.p_no_motion, mult):
            t.state = TouristState.NO_MOTION
            t.resume_at = now + 60.0 * self.rng.uniform(*p.no_motion_minutes)
            self._log("no_motion_start", t.id)
            return
        if walk(self.area, t, t.speed * p.tick, self.rng, p.p_switch):
            exits.append(t.id)
            return
        pos = self._position(t)
        for trail_id, i, sp in self._specials:
            key = (trail_id, i)
            if key not in agent.rested and sp.contains(pos):
                agent.rested.add(key)
                if self.rng.random() < p.p_rest:
                    agent.resting = True
                    t.resume_at = now + 60.0 * self.rng.uniform(*p.rest_minutes)
                    self._log("rest_start", t.id, f"{trail_id}#{i}")
                break

    def _resume(self, agent: _Agent) -> None:
        p = self.params
        t = agent.tourist
        now = self.time
        if agent.resting:
            agent.resting, t.resume_at = False, None
            self._log("rest_end", t.id)
        elif t.state is TouristState.NO_MOTION:
            t.state, t.resume_at = TouristState.HIKING, None
            self._log("no_motion_end", t.id)
        elif t.state is TouristState.LOST and not agent.pending_rescue:
            if self.rng.random() < p.p_self_return:
                t.state, t.offtrail_point, t.resume_at = TouristState.HIKING, None, None
                self._log("returned", t.id)
            else:
                agent.pending_rescue = True
                t.resume_at = now + self.rng.expovariate(1.0 / (p.rescue_minutes * 60.0))
                self._log("rescue_called", t.id)
        elif t.state is TouristState.LOST:
            agent.pending_rescue = False
            if self.rng.random() < p.p_evacuate:
                t.state, t.rescue_outcome = TouristState.EVACUATING, "evacuated"
                self._log("rescued", t.id, "evacuated")
            else:
                t.state, t.rescue_outcome = TouristState.HIKING, "guided"
                t.offtrail_point, t.resume_at = None, None
                self._log("rescued", t.id, "guided")

    def _advance_follower(self, agent: _Agent, exits: list[str]) -> None:
        p = self.params
        t = agent.tourist
        track = self.groups[t.group_id]
        newest = len(track.history) - 1
        if agent.straggle_until is not None:
            if self.time >= agent.straggle_until:
                agent.straggle_until = None
                t.speed = 2.0 * self.agents_speed(track)
                self._log("straggle_end", t.id)
            else:
                return
        elif not track.leader_gone and agent.history_index >= newest - 1:
            if self._hazard(p.p_straggle, self._severity(agent.position)):
                agent.straggle_until = self.time + 60.0 * self.rng.uniform(*p.straggle_minutes)
                self._log("straggle_start", t.id)
                return
        step = 2 if agent.history_index < newest - 1 else 1
        agent.history_index = min(agent.history_index + step, newest)
        if agent.history_index >= newest - 1:
            t.speed = self.agents_speed(track)
        point, trail_id, s, offtrail = track.history[agent.history_index]
        t.trail_id, t.arclength = trail_id, s
        t.state = TouristState.LOST if offtrail else TouristState.HIKING
        t.offtrail_point = point if offtrail else None
        if track.leader_gone and agent.history_index >= newest:
            exits.append(t.id)

    def agents_speed(self, track: _GroupTrack) -> float:
        lead = self.agents.get(track.group.leader_id)
        return lead.tourist.speed if lead is not None else self.params.speed_range[1]

    def _remove(self, tid: str, kind: str) -> None:
        agent = self.agents.pop(tid)
        agent.tourist.departed_at = self.time
        gid = agent.tourist.group_id
        if gid is not None and gid in self.groups:
            track = self.groups[gid]
            if tid == track.group.leader_id:
                track.leader_gone = True
                track.leader_outcome = kind
            if not any(m in self.agents for m in track.group.member_ids):
                del self.groups[gid]
        self._log("departure", tid, kind)

    def _move_animals(self) -> None:
        x0, y0, x1, y1 = self.area.bounds
        for a in self.animals:
            a.heading += self.rng.gauss(0.0, 0.6)
            d = a.speed * self.params.tick
            x = a.location.x + d * math.cos(a.heading)
            y = a.location.y + d * math.sin(a.heading)
            if not x0 <= x <= x1:
                a.heading = math.pi - a.heading
                x = min(max(x, x0), x1)
            if not y0 <= y <= y1:
                a.heading = -a.heading
                y = min(max(y, y0), y1)
            a.location = GeoPoint(x, y)

    # -- emission -----------------------------------------------------------------------------

    def _due(self, interval: float) -> bool:
        k = round(self.time / interval)
        return abs(self.time - k * interval) < 1e-6

    def _emit_sensors(self, messages: list, departing: Sequence[str] = ()) -> None:
        if self._due(self.params.weather_interval):
            for st in self.area.weather_stations:
                r = weather_at(self.scenario, st, self.time, self.params.duration, self.params.seed)
                self.readings[st.id] = r
                messages.append((Topic.WEATHER, r))
        if not self._due(self.params.geo_interval):
            return
        for a in self.animals:
            if a.gps_equipped:
                messages.append((Topic.GPS_ANIMAL, GpsFix(a.id, a.location, a.dangerous)))
        for tid in sorted(self.agents):
            agent = self.agents[tid]
            if agent.tourist.state is TouristState.EVACUATING and tid not in departing:
                continue
            self._emit_phone(agent, messages)

    def _emit_phone(self, agent: _Agent, messages: list) -> None:
        t = agent.tourist
        pos = agent.position
        for st in self.area.bts_stations:
            d = distance(st.location, pos)
            if d <= st.max_range:
                rssi = expected_rssi(st, d) + self.rng.gauss(0.0, st.noise_sigma)
                messages.append((Topic.BTS_MEASUREMENT, BtsSignal(st.id, t.id, rssi)))
        if t.phone_mode is PhoneMode.GPS_CONSENT:
            messages.append((Topic.GPS_TOURIST, GpsFix(t.id, pos)))

    def _publish(self, messages: list) -> list[Message]:
        out = []
        if self.broker is None:
            return [Message(topic, self.time, i, payload) for i, (topic, payload) in enumerate(messages)]
        for topic, payload in messages:
            out.append(self.broker.publish(topic, self.time, payload))
        return out

    # -- public API ------------------------------------------------------------------------------

    def start(self) -> list[Message]:
        """Populate the world at t = 0 and emit the first readings."""
        if self._started:
            raise RuntimeError("simulation already started")
        self._started = True
        p = self.params
        messages: list = []
        for i in range(p.animal_count):
            loc = GeoPoint(self.rng.uniform(self.area.bounds[0], self.area.bounds[2]),
                           self.rng.uniform(self.area.bounds[1], self.area.bounds[3]))
            self.animals.append(Animal(f"A{i + 1:02d}", loc, self.rng.uniform(*p.animal_speed),
                                       self.rng.uniform(0, 2 * math.pi), self.rng.random() < p.p_dangerous))
        messages.append((Topic.CONTROL, ControlEvent("set_avalanche", (("level", self.avalanche), ("by", "scenario")))))
        for it in p.initial_tourists:
            t = Tourist(self._new_id(), it.phone_mode, it.trail_id, it.arclength, it.direction, it.speed, 0.0)
            self.agents[t.id] = _Agent(t, self._position(t))
            self._log("arrival", t.id, f"{it.trail_id}@{it.arclength:.0f}")
            messages.append((Topic.CONTROL, ControlEvent("register", (
                ("tourist", t.id), ("mode", t.phone_mode.value), ("group", None), ("leader", None)))))
        if p.prefill:
            self._prefill(messages)
        self._emit_sensors(messages)
        return self._publish(messages)

    def step(self) -> list[Message]:
        """Advance the world by one tick and emit the messages for the new time."""
        if not self._started:
            return self.start()
        p = self.params
        self.steps += 1
        self.time = self.steps * p.tick
        messages: list = []
        f = self.time / p.duration
        level = self.scenario.avalanche_at(f)
        if level != self.avalanche:
            self.avalanche = level
            self._log("avalanche", "area", level)
            messages.append((Topic.CONTROL, ControlEvent("set_avalanche", (("level", level), ("by", "scenario")))))
        if self.scenario.switch is not None and abs(f - self.scenario.switch) < p.tick / p.duration / 2 + 1e-12:
            self._log("weather_switch", "area", self.scenario.switch_direction)

        exits: list[str] = []
        for tid in sorted(self.agents):
            agent = self.agents[tid]
            if not agent.follower:
                self._advance_walker(agent, exits)
                agent.position = self._position(agent.tourist)
                gid = agent.tourist.group_id
                if gid is not None:
                    t = agent.tourist
                    self.groups[gid].history.append(
                        (agent.position, t.trail_id, t.arclength, t.state is TouristState.LOST))
        for tid in sorted(self.agents):
            agent = self.agents[tid]
            if agent.follower:
                if tid in exits:
                    continue
                self._advance_follower(agent, exits)
                agent.position = self._position(agent.tourist)
        for tid in exits:
            leader = self.agents[tid]
            gid = leader.tourist.group_id
            if gid is not None and not leader.follower:
                self.groups[gid].leader_gone = True

        self._move_animals()
        if p.arrivals:
            n = poisson(self.rng, self.arrival_rate(self.clock()) * p.tick / self._mean_group_factor())
            self._spawn_arrivals(n, messages)

        # departing tourists send one last fix from the exit, evacuated ones go silent
        self._emit_sensors(messages, departing=exits)
        for tid in sorted(set(exits)):
            agent = self.agents[tid]
            kind = "exit"
            if agent.follower:
                kind = self.groups[agent.tourist.group_id].leader_outcome
            self._remove(tid, kind)
        for tid in sorted(self.agents):
            if self.agents[tid].tourist.state is TouristState.EVACUATING:
                self._remove(tid, "evacuated")
        return self._publish(messages)

    def run(self) -> list[Message]:
        out = self.start()
        while self.time + self.params.tick <= self.params.duration + 1e-9:
            out.extend(self.step())
        return out

    @property
    def population(self) -> int:
        return len(self.agents)
