"""Weather scenarios: per-factor severity curves over the run.

A curve is piecewise linear over run fractions.  Two points at the same
fraction make a step (the later point applies from that fraction on).
Optional periodic fluctuation and bounded noise are added on top, each
active until its own run fraction.  A local disturbance adds deltas to
stations inside a circle for a time window.
"""

from __future__ import annotations

import math
import random
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from ..broker import WeatherReading
from ..geo import GeoPoint, distance
from ..world import AVALANCHE_LEVELS, SEASONS, ConfigError, WeatherStation, parse_clock

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FACTORS = ("wind", "visibility", "temperature", "rain")
# physical floors; wind, visibility and rain cannot go negative
_FLOOR = {"wind": 0.0, "visibility": 10.0, "temperature": -60.0, "rain": 0.0}


@dataclass(frozen=True)
class Fluctuation:
    shape: str  # "sine" | "square"
    amplitude: float
    period: float  # simulated seconds
    until: float = 1.0
    phase: float = 0.0

    def value(self, t: float) -> float:
        x = 2.0 * math.pi * (t / self.period + self.phase)
        if self.shape == "sine":
            return self.amplitude * math.sin(x)
        # square: +A on the first half of each period, -A on the second
        frac = (t / self.period + self.phase) % 1.0
        return self.amplitude if frac < 0.5 else -self.amplitude


@dataclass(frozen=True)
class Curve:
    points: tuple[tuple[float, float], ...]
    fluctuation: Fluctuation | None = None
    noise: float = 0.0
    noise_until: float = 1.0

    def base(self, f: float) -> float:
        pts = self.points
        k = 0
        for i, (x, _) in enumerate(pts):
            if x <= f:
                k = i
        x0, y0 = pts[k]
        if k + 1 < len(pts):
            x1, y1 = pts[k + 1]
            if x1 > x0:
                return y0 + (y1 - y0) * (min(f, x1) - x0) / (x1 - x0)
        return y0


@dataclass(frozen=True)
class Disturbance:
    center: GeoPoint
    radius: float
    start: float
    end: float
    deltas: dict[str, float] = field(default_factory=dict)

    def applies(self, location: GeoPoint, f: float) -> bool:
        return self.start <= f < self.end and distance(location, self.center) <= self.radius


@dataclass(frozen=True)
class WeatherScenario:
    id: int
    name: str
    season: str
    start_clock: float
    avalanche: str
    curves: dict[str, Curve]
    switch: float | None = None
    switch_direction: str = ""  # "worse" | "better"
    disturbance: Disturbance | None = None
    avalanche_changes: tuple[tuple[float, str], ...] = ()

    def avalanche_at(self, f: float) -> str:
        level = self.avalanche
        for at, lvl in self.avalanche_changes:
            if f >= at:
                level = lvl
        return level


def weather_at(
    scenario: WeatherScenario,
    station: WeatherStation,
    t: float,
    duration: float,
    seed: int = 0,
) -> WeatherReading:
    """Raw reading of ``station`` at simulated time ``t``.

    Deterministic in (scenario, station, t, seed): the noise draw is seeded
    by those values alone, not by any shared generator state.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    f = min(max(t / duration, 0.0), 1.0)
    rng = random.Random(f"{seed}:{scenario.id}:{station.id}:{round(t, 6)}")
    values = {}
    for name in FACTORS:
        c = scenario.curves[name]
        v = c.base(f)
        if c.fluctuation is not None and f < c.fluctuation.until:
            v += c.fluctuation.value(t)
        if c.noise > 0 and f < c.noise_until:
            v += rng.uniform(-c.noise, c.noise)
        if scenario.disturbance is not None and scenario.disturbance.applies(station.location, f):
            v += scenario.disturbance.deltas.get(name, 0.0)
        values[name] = max(v, _FLOOR[name])
    return WeatherReading(station.id, values["wind"], values["visibility"], values["temperature"], values["rain"])


# --- loading ---------------------------------------------------------------------

def _curve(path: str, raw: Any) -> Curve:
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a table")
    extra = set(raw) - {"points", "fluctuation", "noise", "noise_until"}
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")
    pts = raw.get("points")
    if not pts or not all(isinstance(p, list) and len(p) == 2 for p in pts):
        raise ConfigError(f"{path}.points", "expected [[fraction, value], ...]")
    points = tuple((float(a), float(b)) for a, b in pts)
    if points[0][0] != 0.0 or any(b[0] < a[0] for a, b in zip(points, points[1:])):
        raise ConfigError(f"{path}.points", "fractions must start at 0 and be non-decreasing")
    fl = None
    if "fluctuation" in raw:
        r = raw["fluctuation"]
        extra = set(r) - {"shape", "amplitude", "period", "until", "phase"}
        if extra:
            raise ConfigError(f"{path}.fluctuation.{sorted(extra)[0]}", "unknown key")
        if r.get("shape") not in ("sine", "square"):
            raise ConfigError(f"{path}.fluctuation.shape", "expected 'sine' or 'square'")
        if float(r.get("period", 0)) <= 0:
            raise ConfigError(f"{path}.fluctuation.period", "must be positive")
        fl = Fluctuation(
            r["shape"], float(r.get("amplitude", 0.0)), float(r["period"]),
            float(r.get("until", 1.0)), float(r.get("phase", 0.0)),
        )
    noise = float(raw.get("noise", 0.0))
    if noise < 0:
        raise ConfigError(f"{path}.noise", "must be non-negative")
    return Curve(points, fl, noise, float(raw.get("noise_until", 1.0)))


def scenario_from_dict(doc: dict[str, Any]) -> WeatherScenario:
    allowed = {"id", "name", "season", "start_clock", "avalanche", "switch", "switch_direction",
               "factor", "disturbance", "avalanche_change"}
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown key")
    sid = doc.get("id")
    if not isinstance(sid, int) or not 1 <= sid <= 5:
        raise ConfigError("id", "scenario id must be 1..5")
    season = doc.get("season", "Summer")
    if season not in SEASONS:
        raise ConfigError("season", f"expected one of {SEASONS}")
    avalanche = doc.get("avalanche", "A1")
    if avalanche not in AVALANCHE_LEVELS:
        raise ConfigError("avalanche", f"expected one of {AVALANCHE_LEVELS}")
    factors = doc.get("factor", {})
    missing = [f for f in FACTORS if f not in factors]
    if missing:
        raise ConfigError(f"factor.{missing[0]}", "missing")
    curves = {f: _curve(f"factor.{f}", factors[f]) for f in FACTORS}
    dist = None
    if "disturbance" in doc:
        d = doc["disturbance"]
        deltas = {k: float(v) for k, v in d.get("delta", {}).items()}
        if set(deltas) - set(FACTORS):
            raise ConfigError("disturbance.delta", "unknown factor")
        cx, cy = d["center"]
        dist = Disturbance(GeoPoint(float(cx), float(cy)), float(d["radius"]), float(d["start"]), float(d["end"]), deltas)
    changes = []
    for i, ch in enumerate(doc.get("avalanche_change", [])):
        if ch.get("level") not in AVALANCHE_LEVELS:
            raise ConfigError(f"avalanche_change[{i}].level", "unknown level")
        changes.append((float(ch["at"]), ch["level"]))
    return WeatherScenario(
        id=sid,
        name=doc.get("name", f"Scenario {sid}"),
        season=season,
        start_clock=parse_clock(doc.get("start_clock", "10:00")),
        avalanche=avalanche,
        curves=curves,
        switch=float(doc["switch"]) if "switch" in doc else None,
        switch_direction=doc.get("switch_direction", ""),
        disturbance=dist,
        avalanche_changes=tuple(sorted(changes)),
    )


def load_scenario(text: str) -> WeatherScenario:
    try:
        return scenario_from_dict(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<toml>", str(exc)) from None


def load_scenario_file(path: str | Path) -> WeatherScenario:
    return load_scenario(Path(path).read_text(encoding="utf-8"))


def builtin_scenario(sid: int) -> WeatherScenario:
    if sid not in range(1, 6):
        raise ValueError(f"scenario must be 1..5, got {sid}")
    ref = resources.files("rescuectx").joinpath(f"data/scenarios/scenario{sid}.toml")
    return load_scenario(ref.read_text(encoding="utf-8"))
