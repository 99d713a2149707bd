"""Twenty-four-hour preliminary simulation with fixed threat probabilities.

Readings every 30 minutes starting at 05:00.  The population of each
reading is Poisson around a normal-shaped daily curve.  Per tourist and
reading, situational threats are drawn first; if any fires, the weather
draw is skipped.  Category influence counts the context readings that the
detectors and the weather evaluation consult.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field

from .engine import poisson

S_PROBABILITIES = {"E6g": 0.05, "E6m": 0.05, "E6a": 0.05, "E6r": 0.10}
CATEGORIES = ("Individuality", "Time", "Location", "Activity", "Relations")
# which context category each situational detector reads
DETECTOR_CATEGORY = {"E6g": "Relations", "E6a": "Relations", "E6m": "Activity", "E6r": "Location"}


@dataclass(frozen=True)
class PrelimParams:
    seed: int = 0
    readings: int = 48
    step_hours: float = 0.5
    start_hour: float = 5.0
    peak_population: float = 200.0
    peak_hour: float = 14.0
    sigma_hours: float = 4.0
    group_fraction: float = 0.3
    s_probabilities: dict[str, float] = field(default_factory=lambda: dict(S_PROBABILITIES))
    # weather-threat probability per interval: 05-11, 11-17, 17-05
    base_weather: float = 0.20
    midday_increase: float = 0.20
    night_increase: float = 1.00

    def __post_init__(self) -> None:
        for k, v in self.s_probabilities.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"P({k}) must be in [0, 1]")
        if not 0.0 <= self.group_fraction <= 1.0:
            raise ValueError("group_fraction must be in [0, 1]")
        for p in (self.interval_probability(i) for i in (1, 2, 3)):
            if not 0.0 <= p <= 1.0:
                raise ValueError("weather probability out of [0, 1]")

    def interval_probability(self, interval: int) -> float:
        """Relative increases over the first interval's probability."""
        if interval == 1:
            return self.base_weather
        if interval == 2:
            return self.base_weather * (1.0 + self.midday_increase)
        return self.base_weather * (1.0 + self.night_increase)


def interval_of(hour: float) -> int:
    h = hour % 24.0
    if 5.0 <= h < 11.0:
        return 1
    if 11.0 <= h < 17.0:
        return 2
    return 3


@dataclass(frozen=True)
class PrelimRow:
    index: int
    hour: float
    interval: int
    tourists: int
    weather_draws: int
    weather: dict[str, int]
    situational: dict[str, int]

    @property
    def weather_total(self) -> int:
        return sum(self.weather.values())


@dataclass(frozen=True)
class PrelimResult:
    rows: tuple[PrelimRow, ...]
    categories: dict[str, int]
    attributed: dict[str, int]

    def interval_frequency(self, interval: int) -> float:
        """Weather threats per weather draw within one interval."""
        draws = sum(r.weather_draws for r in self.rows if r.interval == interval)
        hits = sum(r.weather_total for r in self.rows if r.interval == interval)
        return hits / draws if draws else 0.0


def run_preliminary(params: PrelimParams | None = None) -> PrelimResult:
    params = params or PrelimParams()
    rng = random.Random(f"prelim:{params.seed}")
    rows = []
    categories = Counter({c: 0 for c in CATEGORIES})
    attributed = Counter({c: 0 for c in CATEGORIES})
    labels = ("E6g", "E6m", "E6a", "E6r")
    for k in range(params.readings):
        hour = (params.start_hour + k * params.step_hours) % 24.0
        interval = interval_of(hour)
        dh = hour - params.peak_hour
        mean = params.peak_population * math.exp(-(dh * dh) / (2.0 * params.sigma_hours ** 2))
        n = poisson(rng, mean)
        p_w = params.interval_probability(interval)
        weather = Counter({lvl: 0 for lvl in ("E2", "E3", "E4", "E5")})
        situational = Counter({s: 0 for s in labels})
        draws = 0
        for _ in range(n):
            in_group = rng.random() < params.group_fraction
            fired = []
            for s in labels:
                if s == "E6g" and not in_group:
                    continue
                categories[DETECTOR_CATEGORY[s]] += 1
                if rng.random() < params.s_probabilities.get(s, 0.0):
                    fired.append(s)
            for s in fired:
                situational[s] += 1
                attributed[DETECTOR_CATEGORY[s]] += 1
            if fired:
                continue
            draws += 1
            categories["Individuality"] += 1
            categories["Time"] += 1
            if rng.random() < p_w:
                weather[rng.choice(("E2", "E3", "E4", "E5"))] += 1
                attributed["Individuality"] += 1
                attributed["Time"] += 1
        rows.append(PrelimRow(k + 1, hour, interval, n, draws, dict(weather), dict(situational)))
    return PrelimResult(tuple(rows), dict(categories), dict(attributed))
