"""Context store: one row per tourist, hot-swappable alert sets, avalanche level.

The pipeline is the single writer; readers work on ``Snapshot`` objects,
which are detached copies and never see later writes.
"""

from __future__ import annotations

import io
import itertools
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

from .geo import GeoPoint
from .preprocess import GeoFix, WeatherTags
from .reasoning.logic import EncodingError, Formula, FormulaSyntaxError, check_atoms, parse_formula, to_text
from .world import AVALANCHE_LEVELS, DIFFICULTIES, SEASONS, ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

WEATHER_LEVELS = ("E2", "E3", "E4", "E5")
DAY_NIGHT = ("Day", "Night")
WILDCARD = "*"


class StaleWriteError(RuntimeError):
    """Write for a tourist that already departed."""


class NotFoundError(KeyError):
    pass


@dataclass(frozen=True, slots=True)
class ContextRow:
    tourist_id: str
    fix: GeoFix
    trail_id: str
    arclength: float
    direction: int
    difficulty: str
    tags: WeatherTags
    selected_station: str
    in_range_count: int
    day_night: str
    season: str
    avalanche: str
    motion_idle_seconds: float
    off_trail: bool
    in_special_place: bool
    updated_at: float
    cycle: int
    group_id: str | None = None
    leader_distance: float | None = None
    animal_distance: float | None = None

    @property
    def point(self) -> GeoPoint:
        return self.fix.point

    def atoms(self) -> tuple[str, ...]:
        return (*self.tags.atoms(), self.avalanche, self.difficulty, self.day_night, self.season)

    def context_key(self) -> tuple:
        """Fields whose change counts as a context transition."""
        return (self.tags, self.trail_id, self.difficulty, self.day_night)


# --- alert sets --------------------------------------------------------------

@dataclass(frozen=True)
class AlertEntry:
    level: str
    difficulty: str
    day_night: str
    season: str
    formula: Formula

    @property
    def specificity(self) -> tuple[bool, bool, bool]:
        return (self.difficulty != WILDCARD, self.day_night != WILDCARD, self.season != WILDCARD)

    def matches(self, difficulty: str, day_night: str, season: str) -> bool:
        return (
            self.difficulty in (WILDCARD, difficulty)
            and self.day_night in (WILDCARD, day_night)
            and self.season in (WILDCARD, season)
        )


@dataclass(frozen=True)
class AlertSet:
    """Trigger formulas keyed by (level, difficulty, day/night, season).

    ``*`` matches anything; the most specific matching entry wins, ranked
    by difficulty, then day/night, then season.
    """

    name: str
    entries: tuple[AlertEntry, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        for lvl, d, dn, s in itertools.product(WEATHER_LEVELS, DIFFICULTIES, DAY_NIGHT, SEASONS):
            self.formula(lvl, d, dn, s)

    def formula(self, level: str, difficulty: str, day_night: str, season: str) -> Formula:
        key = (level, difficulty, day_night, season)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        matching = [e for e in self.entries if e.level == level and e.matches(difficulty, day_night, season)]
        if not matching:
            raise NotFoundError(f"alert set {self.name!r} has no formula for {key}")
        best = max(matching, key=lambda e: e.specificity)
        self._cache[key] = best.formula
        return best.formula


def _alert_sets_from_doc(doc: Mapping[str, Any]) -> dict[str, AlertSet]:
    unknown = set(doc) - {"set"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    sets: dict[str, AlertSet] = {}
    for i, raw in enumerate(doc.get("set", [])):
        path = f"set[{i}]"
        extra = set(raw) - {"name", "alert"}
        if extra:
            raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")
        if "name" not in raw:
            raise ConfigError(f"{path}.name", "missing")
        entries = []
        for j, a in enumerate(raw.get("alert", [])):
            apath = f"{path}.alert[{j}]"
            extra = set(a) - {"level", "difficulty", "day_night", "season", "formula"}
            if extra:
                raise ConfigError(f"{apath}.{sorted(extra)[0]}", "unknown key")
            level = a.get("level")
            if level not in WEATHER_LEVELS:
                raise ConfigError(f"{apath}.level", f"expected one of {WEATHER_LEVELS}, got {level!r}")
            d, dn, s = a.get("difficulty", WILDCARD), a.get("day_night", WILDCARD), a.get("season", WILDCARD)
            for key, value, allowed in (
                ("difficulty", d, DIFFICULTIES),
                ("day_night", dn, DAY_NIGHT),
                ("season", s, SEASONS),
            ):
                if value != WILDCARD and value not in allowed:
                    raise ConfigError(f"{apath}.{key}", f"unknown value {value!r}")
            try:
                f = parse_formula(a["formula"])
                check_atoms(f)
            except KeyError:
                raise ConfigError(f"{apath}.formula", "missing") from None
            except (FormulaSyntaxError, EncodingError) as exc:
                raise ConfigError(f"{apath}.formula", str(exc)) from None
            entries.append(AlertEntry(level, d, dn, s, f))
        try:
            sets[raw["name"]] = AlertSet(raw["name"], tuple(entries))
        except NotFoundError as exc:
            raise ConfigError(path, str(exc)) from None
    if not sets:
        raise ConfigError("set", "no alert sets defined")
    return sets


def load_alert_sets(text: str) -> dict[str, AlertSet]:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<toml>", str(exc)) from None
    return _alert_sets_from_doc(doc)


def load_alert_sets_file(path: str | Path) -> dict[str, AlertSet]:
    return load_alert_sets(Path(path).read_text(encoding="utf-8"))


def default_alert_sets() -> dict[str, AlertSet]:
    text = resources.files("rescuectx").joinpath("data/alerts.toml").read_text(encoding="utf-8")
    return load_alert_sets(text)


# --- store -------------------------------------------------------------------

@dataclass(frozen=True)
class AvalancheLevel:
    level: str
    set_by: str = "config"
    set_at: float = 0.0

    def __post_init__(self) -> None:
        if self.level not in AVALANCHE_LEVELS:
            raise ValueError(f"avalanche level must be one of {AVALANCHE_LEVELS}, got {self.level!r}")


@dataclass(frozen=True)
class Snapshot:
    rows: Mapping[str, ContextRow]
    alert_set: AlertSet
    avalanche: AvalancheLevel
    taken_at: float

    def __len__(self) -> int:
        return len(self.rows)


class Repository:
    def __init__(self, alert_sets: Mapping[str, AlertSet], active: str, avalanche: str = "A1"):
        if active not in alert_sets:
            raise NotFoundError(active)
        self._sets = dict(alert_sets)
        self._active = active
        self._rows: dict[str, ContextRow] = {}
        self._departed: set[str] = set()
        self.avalanche = AvalancheLevel(avalanche)
        self.stale_writes = 0

    @property
    def active_set(self) -> AlertSet:
        return self._sets[self._active]

    def __len__(self) -> int:
        return len(self._rows)

    def get(self, tourist_id: str) -> ContextRow | None:
        return self._rows.get(tourist_id)

    def upsert_row(self, row: ContextRow) -> ContextRow | None:
        if row.tourist_id in self._departed:
            self.stale_writes += 1
            raise StaleWriteError(f"{row.tourist_id} already departed")
        prev = self._rows.get(row.tourist_id)
        if prev is not None and row.updated_at < prev.updated_at:
            raise ValueError(f"{row.tourist_id}: updated_at went backwards")
        self._rows[row.tourist_id] = row
        return prev

    def depart(self, tourist_id: str) -> ContextRow | None:
        self._departed.add(tourist_id)
        return self._rows.pop(tourist_id, None)

    def snapshot(self, taken_at: float = 0.0) -> Snapshot:
        return Snapshot(MappingProxyType(dict(self._rows)), self.active_set, self.avalanche, taken_at)

    def swap_alert_set(self, name: str) -> str:
        if name not in self._sets:
            raise NotFoundError(f"unknown alert set {name!r}")
        prev, self._active = self._active, name
        return prev

    def set_avalanche(self, level: str, set_by: str = "operator", set_at: float = 0.0) -> AvalancheLevel:
        prev = self.avalanche
        self.avalanche = AvalancheLevel(level, set_by, set_at)
        return prev


# --- journal -----------------------------------------------------------------

def _round(value: Any, digits: int = 3) -> Any:
    if isinstance(value, float):
        r = round(value, digits)
        return 0.0 if r == 0 else r
    if isinstance(value, dict):
        return {k: _round(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v, digits) for v in value]
    return value


class Journal:
    """Append-only JSON-lines run log.

    Keys are sorted and floats rounded so identical runs give identical
    bytes.  Records are kept in memory as well when ``keep`` is set.
    """

    def __init__(self, path: str | Path | None = None, keep: bool = True):
        self.path = Path(path) if path is not None else None
        self._fh: io.TextIOBase | None = (
            open(self.path, "w", encoding="utf-8", newline="\n") if self.path is not None else None
        )
        self.keep = keep
        self.records: list[dict[str, Any]] = []

    def record(self, kind: str, **fields: Any) -> None:
        rec = _round({"kind": kind, **fields})
        if self.keep:
            self.records.append(rec)
        if self._fh is not None:
            self._fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "Journal":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_journal(path: str | Path) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def formula_text(f: Formula) -> str:
    return to_text(f)
