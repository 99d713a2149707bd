"""Weather verdicts by entailment, strongest level first."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..repository import WEATHER_LEVELS, AlertSet
from .logic import a4_encode
from .sat import SolverStats

CASCADE_ORDER = tuple(reversed(WEATHER_LEVELS))  # E5, E4, E3, E2


@dataclass(frozen=True, slots=True)
class ThreatVerdict:
    tourist_id: str
    weather: str
    situational: frozenset[str]
    cycle: int
    timestamp: float
    alert_set: str = ""


class Reasoner:
    """Entailment checks with a verdict cache.

    A context is fully described by its atom set, so the answer for
    ``(alert set, atoms, level)`` never changes within a run; repeated
    questions are answered from the cache and do not start the solver.
    """

    def __init__(self, stats: SolverStats | None = None, cache: bool = True):
        self.stats = stats or SolverStats()
        self._cache: dict[tuple, bool] | None = {} if cache else None

    def entails(self, atoms: tuple[str, ...], alert_set: AlertSet, level: str) -> bool:
        self.stats.calls += 1
        key = (alert_set.name, id(alert_set), atoms, level)
        if self._cache is not None and key in self._cache:
            return self._cache[key]
        difficulty, day_night, season = atoms[5], atoms[6], atoms[7]
        formula = alert_set.formula(level, difficulty, day_night, season)
        result = not self.stats.timed_solve(a4_encode(atoms, formula)).satisfiable
        if self._cache is not None:
            self._cache[key] = result
        return result

    def weather_cascade(self, atoms: Iterable[str], alert_set: AlertSet) -> str:
        """First entailed level from E5 down to E2, else E1.

        ``atoms`` is ordered W, F, T, R, A, D, day/night, season.
        """
        atoms = tuple(atoms)
        for level in CASCADE_ORDER:
            if self.entails(atoms, alert_set, level):
                return level
        return "E1"
