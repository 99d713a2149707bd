"""Situational (non-weather) threat detectors."""

from __future__ import annotations

from ..repository import ContextRow
from ..world import DetectorConfig

SITUATIONAL = ("E6g", "E6a", "E6m", "E6r")


def a3_detect_nonweather(row: ContextRow, cfg: DetectorConfig) -> frozenset[str]:
    """Each detector fires independently of the others and of the weather."""
    hits = set()
    if row.leader_distance is not None and row.leader_distance > cfg.leader_distance:
        hits.add("E6g")
    if row.animal_distance is not None and row.animal_distance < cfg.animal_distance:
        hits.add("E6a")
    if row.motion_idle_seconds > cfg.no_motion_seconds and not row.in_special_place:
        hits.add("E6m")
    if row.off_trail:
        hits.add("E6r")
    return frozenset(hits)
