"""Wires simulator, broker, pipeline and dumps into one simulated-time run."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .analytics import Dump, svg_snapshot, take_dump, write_reports
from .broker import Broker
from .reasoning.pipeline import Pipeline
from .repository import Journal, Repository, default_alert_sets, load_alert_sets_file
from .simulator.engine import SimParams, Simulator
from .simulator.scenario import WeatherScenario, builtin_scenario
from .world import AreaConfig, default_area, load_area_file


@dataclass(frozen=True)
class RunManifest:
    scenario: int = 1
    seed: int = 0
    duration: float = 3600.0
    speedup: float = 25.0
    dump_every: float | None = None  # default: twelve dumps per run
    alerts: str = "Alerts1"
    alerts_path: str | None = None
    area_path: str | None = None
    out_dir: str | None = None
    svg: bool = False
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.scenario not in range(1, 6):
            raise ValueError(f"scenario must be 1..5, got {self.scenario}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.dump_every is not None and self.dump_every <= 0:
            raise ValueError("dump interval must be positive")

    @property
    def dump_interval(self) -> float:
        return self.dump_every if self.dump_every is not None else self.duration / 12.0


@dataclass
class RunResult:
    manifest: RunManifest
    area: AreaConfig
    scenario: WeatherScenario
    simulator: Simulator
    pipeline: Pipeline
    journal: Journal
    dumps: list[Dump]
    artifacts: dict[str, Path] = field(default_factory=dict)


def run_simulation(
    manifest: RunManifest,
    area: AreaConfig | None = None,
    scenario: WeatherScenario | None = None,
    keep_traces: bool = True,
) -> RunResult:
    """Run simulator and pipeline in lock step: one tick, then one cycle.

    Nothing sleeps; ``speedup`` is recorded as metadata only.
    """
    area = area or (load_area_file(manifest.area_path) if manifest.area_path else default_area())
    scenario = scenario or builtin_scenario(manifest.scenario)
    sets = load_alert_sets_file(manifest.alerts_path) if manifest.alerts_path else default_alert_sets()
    params = SimParams(seed=manifest.seed, duration=manifest.duration, speedup=manifest.speedup, **manifest.params)

    out = Path(manifest.out_dir) if manifest.out_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    journal = Journal(out / "journal.jsonl" if out else None)
    broker = Broker()
    repo = Repository(sets, manifest.alerts, scenario.avalanche)
    pipeline = Pipeline(area, broker, repo, journal, scenario.start_clock, scenario.season, keep_traces=keep_traces)
    sim = Simulator(area, scenario, params, broker)

    dumps: list[Dump] = []
    interval = manifest.dump_interval
    next_dump = interval
    sim.start()
    pipeline.cycle(sim.time)
    pipeline.feed.drain()
    while sim.time + params.tick <= params.duration + 1e-9:
        sim.step()
        pipeline.cycle(sim.time)
        pipeline.feed.drain()
        if sim.time + 1e-9 >= next_dump:
            dumps.append(take_dump(len(dumps) + 1, sim.time, pipeline))
            if manifest.svg and out is not None:
                snap = pipeline.repo.snapshot(sim.time)
                (out / f"map_{len(dumps):02d}.svg").write_text(
                    svg_snapshot(area, snap.rows, pipeline.last_verdicts), encoding="utf-8")
            next_dump += interval
    broker.close()
    journal.close()

    result = RunResult(manifest, area, scenario, sim, pipeline, journal, dumps)
    if out is not None:
        meta = {k: v for k, v in dataclasses.asdict(manifest).items() if k != "out_dir"}
        meta["season"] = scenario.season
        result.artifacts = write_reports(out, dumps, journal.records, meta)
        result.artifacts["journal"] = out / "journal.jsonl"
        traces = out / "traces.tsv"
        with open(traces, "w", encoding="utf-8", newline="\n") as fh:
            for tid in sorted(pipeline.traces):
                for point in pipeline.traces[tid]:
                    fh.write(point.format() + "\n")
        result.artifacts["traces"] = traces
    return result
