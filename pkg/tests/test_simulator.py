import dataclasses
import math
import statistics

import pytest

from rescuectx.broker import Topic
from rescuectx.geo import distance, project_onto_trail
from rescuectx.simulator import (
    InitialTourist,
    PrelimParams,
    SimParams,
    Simulator,
    builtin_scenario,
    interval_of,
    run_preliminary,
    weather_at,
)
from rescuectx.simulator.engine import _rate_coefficients, poisson
from rescuectx.simulator.scenario import load_scenario
from rescuectx.world import ConfigError, TouristState, default_area, load_area

from helpers import MINI_AREA

AREA = default_area()
QUIET = dict(arrivals=False, prefill=False, animal_count=0)


def run(sim):
    out = sim.start()
    while sim.time + sim.params.tick <= sim.params.duration + 1e-9:
        out.extend(sim.step())
    return out


def test_poisson_moments():
    import random

    rng = random.Random(0)
    for mean in (0.5, 4.0, 60.0):
        xs = [poisson(rng, mean) for _ in range(4000)]
        assert abs(statistics.mean(xs) - mean) < 4 * math.sqrt(mean / 4000)
        assert abs(statistics.variance(xs) - mean) < 0.15 * mean
    assert poisson(rng, 0.0) == 0


def test_rate_coefficients_exponential_limit():
    # exponential stays with mean T: moments T, 2T^2, 6T^3
    assert _rate_coefficients(10.0, 200.0, 6000.0) == pytest.approx((0.1, 1.0, 0.0))


def test_params_validation():
    with pytest.raises(ValueError):
        SimParams(p_switch=1.5)
    with pytest.raises(ValueError):
        SimParams(tick=0)
    with pytest.raises(ValueError):
        SimParams(phone_consent=0.7, phone_refused=0.5)


def test_same_seed_same_stream():
    p = SimParams(seed=3, duration=600)
    a = Simulator(AREA, builtin_scenario(1), p)
    b = Simulator(AREA, builtin_scenario(1), p)
    assert run(a) == run(b)
    assert a.events == b.events
    c = Simulator(AREA, builtin_scenario(1), dataclasses.replace(p, seed=4))
    assert run(c) != run(Simulator(AREA, builtin_scenario(1), p))


def test_empty_area_emits_weather_only():
    sim = Simulator(AREA, builtin_scenario(1), SimParams(duration=300, **QUIET))
    topics = {m.topic for m in run(sim)}
    assert Topic.WEATHER in topics
    assert topics <= {Topic.WEATHER, Topic.CONTROL}


def test_straight_trail_kinematics():
    area = load_area(MINI_AREA)
    params = SimParams(duration=10, tick=1, weather_interval=1, geo_interval=1, p_lost=0, p_no_motion=0,
                       initial_tourists=(InitialTourist("H1", 500.0, 1, 1.4),), **QUIET)
    sim = Simulator(area, builtin_scenario(3), params)
    sim.start()
    sim.step()
    (agent,) = sim.agents.values()
    assert agent.tourist.arclength == pytest.approx(501.4)


def test_dead_end_reverses_and_entry_exits():
    area = load_area(MINI_AREA)
    params = SimParams(duration=120, tick=30, p_lost=0, p_no_motion=0,
                       initial_tourists=(InitialTourist("H1", 1750.0, 1, 2.0),), **QUIET)
    sim = Simulator(area, builtin_scenario(3), params)
    run(sim)
    assert sim.population == 0
    assert [e.kind for e in sim.events] == ["arrival", "departure"]


def test_no_teleport_and_trail_membership():
    p = SimParams(seed=5, duration=1800)
    sim = Simulator(AREA, builtin_scenario(4), p)
    sim.start()
    last = {tid: a.position for tid, a in sim.agents.items()}
    bound = max(p.speed_range) * 2 * p.tick + 2 * p.lost_offset[1] + 1e-6
    while sim.time + p.tick <= p.duration:
        sim.step()
        for tid, a in sim.agents.items():
            if tid in last:
                assert distance(last[tid], a.position) <= bound
            assert a.tourist.state is not TouristState.DEPARTED
            assert a.tourist.trail_id in {t.id for t in AREA.trails}
        last = {tid: a.position for tid, a in sim.agents.items()}


def test_animals_avoid_trails():
    sim = Simulator(AREA, builtin_scenario(1), SimParams(seed=2, duration=3600, arrivals=False, prefill=False,
                                                         animal_count=12))
    near = total = 0
    for m in run(sim):
        if m.topic is Topic.GPS_ANIMAL:
            total += 1
            if min(project_onto_trail(m.payload.point, t.polyline).distance for t in AREA.trails) <= 5.0:
                near += 1
    assert total > 0 and near / total < 0.2


def test_conservation_against_event_log():
    sim = Simulator(AREA, builtin_scenario(1), SimParams(seed=8, duration=1800))
    run(sim)
    arrivals = sum(1 for e in sim.events if e.kind == "arrival")
    departures = sum(1 for e in sim.events if e.kind == "departure")
    assert arrivals - departures == sim.population
    assert [e.timestamp for e in sim.events] == sorted(e.timestamp for e in sim.events)


@pytest.mark.slow
def test_population_near_peak():
    scenario = dataclasses.replace(builtin_scenario(3), start_clock=13.5 * 3600)
    pops = []
    for seed in range(30):
        sim = Simulator(AREA, scenario, SimParams(seed=seed, duration=1800, peak_population=200, animal_count=0))
        run(sim)
        pops.append(sim.population)
    assert 170 <= statistics.mean(pops) <= 230


# --- weather --------------------------------------------------------------------

STATION = AREA.weather_stations[0]


def test_weather_is_deterministic():
    sc = builtin_scenario(1)
    assert weather_at(sc, STATION, 600, 3600, 7) == weather_at(sc, STATION, 600, 3600, 7)
    assert weather_at(sc, STATION, 600, 3600, 7) != weather_at(sc, STATION, 600, 3600, 8)


def test_scenario2_switch():
    sc = builtin_scenario(2)
    before = weather_at(sc, STATION, 0.2 * 3600, 3600)
    assert before.wind == pytest.approx(3.0, abs=1.0)
    assert before.visibility == pytest.approx(5000.0, abs=300.0)
    after = [weather_at(sc, STATION, t, 3600) for t in range(int(0.4 * 3600), 3601, 60)]
    first = after[0]
    assert (first.wind, first.visibility, first.temperature, first.rain) == (18.0, 600.0, 6.0, 4.0)
    assert all(r == first.__class__(STATION.id, 18.0, 600.0, 6.0, 4.0) for r in after)


def test_scenario5_improves_after_switch():
    sc = builtin_scenario(5)
    rs = [weather_at(sc, STATION, t, 3600) for t in range(int(sc.switch * 3600), 3601, 60)]
    for a, b in zip(rs, rs[1:]):
        assert b.wind <= a.wind and b.rain <= a.rain
        assert b.visibility >= a.visibility and b.temperature >= a.temperature
    assert sc.avalanche_at(0.0) == "A4" and sc.avalanche_at(0.6) == "A2"


def test_scenario_seasons():
    assert [builtin_scenario(i).season for i in range(1, 6)] == ["Summer"] * 3 + ["Winter"] * 2
    with pytest.raises((ConfigError, ValueError)):
        builtin_scenario(9)


def test_scenario_loader_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        load_scenario('id = 1\ncolour = "red"\n')
    with pytest.raises(ConfigError):
        load_scenario('id = 1\n')


# --- preliminary ------------------------------------------------------------------

def test_preliminary_shape():
    res = run_preliminary(PrelimParams(seed=1))
    assert len(res.rows) == 48
    assert res.rows[0].hour == 5.0 and res.rows[-1].hour == 4.5
    assert [interval_of(h) for h in (5, 10.99, 11, 16.5, 17, 23, 0, 4.9)] == [1, 1, 2, 2, 3, 3, 3, 3]


def test_preliminary_probabilities():
    p = PrelimParams()
    assert [p.interval_probability(i) for i in (1, 2, 3)] == pytest.approx([0.20, 0.24, 0.40])
    assert p.s_probabilities["E6r"] == 0.10
    assert p.s_probabilities["E6g"] == p.s_probabilities["E6m"] == p.s_probabilities["E6a"] == 0.05


def test_preliminary_zero_tourists():
    res = run_preliminary(PrelimParams(peak_population=0))
    assert all(r.tourists == 0 and r.weather_total == 0 and not any(r.situational.values()) for r in res.rows)
    assert not any(res.categories.values())


def test_preliminary_frequencies_and_categories():
    freqs = [run_preliminary(PrelimParams(seed=s)) for s in range(30)]
    interval1 = statistics.mean(r.interval_frequency(1) for r in freqs)
    interval3 = statistics.mean(r.interval_frequency(3) for r in freqs)
    assert abs(interval1 - 0.20) < 0.02 and abs(interval3 - 0.40) < 0.03
    assert all(r.categories["Relations"] > r.categories["Activity"] for r in freqs)
