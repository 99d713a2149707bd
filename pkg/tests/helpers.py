"""Small builders shared by several test modules."""

import itertools

# criterion number -> (passed, detail); filled by the acceptance suite
ACCEPTANCE = {}

MINI_AREA = """
[area]
min_x = 0.0
min_y = 0.0
max_x = 2000.0
max_y = 1000.0

[[trail]]
id = "H1"
difficulty = "D2"
points = [[100, 500], [1900, 500]]
entry_points = ["start", "end"]

[[weather_station]]
id = "WS1"
x = 1000.0
y = 500.0
influence_radius = 5000.0

[[bts_station]]
id = "B1"
x = 0.0
y = 0.0
max_range = 5000.0
noise_sigma = 0.0

[[bts_station]]
id = "B2"
x = 2000.0
y = 0.0
max_range = 5000.0
noise_sigma = 0.0

[[bts_station]]
id = "B3"
x = 1000.0
y = 1000.0
max_range = 5000.0
noise_sigma = 0.0
"""


def make_row(tourist_id="T1", updated_at=0.0, cycle=0, tags=("W1", "F1", "T1", "R1"), **overrides):
    from rescuectx.geo import GeoPoint
    from rescuectx.preprocess import FixSource, GeoFix, WeatherTags
    from rescuectx.repository import ContextRow

    fields = dict(
        tourist_id=tourist_id,
        fix=GeoFix(tourist_id, GeoPoint(100.0, 200.0), FixSource.GPS, 5.0, updated_at),
        trail_id="H1",
        arclength=0.0,
        direction=1,
        difficulty="D1",
        tags=WeatherTags(*tags),
        selected_station="WS1",
        in_range_count=1,
        day_night="Day",
        season="Summer",
        avalanche="A1",
        motion_idle_seconds=0.0,
        off_trail=False,
        in_special_place=False,
        updated_at=updated_at,
        cycle=cycle,
    )
    fields.update(overrides)
    return ContextRow(**fields)


def brute_force_sat(nvars, clauses):
    """Truth-table oracle."""
    from rescuectx.reasoning.sat import satisfies

    return any(satisfies(bits, clauses) for bits in itertools.product((False, True), repeat=nvars))


def random_cnf(rng, max_vars=12, max_clauses=40):
    n = rng.randint(1, max_vars)
    clauses = []
    for _ in range(rng.randint(1, max_clauses)):
        width = rng.randint(1, 4)
        clauses.append(tuple(rng.choice((-1, 1)) * rng.randint(1, n) for _ in range(width)))
    return n, clauses
