import pytest

from rescuectx.reasoning.logic import ATOMS, atoms_of
from rescuectx.repository import (
    DAY_NIGHT,
    WEATHER_LEVELS,
    AvalancheLevel,
    Journal,
    NotFoundError,
    Repository,
    StaleWriteError,
    default_alert_sets,
    load_alert_sets,
    read_journal,
)
from rescuectx.world import DIFFICULTIES, SEASONS, ConfigError

from helpers import make_row


@pytest.fixture
def repo():
    return Repository(default_alert_sets(), "Alerts1")


def test_upsert_round_trip(repo):
    row = make_row()
    assert repo.upsert_row(row) is None
    assert repo.get("T1") == row
    newer = make_row(updated_at=30.0, cycle=1)
    assert repo.upsert_row(newer) == row
    assert repo.get("T1") == newer


def test_upsert_after_departure_is_stale(repo):
    repo.upsert_row(make_row())
    repo.depart("T1")
    with pytest.raises(StaleWriteError):
        repo.upsert_row(make_row(updated_at=30.0))
    assert repo.stale_writes == 1 and len(repo) == 0


def test_updated_at_cannot_go_backwards(repo):
    repo.upsert_row(make_row(updated_at=60.0))
    with pytest.raises(ValueError):
        repo.upsert_row(make_row(updated_at=30.0))


def test_snapshot_isolation(repo):
    assert len(repo.snapshot()) == 0
    repo.upsert_row(make_row())
    snap = repo.snapshot(0.0)
    repo.upsert_row(make_row("T2"))
    repo.upsert_row(make_row(updated_at=30.0, tags=("W3", "F1", "T1", "R1")))
    assert set(snap.rows) == {"T1"}
    assert snap.rows["T1"].tags.wind == "W1"
    with pytest.raises(TypeError):
        snap.rows["T9"] = make_row("T9")


def test_swap_alert_set(repo):
    snap = repo.snapshot()
    assert repo.swap_alert_set("Alerts2") == "Alerts1"
    assert snap.alert_set.name == "Alerts1"
    assert repo.snapshot().alert_set.name == "Alerts2"
    assert repo.swap_alert_set("Alerts2") == "Alerts2"
    with pytest.raises(NotFoundError):
        repo.swap_alert_set("Alerts9")


def test_avalanche_level_validated(repo):
    prev = repo.set_avalanche("A3", "ranger-7", 120.0)
    assert prev.level == "A1"
    assert repo.avalanche == AvalancheLevel("A3", "ranger-7", 120.0)
    with pytest.raises(ValueError):
        repo.set_avalanche("A9")


def test_default_sets_are_complete_and_use_known_atoms():
    for aset in default_alert_sets().values():
        for lvl in WEATHER_LEVELS:
            for d in DIFFICULTIES:
                for dn in DAY_NIGHT:
                    for s in SEASONS:
                        assert atoms_of(aset.formula(lvl, d, dn, s)) <= set(ATOMS)


def test_most_specific_entry_wins():
    aset = default_alert_sets()["Alerts1"]
    generic = aset.formula("E4", "D4", "Day", "Summer")
    specific = aset.formula("E4", "D4", "Night", "Summer")
    assert generic != specific
    assert aset.formula("E4", "D3", "Night", "Summer") == generic


INCOMPLETE = """
[[set]]
name = "X"
[[set.alert]]
level = "E5"
formula = "A5"
"""


def test_incomplete_or_bad_sets_are_rejected():
    with pytest.raises((ConfigError, NotFoundError)):
        load_alert_sets(INCOMPLETE)
    bad_atom = INCOMPLETE + "".join(
        f'[[set.alert]]\nlevel = "{lvl}"\nformula = "W9"\n' for lvl in ("E4", "E3", "E2"))
    with pytest.raises(ConfigError):
        load_alert_sets(bad_atom)
    with pytest.raises(ConfigError):
        load_alert_sets(INCOMPLETE.replace('formula = "A5"', 'formula = "A5 AND ("'))


def test_journal_is_canonical(tmp_path):
    path = tmp_path / "j.jsonl"
    with Journal(path) as j:
        j.record("verdict", b=1.23456, a=[0.0004, -0.0001], id="T1")
    text = path.read_text(encoding="utf-8")
    assert text == '{"a":[0.0,0.0],"b":1.235,"id":"T1","kind":"verdict"}\n'
    assert read_journal(path) == [{"a": [0.0, 0.0], "b": 1.235, "id": "T1", "kind": "verdict"}]
