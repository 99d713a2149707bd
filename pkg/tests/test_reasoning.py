import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rescuectx.reasoning.cascade import CASCADE_ORDER, Reasoner
from rescuectx.reasoning.detectors import a3_detect_nonweather
from rescuectx.reasoning.logic import (
    ATOM_GROUPS,
    ATOM_INDEX,
    ATOMS,
    EncodingError,
    FormulaSyntaxError,
    a4_encode,
    atoms_of,
    evaluate,
    parse_formula,
    to_text,
    tseitin,
)
from rescuectx.reasoning.sat import SolverStats, sat_solve, satisfies
from rescuectx.reasoning.logic import Cnf
from rescuectx.repository import default_alert_sets
from rescuectx.world import DetectorConfig

from helpers import brute_force_sat, make_row, random_cnf


# --- solver ------------------------------------------------------------------

def test_solver_examples(kernels):
    assert kernels.dpll_solve(2, [(1, 2), (-1,)]) == (False, True)
    assert kernels.dpll_solve(1, [(1,), (-1,)]) is None


def test_solver_agrees_with_truth_table(kernels):
    rng = random.Random(2024)
    for _ in range(250):
        n, clauses = random_cnf(rng)
        model = kernels.dpll_solve(n, clauses)
        assert (model is not None) == brute_force_sat(n, clauses)
        if model is not None:
            assert satisfies(model, clauses)


def test_backends_return_identical_models(kernels):
    from rescuectx import _pure

    rng = random.Random(7)
    for _ in range(200):
        n, clauses = random_cnf(rng)
        assert kernels.dpll_solve(n, clauses) == _pure.dpll_solve(n, clauses)


def test_solver_handles_tautological_and_duplicate_literals(kernels):
    assert kernels.dpll_solve(2, [(1, -1), (2, 2)]) is not None
    assert kernels.dpll_solve(3, [(1,), (2,)]) is not None


def test_cnf_validation():
    with pytest.raises(ValueError):
        Cnf(2, ((),))
    with pytest.raises(ValueError):
        Cnf(2, ((3,),))


def test_sat_front_end_result():
    r = sat_solve(Cnf(2, ((1, 2), (-1,))))
    assert r.satisfiable and r.value(2) and not r.value(1)
    assert not sat_solve(Cnf(1, ((1,), (-1,)))).satisfiable


# --- formulas and encoding ---------------------------------------------------

def test_parse_and_print():
    f = parse_formula("W3 AND (F2 OR NOT T1)")
    assert atoms_of(f) == {"W3", "F2", "T1"}
    assert parse_formula(to_text(f)) == f
    for bad in ("W3 AND", "(W3", "W3 W2", "", "AND W3"):
        with pytest.raises(FormulaSyntaxError):
            parse_formula(bad)


formula_text = st.recursive(
    st.sampled_from(["W1", "W2", "W3", "F3", "D4", "Night", "A5", "TRUE", "FALSE"]),
    lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda p: f"({p[0]} AND {p[1]})"),
        st.tuples(inner, inner).map(lambda p: f"({p[0]} OR {p[1]})"),
        inner.map(lambda x: f"NOT {x}"),
    ),
    max_leaves=8,
)


@settings(max_examples=150)
@given(formula_text)
def test_tseitin_is_equisatisfiable_per_assignment(text):
    """For every atom assignment, the encoding is satisfiable iff the formula holds."""
    f = parse_formula(text)
    names = sorted(atoms_of(f))
    index = {a: i + 1 for i, a in enumerate(names)}
    for bits in itertools.product((False, True), repeat=len(names)):
        lit, clauses, nxt = tseitin(f, index, len(names) + 1)
        units = [(index[a] if b else -index[a],) for a, b in zip(names, bits)]
        cnf_clauses = clauses + units + [(lit,)]
        n = max(nxt - 1, 1)
        got = sat_solve(Cnf(n, tuple(cnf_clauses))).satisfiable
        assert got == evaluate(f, dict(zip(names, bits)))


S_EXAMPLE = ("W3", "F1", "T3", "R1", "A2", "D4", "Night", "Winter")


def entailed_by_truth_table(true_atoms, f):
    return evaluate(f, {a: a in true_atoms for a in ATOMS})


def test_encoding_examples():
    assert not sat_solve(a4_encode(S_EXAMPLE, parse_formula("W3 AND D4"))).satisfiable
    assert sat_solve(a4_encode(S_EXAMPLE, parse_formula("F3"))).satisfiable
    assert not sat_solve(a4_encode(S_EXAMPLE, parse_formula("Night"))).satisfiable


def test_encoding_errors():
    with pytest.raises(EncodingError):
        a4_encode(S_EXAMPLE, parse_formula("W9"))
    with pytest.raises(EncodingError):
        a4_encode(("W3", "W2", "F1", "T3", "R1", "A2", "D4", "Night", "Winter"), parse_formula("W3"))
    with pytest.raises(EncodingError):
        a4_encode(S_EXAMPLE[:-1], parse_formula("W3"))


contexts = st.tuples(*(st.sampled_from(members) for members in ATOM_GROUPS.values()))


@settings(max_examples=200)
@given(contexts, formula_text)
def test_entailment_matches_truth_table(ctx, text):
    f = parse_formula(text)
    assert (not sat_solve(a4_encode(ctx, f)).satisfiable) == entailed_by_truth_table(ctx, f)


# --- cascade -------------------------------------------------------------------

ALERTS1 = default_alert_sets()["Alerts1"]


def ctx(w="W1", f="F1", t="T1", r="R1", a="A1", d="D1", dn="Day", s="Summer"):
    return (w, f, t, r, a, d, dn, s)


def oracle_cascade(atoms, aset):
    for lvl in CASCADE_ORDER:
        if entailed_by_truth_table(atoms, aset.formula(lvl, atoms[5], atoms[6], atoms[7])):
            return lvl
    return "E1"


def test_cascade_examples():
    rs = Reasoner()
    assert rs.weather_cascade(ctx(), ALERTS1) == "E1"
    severe = ctx("W3", "F3", "T3", "R3", "A5", "D4", "Night", "Winter")
    assert rs.weather_cascade(severe, ALERTS1) == "E5" == oracle_cascade(severe, ALERTS1)
    # W3 alone entails both E3 and E2; the higher one is reported
    assert rs.weather_cascade(ctx(w="W3"), ALERTS1) == "E3"


def test_cascade_matches_oracle_on_every_context():
    rs = Reasoner()
    for atoms in itertools.islice(itertools.product(*ATOM_GROUPS.values()), 0, None, 7):
        for aset in default_alert_sets().values():
            assert rs.weather_cascade(atoms, aset) == oracle_cascade(atoms, aset)


def _raise_one(atoms, group_pos):
    group = list(ATOM_GROUPS.values())[group_pos]
    i = group.index(atoms[group_pos])
    if i + 1 >= len(group):
        return None
    return atoms[:group_pos] + (group[i + 1],) + atoms[group_pos + 1:]


@settings(max_examples=300)
@given(contexts, st.sampled_from([0, 1, 2, 3, 4, 5]), st.sampled_from(["Alerts1", "Alerts2"]))
def test_raising_a_level_never_lowers_the_verdict(atoms, pos, name):
    aset = default_alert_sets()[name]
    higher = _raise_one(atoms, pos)
    if higher is None:
        return
    rs = Reasoner()
    assert rs.weather_cascade(higher, aset) >= rs.weather_cascade(atoms, aset)


def test_solver_call_accounting():
    stats = SolverStats()
    rs = Reasoner(stats)
    rs.weather_cascade(ctx(), ALERTS1)
    assert stats.calls == stats.starts == 4
    rs.weather_cascade(ctx(), ALERTS1)
    assert stats.calls == 8 and stats.starts == 4
    rs.weather_cascade(ctx("W3", "F3"), ALERTS1)
    assert stats.calls == 9  # E5 hits first, lower levels skipped
    uncached = Reasoner(cache=False)
    uncached.weather_cascade(ctx(), ALERTS1)
    uncached.weather_cascade(ctx(), ALERTS1)
    assert uncached.stats.starts == 8


# --- detectors -----------------------------------------------------------------

CFG = DetectorConfig(leader_distance=200, animal_distance=50, no_motion_seconds=900)


def test_detector_examples():
    assert a3_detect_nonweather(make_row(group_id="G1", leader_distance=300.0), CFG) == {"E6g"}
    assert a3_detect_nonweather(make_row(motion_idle_seconds=1200.0, in_special_place=True), CFG) == set()
    assert a3_detect_nonweather(make_row(motion_idle_seconds=1200.0), CFG) == {"E6m"}
    assert a3_detect_nonweather(make_row(off_trail=True, animal_distance=30.0), CFG) == {"E6r", "E6a"}
    assert a3_detect_nonweather(make_row(leader_distance=200.0, animal_distance=50.0,
                                         motion_idle_seconds=900.0), CFG) == set()
