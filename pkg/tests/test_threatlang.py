import itertools
import random

import pytest

from rescuectx.preprocess import FixSource, GeoFix
from rescuectx.reasoning.cascade import ThreatVerdict
from rescuectx.threatlang import (
    ALPHABET,
    Alt,
    Dfa,
    Plus,
    Star,
    Sym,
    TokenError,
    alt,
    block_regex,
    build_behavior_trace,
    check_trace_lines,
    compile_regex,
    determinize,
    dump_dfa,
    minimize,
    nfa_accepts,
    th_string,
    threat_language_regex,
    threat_trace_acceptor,
    tokenize,
    trace_tokens,
)
from rescuectx.world import default_area

from helpers import make_row

S = ("E6a", "E6g", "E6m", "E6r")
W = ("E2", "E3", "E4", "E5")


def all_strings(max_len, alphabet=ALPHABET):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def pipeline_dfa(ast):
    return minimize(determinize(compile_regex(ast)))


def test_single_token_nfa():
    nfa = compile_regex(Sym("N"))
    assert nfa.num_states == 2
    assert nfa_accepts(nfa, ["N"])
    assert not nfa_accepts(nfa, []) and not nfa_accepts(nfa, ["N", "N"])


def test_s_alternation():
    nfa = compile_regex(alt(*S))
    assert all(nfa_accepts(nfa, [t]) for t in S)
    assert not nfa_accepts(nfa, ["N"])


def test_plus_rejects_empty_and_star_accepts_it():
    assert not pipeline_dfa(threat_language_regex()).accepts([])
    assert pipeline_dfa(Star(Sym("N"))).accepts([])


@pytest.mark.parametrize("ast", [block_regex(), alt(*W), Plus(Alt((Sym("N"), Sym(";")))), threat_language_regex()])
def test_determinize_and_minimize_preserve_language(ast):
    nfa = compile_regex(ast)
    dfa = determinize(nfa)
    small = minimize(dfa)
    for s in all_strings(3):
        want = nfa_accepts(nfa, s)
        assert dfa.accepts(s) == want and small.accepts(s) == want
    rng = random.Random(1)
    for _ in range(2000):
        s = [rng.choice(ALPHABET) for _ in range(rng.randint(0, 6))]
        assert small.accepts(s) == nfa_accepts(nfa, s)


def test_empty_language_has_no_reachable_accepting_state():
    nfa = compile_regex(Sym("N"))
    nfa.accept = len(nfa.edges)
    nfa.edges.append([])  # an accept state nothing reaches
    d = determinize(nfa)
    assert not d.accepting
    assert minimize(d).num_states == 1


def test_minimize_merges_equivalent_sinks():
    # 0 -N-> 1, 0 -;-> 2, 1 and 2 accept and loop to themselves on everything
    a = ("N", ";")
    d = Dfa(a, ((1, 2), (1, 1), (2, 2)), 0, frozenset({1, 2}))
    m = minimize(d)
    assert m.num_states == 2


def test_minimal_dfa_is_a_fixpoint():
    d = Dfa(("N",), ((1,), (0,)), 0, frozenset({1}))
    assert minimize(d).num_states == 2


def test_acceptor_examples():
    acc = threat_trace_acceptor()
    assert acc.accepts(tokenize("N;"))
    assert acc.accepts(tokenize("E6mE3;"))
    assert acc.accepts(tokenize("N; E6g; N; E6a;"))
    assert not acc.accepts(tokenize("E3E6m;"))
    assert not acc.accepts(tokenize("E3E4;"))
    assert not acc.accepts(tokenize("N"))
    assert not acc.accepts([])


def distinguishable(d, p, q, max_len):
    for suffix in all_strings(max_len, d.alphabet):
        a, b = p, q
        for t in suffix:
            a, b = d.step(a, t), d.step(b, t)
        if (a in d.accepting) != (b in d.accepting):
            return True
    return False


def test_acceptor_has_five_pairwise_distinguishable_states():
    acc = threat_trace_acceptor()
    assert acc.num_states == 5
    assert len(acc.trap_states()) == 1
    for p, q in itertools.combinations(range(acc.num_states), 2):
        assert distinguishable(acc, p, q, acc.num_states - 1), (p, q)


def test_acceptor_agrees_with_nfa_on_short_strings():
    acc = threat_trace_acceptor()
    nfa = compile_regex(threat_language_regex())
    for s in all_strings(4):
        assert acc.accepts(s) == nfa_accepts(nfa, s)


def test_tokenizer():
    assert tokenize("E6mE3; N;") == ["E6m", "E3", ";", "N", ";"]
    with pytest.raises(TokenError):
        tokenize("E7;")
    with pytest.raises(TokenError):
        threat_trace_acceptor().accepts(["E7"])


def test_th_string():
    assert th_string("E1", ()) == "N"
    assert th_string("E3", ()) == "E3"
    assert th_string("E3", {"E6m"}) == "E6mE3"
    assert th_string("E1", {"E6g", "E6r"}) == "E6r"
    assert th_string("E5", {"E6a", "E6g", "E6m", "E6r"}) == "E6mE5"


def test_behavior_point_reference_example():
    area = default_area()
    lat = 49 + 34 / 60 + 24 / 3600
    lon = 19 + 31 / 60 + 46 / 3600
    point = area.projection.from_latlon(lat, lon)
    row = make_row(trail_id="H2", difficulty="D3", fix=GeoFix("T1", point, FixSource.GPS, 5.0, 0.0))
    v = ThreatVerdict("T1", "E3", frozenset(), 9, 4.5 * 3600)
    (bp,) = build_behavior_trace([v], {9: row}, area, start_clock=10 * 3600)
    assert bp.format() == "T1\tE3\t49°34′24″N, 19°31′46″E\t19.09.2021,14.30\tH2\tD3"


def test_trace_gaps_are_omitted():
    area = default_area()
    vs = [ThreatVerdict("T1", "E1", frozenset(), c, 30.0 * c) for c in range(4)]
    rows = {0: make_row(), 1: make_row(), 3: make_row()}
    trace = build_behavior_trace(vs, rows, area, 0)
    assert len(trace) == 3
    assert threat_trace_acceptor().accepts(trace_tokens(trace))


def test_check_trace_lines():
    good = ["T1\tN\tx\ty\tH1\tD1\n", "T1\tE6mE3\tx\ty\tH1\tD1\n", "T2\tE3E6m\tx\ty\tH1\tD1\n", "N; E2;\n"]
    checked, rejected = check_trace_lines(good)
    assert checked == 3 and rejected == ["T2"]


def test_dump_format():
    text = dump_dfa(threat_trace_acceptor())
    assert text.startswith("states 5\n")
    assert len([l for l in text.splitlines() if l[0].isdigit()]) == 5 * len(ALPHABET)
