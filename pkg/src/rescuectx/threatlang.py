"""Threat language: regular expressions over verdict tokens and their automata.

One tourist's behavior is a sentence of ``(E;)+`` with
``E = N | S | W | S W``, ``S`` a situational token and ``W`` a weather
token.  The acceptor is built the textbook way: Thompson NFA, subset
construction into a total DFA, Hopcroft minimization.
"""

from __future__ import annotations

import datetime as dt
import functools
import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .geo import format_dms
from .world import AreaConfig

S_TOKENS = ("E6a", "E6g", "E6m", "E6r")
W_TOKENS = ("E2", "E3", "E4", "E5")
SEP = ";"
ALPHABET: tuple[str, ...] = ("N", *S_TOKENS, *W_TOKENS, SEP)
S_PRIORITY = ("E6m", "E6r", "E6a", "E6g")


class TokenError(ValueError):
    pass


# --- regex AST ----------------------------------------------------------------

@dataclass(frozen=True)
class Sym:
    token: str


@dataclass(frozen=True)
class Concat:
    parts: tuple["Regex", ...]


@dataclass(frozen=True)
class Alt:
    options: tuple["Regex", ...]


@dataclass(frozen=True)
class Plus:
    inner: "Regex"


@dataclass(frozen=True)
class Star:
    inner: "Regex"


Regex = Union[Sym, Concat, Alt, Plus, Star]


def alt(*tokens: str) -> Alt:
    return Alt(tuple(Sym(t) for t in tokens))


def block_regex() -> Regex:
    """E = N | S | W | S W."""
    s, w = alt(*S_TOKENS), alt(*W_TOKENS)
    return Alt((Sym("N"), s, w, Concat((s, w))))


def threat_language_regex() -> Regex:
    """(E;)+"""
    return Plus(Concat((block_regex(), Sym(SEP))))


# --- NFA ------------------------------------------------------------------------

@dataclass
class Nfa:
    """Thompson NFA: a single start and a single accepting state.

    ``edges[q]`` lists ``(symbol or None, target)``; ``None`` is an
    epsilon move.
    """

    edges: list[list[tuple[str | None, int]]]
    start: int
    accept: int

    @property
    def num_states(self) -> int:
        return len(self.edges)


def compile_regex(ast: Regex) -> Nfa:
    edges: list[list[tuple[str | None, int]]] = []

    def new() -> int:
        edges.append([])
        return len(edges) - 1

    def build(node: Regex) -> tuple[int, int]:
        if isinstance(node, Sym):
            if node.token not in ALPHABET:
                raise TokenError(f"unknown token {node.token!r}")
            a, b = new(), new()
            edges[a].append((node.token, b))
            return a, b
        if isinstance(node, Concat):
            first = None
            prev_end = None
            for part in node.parts:
                s, e = build(part)
                if prev_end is None:
                    first = s
                else:
                    edges[prev_end].append((None, s))
                prev_end = e
            if first is None:
                a = new()
                return a, a
            return first, prev_end
        if isinstance(node, Alt):
            a, b = new(), new()
            for opt in node.options:
                s, e = build(opt)
                edges[a].append((None, s))
                edges[e].append((None, b))
            return a, b
        if isinstance(node, (Plus, Star)):
            a, b = new(), new()
            s, e = build(node.inner)
            edges[a].append((None, s))
            edges[e].append((None, s))
            edges[e].append((None, b))
            if isinstance(node, Star):
                edges[a].append((None, b))
            return a, b
        raise TypeError(f"not a regex node: {node!r}")

    start, accept = build(ast)
    return Nfa(edges, start, accept)


def _closure(nfa: Nfa, states: Iterable[int]) -> frozenset[int]:
    stack = list(states)
    seen = set(stack)
    while stack:
        q = stack.pop()
        for sym, t in nfa.edges[q]:
            if sym is None and t not in seen:
                seen.add(t)
                stack.append(t)
    return frozenset(seen)


def _move(nfa: Nfa, states: frozenset[int], symbol: str) -> frozenset[int]:
    return frozenset(t for q in states for sym, t in nfa.edges[q] if sym == symbol)


def nfa_accepts(nfa: Nfa, tokens: Sequence[str]) -> bool:
    current = _closure(nfa, [nfa.start])
    for tok in tokens:
        current = _closure(nfa, _move(nfa, current, tok))
        if not current:
            return False
    return nfa.accept in current


# --- DFA ------------------------------------------------------------------------

@dataclass(frozen=True)
class Dfa:
    """Total DFA; ``delta[q][k]`` is the successor on ``alphabet[k]``."""

    alphabet: tuple[str, ...]
    delta: tuple[tuple[int, ...], ...]
    start: int
    accepting: frozenset[int]

    @property
    def num_states(self) -> int:
        return len(self.delta)

    def step(self, q: int, token: str) -> int:
        try:
            return self.delta[q][self.alphabet.index(token)]
        except ValueError:
            raise TokenError(f"unknown token {token!r}") from None

    def accepts(self, tokens: Sequence[str]) -> bool:
        index = {a: i for i, a in enumerate(self.alphabet)}
        q = self.start
        for tok in tokens:
            k = index.get(tok)
            if k is None:
                raise TokenError(f"unknown token {tok!r}")
            q = self.delta[q][k]
        return q in self.accepting

    def trap_states(self) -> set[int]:
        return {
            q for q in range(self.num_states)
            if q not in self.accepting and all(t == q for t in self.delta[q])
        }


def accepts(d: Dfa, tokens: Sequence[str]) -> bool:
    return d.accepts(tokens)


def determinize(nfa: Nfa, alphabet: Sequence[str] = ALPHABET) -> Dfa:
    """Subset construction.  The empty subset is kept as an explicit trap."""
    alphabet = tuple(alphabet)
    start = _closure(nfa, [nfa.start])
    ids = {start: 0}
    order = [start]
    delta: list[list[int]] = []
    i = 0
    while i < len(order):
        subset = order[i]
        row = []
        for a in alphabet:
            nxt = _closure(nfa, _move(nfa, subset, a))
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
            row.append(ids[nxt])
        delta.append(row)
        i += 1
    accepting = frozenset(ids[s] for s in order if nfa.accept in s)
    return Dfa(alphabet, tuple(tuple(r) for r in delta), 0, accepting)


def _reachable(d: Dfa) -> list[int]:
    seen = {d.start}
    order = [d.start]
    queue = deque(order)
    while queue:
        q = queue.popleft()
        for t in d.delta[q]:
            if t not in seen:
                seen.add(t)
                order.append(t)
                queue.append(t)
    return order


def minimize(d: Dfa) -> Dfa:
    """Hopcroft partition refinement on the reachable part.

    States of the result are numbered in breadth-first order from the
    start state, so equal languages give identical machines.
    """
    states = _reachable(d)
    live = set(states)
    nsym = len(d.alphabet)
    inverse: list[dict[int, list[int]]] = [dict() for _ in range(nsym)]
    for q in states:
        for k in range(nsym):
            inverse[k].setdefault(d.delta[q][k], []).append(q)

    acc = frozenset(q for q in states if q in d.accepting)
    rej = frozenset(live - acc)
    partition = [b for b in (acc, rej) if b]
    work = [min(partition, key=len)] if len(partition) == 2 else list(partition)
    while work:
        splitter = work.pop()
        for k in range(nsym):
            pre = {p for q in splitter for p in inverse[k].get(q, ())}
            if not pre:
                continue
            refined = []
            for block in partition:
                inside = block & pre
                outside = block - pre
                if inside and outside:
                    refined.extend((inside, outside))
                    if block in work:
                        work.remove(block)
                        work.extend((inside, outside))
                    else:
                        work.append(min(inside, outside, key=len))
                else:
                    refined.append(block)
            partition = refined

    block_of = {q: i for i, b in enumerate(partition) for q in b}
    rep = [next(iter(b)) for b in partition]
    # renumber breadth-first from the start block
    start_block = block_of[d.start]
    number = {start_block: 0}
    queue = deque([start_block])
    while queue:
        b = queue.popleft()
        for k in range(nsym):
            t = block_of[d.delta[rep[b]][k]]
            if t not in number:
                number[t] = len(number)
                queue.append(t)
    delta = [None] * len(number)
    for b, n in number.items():
        delta[n] = tuple(number[block_of[d.delta[rep[b]][k]]] for k in range(nsym))
    accepting = frozenset(number[block_of[q]] for q in acc)
    return Dfa(d.alphabet, tuple(delta), 0, accepting)


@functools.lru_cache(maxsize=None)
def threat_trace_acceptor() -> Dfa:
    """Minimal total DFA for ``(E;)+``."""
    return minimize(determinize(compile_regex(threat_language_regex())))


def dump_dfa(d: Dfa) -> str:
    lines = [
        f"states {d.num_states}",
        f"start {d.start}",
        "accepting " + " ".join(str(q) for q in sorted(d.accepting)),
        "trap " + " ".join(str(q) for q in sorted(d.trap_states())),
        "alphabet " + " ".join(d.alphabet),
    ]
    for q in range(d.num_states):
        for k, a in enumerate(d.alphabet):
            lines.append(f"{q} {a} {d.delta[q][k]}")
    return "\n".join(lines) + "\n"


# --- tokens and behavior traces ------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(E6[agmr]|E[2-5]|N|;)")


def tokenize(text: str) -> list[str]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise TokenError(f"bad token at {pos}: {text[pos:pos + 8]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def th_string(weather: str, situational: Iterable[str]) -> str:
    """Token string for one cycle: S part then W part, ``N`` for no threat.

    Only one S token fits a block; the highest-priority one is used.
    """
    present = set(situational)
    s = next((t for t in S_PRIORITY if t in present), "")
    w = weather if weather in W_TOKENS else ""
    return (s + w) or "N"


@dataclass(frozen=True, slots=True)
class BehaviorPoint:
    tourist_id: str
    th: str
    lat: float
    lon: float
    timestamp: dt.datetime
    trail_id: str
    difficulty: str

    @property
    def geo(self) -> str:
        return format_dms(self.lat, self.lon)

    @property
    def ts(self) -> str:
        return self.timestamp.strftime("%d.%m.%Y,%H.%M")

    def format(self) -> str:
        return "\t".join((self.tourist_id, self.th, self.geo, self.ts, self.trail_id, self.difficulty))


def clock_datetime(area: AreaConfig, start_clock: float, t: float) -> dt.datetime:
    base = dt.datetime.combine(area.date, dt.time())
    return base + dt.timedelta(seconds=start_clock + t)


def behavior_point(verdict, row, area: AreaConfig, start_clock: float) -> BehaviorPoint:
    """Point for one verdict, with position and route taken from its row."""
    lat, lon = area.projection.to_latlon(row.fix.point)
    return BehaviorPoint(
        verdict.tourist_id,
        th_string(verdict.weather, verdict.situational),
        lat,
        lon,
        clock_datetime(area, start_clock, verdict.timestamp),
        row.trail_id,
        row.difficulty,
    )


def build_behavior_trace(verdicts: Sequence, rows: dict, area: AreaConfig, start_clock: float) -> list[BehaviorPoint]:
    """One point per cycle; cycles whose row is missing are left out."""
    out = []
    for v in sorted(verdicts, key=lambda v: v.cycle):
        row = rows.get(v.cycle)
        if row is not None:
            out.append(behavior_point(v, row, area, start_clock))
    return out


def trace_tokens(points: Iterable[BehaviorPoint | str]) -> list[str]:
    toks: list[str] = []
    for p in points:
        toks.extend(tokenize(p.th if isinstance(p, BehaviorPoint) else p))
        toks.append(SEP)
    return toks


def check_trace_lines(lines: Iterable[str]) -> tuple[int, list[str]]:
    """Validate a trace file.

    Tab-separated point lines are grouped per tourist; any other non-empty
    line is read as a complete token sentence.  Returns the number of
    traces checked and the identifiers of rejected ones.
    """
    acceptor = threat_trace_acceptor()
    per_tourist: dict[str, list[str]] = {}
    sentences: list[tuple[str, str]] = []
    for n, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) == 6:
            per_tourist.setdefault(fields[0], []).append(fields[1])
        else:
            sentences.append((f"line {n}", line))
    rejected = []
    for tid, ths in per_tourist.items():
        try:
            ok = acceptor.accepts(trace_tokens(ths))
        except TokenError:
            ok = False
        if not ok:
            rejected.append(tid)
    for label, text in sentences:
        try:
            ok = acceptor.accepts(tokenize(text))
        except TokenError:
            ok = False
        if not ok:
            rejected.append(label)
    return len(per_tourist) + len(sentences), rejected
