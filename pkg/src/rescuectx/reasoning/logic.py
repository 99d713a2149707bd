"""Propositional formulas over context atoms and their CNF encoding.

Entailment ``S |= A`` is decided as unsatisfiability of ``S & ~A``.  ``S``
fixes every atom (one-hot per factor group); ``~A`` is Tseitin-encoded so
nested formulas stay linear in size.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

ATOM_GROUPS: dict[str, tuple[str, ...]] = {
    "wind": ("W1", "W2", "W3"),
    "fog": ("F1", "F2", "F3"),
    "temperature": ("T1", "T2", "T3"),
    "rain": ("R1", "R2", "R3"),
    "avalanche": ("A1", "A2", "A3", "A4", "A5"),
    "difficulty": ("D1", "D2", "D3", "D4"),
    "day_night": ("Day", "Night"),
    "season": ("Summer", "Winter"),
}
ATOMS: tuple[str, ...] = tuple(a for group in ATOM_GROUPS.values() for a in group)
ATOM_INDEX: dict[str, int] = {a: i + 1 for i, a in enumerate(ATOMS)}
GROUP_OF: dict[str, str] = {a: g for g, atoms in ATOM_GROUPS.items() for a in atoms}


class FormulaSyntaxError(ValueError):
    pass


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]


Formula = Union[Atom, Const, Not, And, Or]


def atoms_of(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, Const):
        return set()
    if isinstance(f, Not):
        return atoms_of(f.child)
    out: set[str] = set()
    for c in f.children:
        out |= atoms_of(c)
    return out


def evaluate(f: Formula, truth: Mapping[str, bool]) -> bool:
    if isinstance(f, Atom):
        return truth[f.name]
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return not evaluate(f.child, truth)
    if isinstance(f, And):
        return all(evaluate(c, truth) for c in f.children)
    return any(evaluate(c, truth) for c in f.children)


def to_text(f: Formula) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Const):
        return "TRUE" if f.value else "FALSE"
    if isinstance(f, Not):
        return f"NOT {to_text(f.child)}"
    op = " AND " if isinstance(f, And) else " OR "
    return "(" + op.join(to_text(c) for c in f.children) + ")"


_TOKEN = re.compile(r"\s*(\(|\)|[A-Za-z][A-Za-z0-9_]*)")


def parse_formula(text: str) -> Formula:
    """Parse ``AND``/``OR``/``NOT`` formulas over atom identifiers.

    Precedence: NOT > AND > OR.  ``TRUE`` and ``FALSE`` are constants.
    Atom names are not checked here; see ``check_atoms``.
    """
    tokens: list[str] = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        tokens.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    if not tokens:
        raise FormulaSyntaxError("empty formula")
    i = 0

    def peek() -> str | None:
        return tokens[i] if i < len(tokens) else None

    def take() -> str:
        nonlocal i
        if i >= len(tokens):
            raise FormulaSyntaxError("unexpected end of formula")
        i += 1
        return tokens[i - 1]

    def parse_or() -> Formula:
        parts = [parse_and()]
        while peek() == "OR":
            take()
            parts.append(parse_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_and() -> Formula:
        parts = [parse_unary()]
        while peek() == "AND":
            take()
            parts.append(parse_unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_unary() -> Formula:
        tok = take()
        if tok == "NOT":
            return Not(parse_unary())
        if tok == "(":
            inner = parse_or()
            if take() != ")":
                raise FormulaSyntaxError("missing ')'")
            return inner
        if tok in ("AND", "OR", ")"):
            raise FormulaSyntaxError(f"unexpected {tok!r}")
        if tok == "TRUE":
            return Const(True)
        if tok == "FALSE":
            return Const(False)
        return Atom(tok)

    result = parse_or()
    if i != len(tokens):
        raise FormulaSyntaxError(f"trailing tokens: {' '.join(tokens[i:])}")
    return result


def check_atoms(f: Formula) -> None:
    unknown = sorted(atoms_of(f) - set(ATOMS))
    if unknown:
        raise EncodingError(f"unknown atoms: {', '.join(unknown)}")


@dataclass(frozen=True)
class Cnf:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        for c in self.clauses:
            if not c:
                raise ValueError("empty clause")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range 1..{self.num_vars}")


def tseitin(f: Formula, index: Mapping[str, int], next_var: int) -> tuple[int, list[tuple[int, ...]], int]:
    """Return ``(literal, clauses, next_free_var)`` with literal <-> f."""
    clauses: list[tuple[int, ...]] = []

    def walk(g: Formula) -> int:
        nonlocal next_var
        if isinstance(g, Atom):
            return index[g.name]
        if isinstance(g, Not):
            return -walk(g.child)
        x = next_var
        next_var += 1
        if isinstance(g, Const):
            clauses.append((x,) if g.value else (-x,))
            return x
        kids = [walk(c) for c in g.children]
        if isinstance(g, And):
            for k in kids:
                clauses.append((-x, k))
            clauses.append((x, *(-k for k in kids)))
        else:
            clauses.append((-x, *kids))
            for k in kids:
                clauses.append((x, -k))
        return x

    lit = walk(f)
    return lit, clauses, next_var


def facts_clauses(true_atoms: Iterable[str]) -> list[tuple[int, ...]]:
    """Unit clauses fixing every atom from a one-hot set of true atoms."""
    present = set(true_atoms)
    unknown = present - set(ATOMS)
    if unknown:
        raise EncodingError(f"unknown atoms in context: {', '.join(sorted(unknown))}")
    clauses = []
    for group, members in ATOM_GROUPS.items():
        hits = [a for a in members if a in present]
        if len(hits) != 1:
            raise EncodingError(f"context must hold exactly one {group} atom, got {hits}")
        for a in members:
            clauses.append((ATOM_INDEX[a],) if a in present else (-ATOM_INDEX[a],))
    return clauses


def a4_encode(true_atoms: Iterable[str], alert: Formula) -> Cnf:
    """CNF of ``S & ~A``: unsatisfiable exactly when the context entails the alert."""
    check_atoms(alert)
    clauses = facts_clauses(true_atoms)
    lit, extra, next_var = tseitin(alert, ATOM_INDEX, len(ATOMS) + 1)
    clauses.extend(extra)
    clauses.append((-lit,))
    return Cnf(next_var - 1, tuple(clauses))
