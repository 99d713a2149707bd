"""Embedded SAT solver front end (DPLL kernel in ``_kernels``)."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .._kernels import dpll_solve
from .logic import Cnf


@dataclass(frozen=True)
class SatResult:
    satisfiable: bool
    assignment: tuple[bool, ...] | None = None

    def value(self, var: int) -> bool:
        if self.assignment is None:
            raise ValueError("no assignment for an UNSAT result")
        return self.assignment[var - 1]


class SoundnessError(AssertionError):
    """The kernel returned an assignment that violates a clause."""


def satisfies(assignment: tuple[bool, ...], clauses) -> bool:
    return all(any(assignment[abs(l) - 1] == (l > 0) for l in c) for c in clauses)


def sat_solve(cnf: Cnf) -> SatResult:
    model = dpll_solve(cnf.num_vars, cnf.clauses)
    if model is None:
        return SatResult(False)
    if not satisfies(model, cnf.clauses):
        raise SoundnessError("solver returned a non-model")
    return SatResult(True, model)


@dataclass
class SolverStats:
    """Per-run solver bookkeeping.

    ``calls`` counts entailment checks requested by the cascade, ``starts``
    the ones that actually reached the solver (the rest hit the cache).
    """

    calls: int = 0
    starts: int = 0
    durations_ms: list[float] = field(default_factory=list)

    def timed_solve(self, cnf: Cnf) -> SatResult:
        t0 = time.perf_counter()
        result = sat_solve(cnf)
        self.durations_ms.append((time.perf_counter() - t0) * 1000.0)
        self.starts += 1
        return result
