"""Pure-Python versions of the hot kernels.

Both functions mirror ``_speedups.pyx`` exactly (same branching order, same
tie-breaking) so either backend gives bit-identical results.
"""

from __future__ import annotations

import math


def project_polyline(xs, ys, cum, px, py):
    """Nearest point on a polyline.

    Returns ``(segment_index, qx, qy, arclength, distance)``; ties go to the
    lowest segment index.
    """
    best_i = 0
    best_d2 = math.inf
    best_qx = best_qy = best_s = 0.0
    for i in range(len(xs) - 1):
        ax = xs[i]
        ay = ys[i]
        dx = xs[i + 1] - ax
        dy = ys[i + 1] - ay
        seg2 = dx * dx + dy * dy
        t = ((px - ax) * dx + (py - ay) * dy) / seg2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        qx = ax + t * dx
        qy = ay + t * dy
        ex = px - qx
        ey = py - qy
        d2 = ex * ex + ey * ey
        if d2 < best_d2:
            best_d2 = d2
            best_i = i
            best_qx = qx
            best_qy = qy
            best_s = cum[i] + t * (cum[i + 1] - cum[i])
    return best_i, best_qx, best_qy, best_s, math.sqrt(best_d2)


def dpll_solve(nvars, clauses):
    """DPLL with unit propagation and pure-literal elimination.

    Branches on the lowest-index unassigned variable occurring in an
    unsatisfied clause, true first.  Returns a tuple of booleans (variable
    ``i`` at position ``i - 1``, unassigned variables false) or ``None`` when
    unsatisfiable.
    """
    value = [0] * (nvars + 1)
    trail = []

    def undo(mark):
        while len(trail) > mark:
            value[trail.pop()] = 0

    def assign(lit):
        v = lit if lit > 0 else -lit
        value[v] = 1 if lit > 0 else -1
        trail.append(v)

    def propagate():
        while True:
            changed = False
            for clause in clauses:
                free = 0
                last = 0
                satisfied = False
                for lit in clause:
                    v = value[lit if lit > 0 else -lit]
                    if v == 0:
                        free += 1
                        last = lit
                    elif (v > 0) == (lit > 0):
                        satisfied = True
                        break
                if satisfied:
                    continue
                if free == 0:
                    return False
                if free == 1:
                    assign(last)
                    changed = True
            if changed:
                continue
            polarity = [0] * (nvars + 1)
            for clause in clauses:
                if _clause_satisfied(clause, value):
                    continue
                for lit in clause:
                    v = lit if lit > 0 else -lit
                    if value[v] == 0:
                        polarity[v] |= 1 if lit > 0 else 2
            for v in range(1, nvars + 1):
                if value[v] == 0:
                    if polarity[v] == 1:
                        assign(v)
                        changed = True
                    elif polarity[v] == 2:
                        assign(-v)
                        changed = True
            if not changed:
                return True

    def pick():
        best = 0
        for clause in clauses:
            if _clause_satisfied(clause, value):
                continue
            for lit in clause:
                v = lit if lit > 0 else -lit
                if value[v] == 0 and (best == 0 or v < best):
                    best = v
        return best

    def search():
        mark = len(trail)
        if not propagate():
            undo(mark)
            return False
        var = pick()
        if var == 0:
            return True
        for lit in (var, -var):
            inner = len(trail)
            assign(lit)
            if search():
                return True
            undo(inner)
        undo(mark)
        return False

    if not search():
        return None
    return tuple(value[v] > 0 for v in range(1, nvars + 1))


def _clause_satisfied(clause, value):
    for lit in clause:
        v = value[lit if lit > 0 else -lit]
        if v != 0 and (v > 0) == (lit > 0):
            return True
    return False
