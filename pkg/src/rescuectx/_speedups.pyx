# cython: language_level=3
"""Compiled kernels: polyline projection and DPLL.

Semantics match ``_pure.py`` line for line; only the data layout differs
(clauses are flattened into one literal array plus offsets).
"""

from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free


def project_polyline(const double[::1] xs, const double[::1] ys,
                     const double[::1] cum, double px, double py):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i, best_i = 0
    cdef double ax, ay, dx, dy, seg2, t, qx, qy, ex, ey, d2
    cdef double best_d2 = INFINITY
    cdef double best_qx = 0.0, best_qy = 0.0, best_s = 0.0
    for i in range(n - 1):
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
    return best_i, best_qx, best_qy, best_s, sqrt(best_d2)


cdef struct Solver:
    int nvars
    int nclauses
    int *lits
    int *starts
    signed char *value
    int *trail
    int trail_len
    unsigned char *polarity


cdef inline void _assign(Solver *s, int lit) nogil:
    cdef int v = lit if lit > 0 else -lit
    s.value[v] = 1 if lit > 0 else -1
    s.trail[s.trail_len] = v
    s.trail_len += 1


cdef inline void _undo(Solver *s, int mark) nogil:
    while s.trail_len > mark:
        s.trail_len -= 1
        s.value[s.trail[s.trail_len]] = 0


cdef inline bint _satisfied(Solver *s, int c) nogil:
    cdef int k, lit, v
    for k in range(s.starts[c], s.starts[c + 1]):
        lit = s.lits[k]
        v = s.value[lit if lit > 0 else -lit]
        if v != 0 and ((v > 0) == (lit > 0)):
            return True
    return False


cdef bint _propagate(Solver *s) nogil:
    cdef int c, k, lit, v, free_count, last
    cdef bint changed, sat
    while True:
        changed = False
        for c in range(s.nclauses):
            free_count = 0
            last = 0
            sat = False
            for k in range(s.starts[c], s.starts[c + 1]):
                lit = s.lits[k]
                v = s.value[lit if lit > 0 else -lit]
                if v == 0:
                    free_count += 1
                    last = lit
                elif (v > 0) == (lit > 0):
                    sat = True
                    break
            if sat:
                continue
            if free_count == 0:
                return False
            if free_count == 1:
                _assign(s, last)
                changed = True
        if changed:
            continue
        for v in range(s.nvars + 1):
            s.polarity[v] = 0
        for c in range(s.nclauses):
            if _satisfied(s, c):
                continue
            for k in range(s.starts[c], s.starts[c + 1]):
                lit = s.lits[k]
                v = lit if lit > 0 else -lit
                if s.value[v] == 0:
                    s.polarity[v] |= 1 if lit > 0 else 2
        for v in range(1, s.nvars + 1):
            if s.value[v] == 0:
                if s.polarity[v] == 1:
                    _assign(s, v)
                    changed = True
                elif s.polarity[v] == 2:
                    _assign(s, -v)
                    changed = True
        if not changed:
            return True


cdef int _pick(Solver *s) nogil:
    cdef int best = 0
    cdef int c, k, lit, v
    for c in range(s.nclauses):
        if _satisfied(s, c):
            continue
        for k in range(s.starts[c], s.starts[c + 1]):
            lit = s.lits[k]
            v = lit if lit > 0 else -lit
            if s.value[v] == 0 and (best == 0 or v < best):
                best = v
    return best


cdef bint _search(Solver *s) nogil:
    cdef int mark = s.trail_len
    cdef int inner, var
    if not _propagate(s):
        _undo(s, mark)
        return False
    var = _pick(s)
    if var == 0:
        return True
    inner = s.trail_len
    _assign(s, var)
    if _search(s):
        return True
    _undo(s, inner)
    _assign(s, -var)
    if _search(s):
        return True
    _undo(s, inner)
    _undo(s, mark)
    return False


def dpll_solve(int nvars, clauses):
    cdef Solver s
    cdef int total = 0
    cdef int c, k, i
    cdef bint ok
    for clause in clauses:
        total += len(clause)
    s.nvars = nvars
    s.nclauses = len(clauses)
    s.lits = <int *> malloc(sizeof(int) * (total + 1))
    s.starts = <int *> malloc(sizeof(int) * (s.nclauses + 1))
    s.value = <signed char *> malloc(nvars + 1)
    s.trail = <int *> malloc(sizeof(int) * (nvars + 1))
    s.polarity = <unsigned char *> malloc(nvars + 1)
    s.trail_len = 0
    if not s.lits or not s.starts or not s.value or not s.trail or not s.polarity:
        free(s.lits); free(s.starts); free(s.value); free(s.trail); free(s.polarity)
        raise MemoryError()
    try:
        k = 0
        c = 0
        for clause in clauses:
            s.starts[c] = k
            for lit in clause:
                s.lits[k] = lit
                k += 1
            c += 1
        s.starts[s.nclauses] = k
        for i in range(nvars + 1):
            s.value[i] = 0
        with nogil:
            ok = _search(&s)
        if not ok:
            return None
        return tuple([s.value[i] > 0 for i in range(1, nvars + 1)])
    finally:
        free(s.lits)
        free(s.starts)
        free(s.value)
        free(s.trail)
        free(s.polarity)
