"""Compare the compiled and pure-Python kernels on the workloads the pipeline runs.

    python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import itertools
import random
import timeit

from rescuectx import _pure
from rescuectx.reasoning.logic import ATOM_GROUPS, a4_encode
from rescuectx.repository import default_alert_sets
from rescuectx.world import default_area

try:
    from rescuectx import _speedups
except ImportError:
    _speedups = None


def projection_workload(n=2000, seed=1):
    area = default_area()
    rng = random.Random(seed)
    polys = [t.polyline for t in area.trails]
    x0, y0, x1, y1 = area.bounds
    pts = [(rng.uniform(x0, x1), rng.uniform(y0, y1)) for _ in range(n)]

    def run(mod):
        for x, y in pts:
            for p in polys:
                mod.project_polyline(p._xs, p._ys, p._cum, x, y)

    return run, n * len(polys)


def entailment_workload(stride=11):
    aset = default_alert_sets()["Alerts1"]
    cnfs = []
    for atoms in itertools.islice(itertools.product(*ATOM_GROUPS.values()), 0, None, stride):
        for level in ("E5", "E4", "E3", "E2"):
            cnfs.append(a4_encode(atoms, aset.formula(level, atoms[5], atoms[6], atoms[7])))

    def run(mod):
        for c in cnfs:
            mod.dpll_solve(c.num_vars, c.clauses)

    return run, len(cnfs)


def random_3sat_workload(n=60, nvars=40, ratio=4.26, seed=3):
    rng = random.Random(seed)
    problems = []
    for _ in range(n):
        clauses = [tuple(rng.choice((-1, 1)) * v for v in rng.sample(range(1, nvars + 1), 3))
                   for _ in range(int(nvars * ratio))]
        problems.append(clauses)

    def run(mod):
        for clauses in problems:
            mod.dpll_solve(nvars, clauses)

    return run, n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = [("python", _pure)] + ([("cython", _speedups)] if _speedups else [])
    if _speedups is None:
        print("compiled extension not built; timing the pure backend only")
    print(f"{'workload':<22}{'calls':>8}" + "".join(f"{name + ' ms':>14}" for name, _ in backends) + f"{'speedup':>10}")
    for label, make in (("polyline projection", projection_workload),
                        ("alert entailment", entailment_workload),
                        ("random 3-SAT, 40 vars", random_3sat_workload)):
        run, calls = make()
        times = [min(timeit.repeat(lambda m=mod: run(m), number=1, repeat=args.repeat)) * 1000 for _, mod in backends]
        speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
        print(f"{label:<22}{calls:>8}" + "".join(f"{t:>14.1f}" for t in times) + speed)


if __name__ == "__main__":
    main()
