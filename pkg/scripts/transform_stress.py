"""Stress the transform catalog on solved instances and report the worst
mapped-solution residual.

Each instance is pushed through every transform individually and then through
random two-op chains; the mapped solution must stay first-order optimal.

    python3 scripts/transform_stress.py --instances 50 --chains 20
"""
import argparse
import time

import numpy as np

from qpaug import (
    add_constraints,
    add_variable_biased,
    add_variable_constrained,
    add_variables,
    bias_instance,
    gen_qp,
    kkt_residuals,
    map_solution,
    remove_idle_variables,
    remove_inactive_constraints,
    scale_constraints,
    scale_variables,
    solve_splitting,
)
from qpaug.rng import derive_rng


def random_convex_rows(inst, rng, count=3):
    weights = []
    for _ in range(count):
        take = min(3, inst.m)
        picked = rng.choice(inst.m, size=take, replace=False)
        raw = rng.random(take) + 1e-9
        w = np.zeros(inst.m)
        w[picked] = raw / raw.sum()
        weights.append(w)
    return weights


CATALOG = {
    "scale_variables": lambda inst, sol, rng: scale_variables(
        inst, np.exp(rng.uniform(-1, 1, inst.n))),
    "scale_constraints": lambda inst, sol, rng: scale_constraints(
        inst, np.exp(rng.uniform(-1, 1, inst.m))),
    "remove_idle_variables": lambda inst, sol, rng: remove_idle_variables(inst, sol),
    "remove_inactive_constraints": lambda inst, sol, rng: remove_inactive_constraints(
        inst, sol, fraction=0.5, seed=int(rng.integers(2**31))),
    "add_variables": lambda inst, sol, rng: add_variables(inst, rng.standard_normal(inst.n)),
    "add_variable_biased": lambda inst, sol, rng: add_variable_biased(
        inst, sol, 1.0 + rng.random(), rng.standard_normal(inst.m)),
    "add_variable_constrained": lambda inst, sol, rng: add_variable_constrained(
        inst, rng.random(), -np.abs(rng.standard_normal(inst.m)), -abs(rng.standard_normal())),
    "add_constraints": lambda inst, sol, rng: add_constraints(inst, random_convex_rows(inst, rng)),
    "bias_instance": lambda inst, sol, rng: bias_instance(
        inst, sol, rank=2, magnitude=0.1, seed=int(rng.integers(2**31))),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--size", type=int, default=100, help="m = n of each instance")
    ap.add_argument("--density", type=float, default=0.05)
    ap.add_argument("--chains", type=int, default=20, help="two-op chains per instance")
    args = ap.parse_args()

    t0 = time.perf_counter()
    worst = {name: 0.0 for name in CATALOG}
    worst_chain = 0.0
    names = list(CATALOG)
    for i in range(args.instances):
        inst = gen_qp(args.size, args.size, args.density, args.density, seed=i)
        sol = solve_splitting(inst)
        for name, op in CATALOG.items():
            out, rec = op(inst, sol, derive_rng(1000 + i, name))
            mapped = map_solution(rec, out, sol)
            worst[name] = max(
                worst[name], kkt_residuals(out, mapped, relative=True).max_residual)
        rng = np.random.default_rng(i)
        for j in range(args.chains):
            cur, cur_sol = inst, sol
            for name in rng.choice(names, size=2, replace=False):
                nxt, rec = CATALOG[name](cur, cur_sol, derive_rng(i, j, name))
                cur_sol = map_solution(rec, nxt, cur_sol)
                cur = nxt
            worst_chain = max(
                worst_chain, kkt_residuals(cur, cur_sol, relative=True).max_residual)

    for name in names:
        print(f"{name:<28}{worst[name]:.3e}")
    print(f"{'two-op chains':<28}{worst_chain:.3e}")
    print(f"total {time.perf_counter() - t0:.1f}s for {args.instances} instances")


if __name__ == "__main__":
    main()
