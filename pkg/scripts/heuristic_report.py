"""Accuracy table for the inactive-constraint heuristic.

Solves a corpus per family, compares the heuristic's predicted inactive set
(k = number of truly inactive rows) against the ground truth partition, and
prints mean +/- std accuracy with timing.

    python3 scripts/heuristic_report.py --count 100 --size 100
"""
import argparse
import time

import numpy as np

from qpaug import (
    gen_lp,
    gen_qp,
    heuristic_accuracy,
    heuristic_inactive,
    partition_constraints,
    solve_splitting,
)


def corpus_accuracy(make, count):
    accs = []
    t0 = time.perf_counter()
    for seed in range(count):
        inst = make(seed)
        sol = solve_splitting(inst)
        part = partition_constraints(inst, sol)
        k = len(part.inactive)
        if k == 0:
            continue
        accs.append(heuristic_accuracy(part.inactive, heuristic_inactive(inst, k)))
    return np.asarray(accs), time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=100, help="instances per family")
    ap.add_argument("--size", type=int, default=100, help="m = n for both families")
    ap.add_argument("--density", type=float, default=0.05)
    ap.add_argument("--slack-noise", type=float, default=4.0)
    args = ap.parse_args()

    families = {
        "lp": lambda s: gen_lp(args.size, args.size, args.density, s,
                               bounded=True, slack_noise=args.slack_noise),
        "qp": lambda s: gen_qp(args.size, args.size, args.density, args.density, s,
                               slack_noise=args.slack_noise),
    }
    print(f"{'family':<8}{'count':>6}{'mean':>9}{'std':>9}{'time':>9}")
    for name, make in families.items():
        accs, dt = corpus_accuracy(make, args.count)
        print(f"{name:<8}{accs.size:>6}{accs.mean():>9.4f}{accs.std():>9.4f}{dt:>8.1f}s")


if __name__ == "__main__":
    main()
