"""Command line front end for dataset work: generation, augmentation,
solving, label verification, heuristic evaluation, split reassignment,
graph export, and objective-gap metrics.

Exit codes: 0 success, 2 bad input or usage, 3 solver failure rate over
budget, 4 augmentation needs labels it does not have, 5 verification failed.
Each command prints a JSON report to stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .core import (
    InputError,
    ProblemKind,
    kkt_residuals,
    kkt_residuals_raw,
    objective,
    partition_constraints,
)
from .fileio import (
    _parse,
    load_instance,
    load_instance_unchecked,
    load_manifest,
    save_graph,
    save_instance,
    save_manifest,
)
from .generators import GENERATOR_FAMILIES, gen_dataset
from .graphenc import to_bipartite_graph
from .rng import derive_rng, derive_seed
from .solver import InfeasibleOrUnbounded, Unbounded, Unconverged, solve_splitting
from .transforms import (
    _SOLUTION_DEPENDENT,
    AugmentPolicy,
    COMBO_STRENGTHS,
    SSL_STRENGTHS_LP,
    SSL_STRENGTHS_QP,
    apply_policy,
    heuristic_accuracy,
    heuristic_inactive,
)

# command flag -> generator keyword; only flags the user actually set are
# forwarded, so family-specific keywords stay out of the other families
_SIZE_FLAG_TO_KW = (
    ("rows", "m"),
    ("cols", "n"),
    ("density_a", "density_a"),
    ("density_q", "density_q"),
    ("bounded", "bounded"),
    ("slack_noise", "slack_noise"),
    ("box_margin", "box_margin"),
    ("samples", "n_samples"),
    ("features", "d_features"),
    ("lambda_reg", "lambda_reg"),
    ("density", "density"),
    ("assets", "n_assets"),
)


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise InputError(f"--{name.replace('_', '-')} is required")


def _resolve_jobs(args) -> int:
    jobs = args.jobs
    if jobs is None:
        try:
            jobs = int(os.environ.get("QPAUG_JOBS", "1"))
        except ValueError as exc:
            raise InputError(f"QPAUG_JOBS must be an integer: {exc}") from exc
    if jobs < 1:
        raise InputError("jobs must be at least 1")
    return jobs


def _report(doc: dict):
    print(json.dumps(doc, indent=2))


def _status_counts(statuses):
    counts: dict[str, int] = {}
    for s in statuses:
        counts[s] = counts.get(s, 0) + 1
    return counts


# ------------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    _require(args, "family", "count", "out")
    size_params = {}
    for flag, kw in _SIZE_FLAG_TO_KW:
        val = getattr(args, flag)
        if val is not None:
            size_params[kw] = val
    entries = gen_dataset(
        args.out, args.family, size_params, args.count, args.seed,
        solve=bool(args.solve), jobs=_resolve_jobs(args),
    )
    labeled = sum(1 for e in entries if e["labeled"])
    _report({
        "manifest": str(Path(args.out) / "manifest.json"),
        "count": len(entries),
        "label_rate": labeled / len(entries) if entries else 0.0,
        "statuses": _status_counts(e["solver_status"] for e in entries),
    })
    if args.solve and entries:
        failures = sum(1 for e in entries if e["solver_status"] != "ok")
        if failures / len(entries) > args.failure_budget:
            print(
                f"solver failed on {failures}/{len(entries)} instances, "
                f"over budget {args.failure_budget}", file=sys.stderr,
            )
            return 3
    return 0


# ---------------------------------------------------------------------- solve

def _solve_task(task):
    src, dst = task
    inst, _ = load_instance(src)
    status, sol = "ok", None
    try:
        sol = solve_splitting(inst)
        if kkt_residuals(inst, sol, relative=True).max_residual > 1e-6:
            sol, status = None, "kkt_check_failed"
    except Unbounded:
        status = "unbounded"
    except InfeasibleOrUnbounded:
        status = "infeasible_or_unbounded"
    except Unconverged:
        status = "unconverged"
    save_instance(dst, inst, sol)
    return status, sol is not None


def cmd_solve(args) -> int:
    _require(args, "manifest", "out")
    entries = load_manifest(args.manifest)
    src_dir = Path(args.manifest).parent
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [
        (str(src_dir / e["path"]), str(out_dir / Path(e["path"]).name))
        for e in entries
    ]
    jobs = _resolve_jobs(args)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve_task, tasks))
    else:
        results = [_solve_task(t) for t in tasks]
    out_entries = []
    for e, (status, got_label) in zip(entries, results):
        ne = dict(e)
        ne["path"] = Path(e["path"]).name
        ne["labeled"] = got_label
        ne["solver_status"] = status
        out_entries.append(ne)
    save_manifest(out_dir / "manifest.json", out_entries)
    labeled = sum(1 for _, got in results if got)
    _report({
        "manifest": str(out_dir / "manifest.json"),
        "count": len(out_entries),
        "label_rate": labeled / len(out_entries) if out_entries else 0.0,
        "statuses": _status_counts(s for s, _ in results),
    })
    failures = sum(1 for s, _ in results if s != "ok")
    if entries and failures / len(entries) > args.failure_budget:
        print(
            f"solver failed on {failures}/{len(entries)} instances, "
            f"over budget {args.failure_budget}", file=sys.stderr,
        )
        return 3
    return 0


# -------------------------------------------------------------------- augment

def _parse_ops(spec: str | None):
    """Parse "name:strength,..." into a strength table; "none" means empty."""
    if spec is None:
        return None
    if spec.strip() == "none":
        return {}
    strengths = {}
    for part in spec.split(","):
        name, sep, val = part.partition(":")
        if not sep:
            raise InputError(f"bad op spec {part!r}, expected name:strength")
        try:
            strengths[name.strip()] = float(val)
        except ValueError as exc:
            raise InputError(f"bad strength in op spec {part!r}") from exc
    return strengths


def cmd_augment(args) -> int:
    _require(args, "manifest", "out")
    if args.views is not None and args.views < 1:
        raise InputError("--views must be at least 1")
    if args.per_instance < 1:
        raise InputError("--per-instance must be at least 1")
    entries = load_manifest(args.manifest)
    explicit = _parse_ops(args.ops)
    views = args.views

    # ops that need a solution are rejected up front: views are always
    # unlabeled, and a default table must cover every manifest entry
    if explicit is not None:
        tables = [explicit]
    elif views is not None:
        tables = [SSL_STRENGTHS_LP, SSL_STRENGTHS_QP]
    else:
        tables = [COMBO_STRENGTHS]
    needy = sorted(
        {op for t in tables for op in _SOLUTION_DEPENDENT if t.get(op, 0.0) > 0.0}
    )
    if needy:
        if views is not None:
            print(f"op {needy[0]} needs a solution, views are unlabeled", file=sys.stderr)
            return 4
        if not all(e["labeled"] for e in entries):
            print(
                f"op {needy[0]} needs a solution but the manifest has "
                f"unlabeled instances", file=sys.stderr,
            )
            return 4

    src_dir = Path(args.manifest).parent
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    copies = views if views is not None else args.per_instance
    tag = "view" if views is not None else "aug"
    out_entries = []
    for e in entries:
        inst, sol = load_instance(src_dir / e["path"])
        if views is not None:
            sol = None
        stem = Path(e["path"]).stem
        if explicit is not None:
            strengths = explicit
        elif views is not None:
            strengths = (
                SSL_STRENGTHS_QP if inst.kind is ProblemKind.QP else SSL_STRENGTHS_LP
            )
        else:
            strengths = COMBO_STRENGTHS
        for j in range(copies):
            pseed = (
                derive_seed(args.seed, stem, "view", j)
                if views is not None
                else derive_seed(args.seed, stem, j)
            )
            policy = AugmentPolicy(
                strengths, ops_per_instance=args.ops_per_copy,
                interpolate=views is None, seed=pseed,
            )
            new_inst, new_sol, _ = apply_policy(inst, policy, sol)
            new_stem = f"{stem}_{tag}{j:02d}"
            new_inst = dataclasses.replace(new_inst, name=new_stem)
            save_instance(out_dir / f"{new_stem}.json", new_inst, new_sol)
            out_entries.append({
                "path": f"{new_stem}.json",
                "split": e["split"],
                "family": e["family"],
                "seed": pseed,
                "labeled": new_sol is not None,
                "solver_status": "mapped" if new_sol is not None else "not_requested",
            })
    save_manifest(out_dir / "manifest.json", out_entries)
    _report({
        "manifest": str(out_dir / "manifest.json"),
        "count": len(out_entries),
    })
    return 0


# --------------------------------------------------------------------- verify

def cmd_verify(args) -> int:
    _require(args, "manifest")
    entries = load_manifest(args.manifest)
    src_dir = Path(args.manifest).parent
    checked, failing = 0, []
    worst = {
        "stationarity_inf_norm": 0.0,
        "primal_violation": 0.0,
        "dual_violation": 0.0,
        "complementarity": 0.0,
    }
    for e in entries:
        if not e["labeled"]:
            continue
        try:
            inst, arrays = load_instance_unchecked(src_dir / e["path"])
            if arrays is None:
                raise InputError("marked labeled but stores no solution")
            x, lam, stored_obj = arrays
            rep = kkt_residuals_raw(inst, x, lam, relative=not args.absolute)
        except InputError as exc:
            print(f"{e['path']}: {exc}", file=sys.stderr)
            failing.append(e["path"])
            continue
        checked += 1
        for key in worst:
            worst[key] = max(worst[key], getattr(rep, key))
        ok = rep.max_residual <= args.tol
        if abs(stored_obj - objective(inst, x)) > args.tol * (1.0 + abs(stored_obj)):
            ok = False
        if not ok:
            failing.append(e["path"])
    if checked == 0 and not failing:
        print("manifest has no labeled instances to verify", file=sys.stderr)
        return 2
    _report({
        "checked": checked,
        "tol": args.tol,
        "relative": not args.absolute,
        "worst": worst,
        "failing": failing,
    })
    return 5 if failing else 0


# ------------------------------------------------------------- heuristic-eval

def cmd_heuristic_eval(args) -> int:
    _require(args, "manifest")
    entries = load_manifest(args.manifest)
    src_dir = Path(args.manifest).parent
    buckets: dict[str, list[float]] = {}
    for e in entries:
        if not e["labeled"]:
            continue
        inst, sol = load_instance(src_dir / e["path"])
        part = partition_constraints(inst, sol, tol=args.active_tol)
        k = len(part.inactive)
        if k == 0:
            continue
        acc = heuristic_accuracy(part.inactive, heuristic_inactive(inst, k))
        buckets.setdefault(f"{inst.m}x{inst.n}", []).append(acc)
    if not buckets:
        print("no labeled instances with inactive constraints", file=sys.stderr)
        return 2

    def stats(vals):
        arr = np.asarray(vals, dtype=np.float64)
        return {"mean": float(arr.mean()), "std": float(arr.std()), "count": len(vals)}

    _report({
        "overall": stats([v for vals in buckets.values() for v in vals]),
        "buckets": {key: stats(vals) for key, vals in sorted(buckets.items())},
    })
    return 0


# ----------------------------------------------------------------------- split

def cmd_split(args) -> int:
    _require(args, "manifest")
    entries = load_manifest(args.manifest)
    count = len(entries)
    n_hold = count // 10
    split = np.array(["train"] * count, dtype=object)
    perm = derive_rng(args.seed, "split").permutation(count)
    split[perm[:n_hold]] = "val"
    split[perm[n_hold:2 * n_hold]] = "test"
    for e, s in zip(entries, split):
        e["split"] = str(s)
    out = args.out if args.out is not None else args.manifest
    save_manifest(out, entries)
    counts = _status_counts(e["split"] for e in entries)
    _report({"manifest": str(out), **{k: counts.get(k, 0) for k in ("train", "val", "test")}})
    return 0


# ----------------------------------------------------------------------- graph

def cmd_graph(args) -> int:
    _require(args, "manifest", "out")
    entries = load_manifest(args.manifest)
    src_dir = Path(args.manifest).parent
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for e in entries:
        inst, _ = load_instance(src_dir / e["path"])
        graph = to_bipartite_graph(inst)
        save_graph(out_dir / f"{Path(e['path']).stem}.graph.json", graph)
    _report({"out": str(out_dir), "count": len(entries)})
    return 0


# --------------------------------------------------------------------- metrics

def cmd_metrics(args) -> int:
    _require(args, "pairs")
    doc = _parse(args.pairs)
    try:
        arr = np.asarray(doc, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(
            f"{args.pairs}: expected [[predicted, reference], ...] ({exc})"
        ) from exc
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise InputError(f"{args.pairs}: expected a nonempty [[predicted, reference], ...]")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{args.pairs}: objective values must be finite")
    zero = np.flatnonzero(arr[:, 1] == 0.0)
    if zero.size:
        print(
            f"reference objective is zero at index {int(zero[0])}, relative "
            f"error is undefined", file=sys.stderr,
        )
        return 2
    err = np.abs(arr[:, 0] - arr[:, 1]) / np.abs(arr[:, 1])
    _report({
        "count": int(arr.shape[0]),
        "mean_relative_objective_error_pct": float(err.mean() * 100.0),
    })
    return 0


# ----------------------------------------------------------------- entry point

def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", metavar="PATH",
        help="JSON object of option defaults; explicit flags take precedence",
    )
    parser = argparse.ArgumentParser(
        prog="qpaug",
        description="datasets of linearly constrained quadratic programs: "
                    "generate, augment, solve, verify, and export",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    registry = {}

    sp = sub.add_parser("generate", parents=[common],
                        help="write a dataset of random instances")
    sp.add_argument("--family", choices=sorted(GENERATOR_FAMILIES))
    sp.add_argument("--count", type=int, help="number of instances")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--solve", action="store_true", default=None,
                    help="label each instance by solving it")
    sp.add_argument("--jobs", type=int, default=None,
                    help="worker processes (default $QPAUG_JOBS or 1)")
    sp.add_argument("--failure-budget", type=float, default=0.1,
                    help="max tolerated solver failure rate")
    sp.add_argument("--rows", type=int, help="constraint count m")
    sp.add_argument("--cols", type=int, help="variable count n")
    sp.add_argument("--density-a", type=float)
    sp.add_argument("--density-q", type=float)
    sp.add_argument("--bounded", action="store_true", default=None,
                    help="add box constraints so the instance stays bounded")
    sp.add_argument("--slack-noise", type=float)
    sp.add_argument("--box-margin", type=float)
    sp.add_argument("--samples", type=int, help="sample count n_samples")
    sp.add_argument("--features", type=int, help="feature count d_features")
    sp.add_argument("--lambda-reg", type=float)
    sp.add_argument("--density", type=float)
    sp.add_argument("--assets", type=int, help="asset count n_assets")
    sp.set_defaults(handler=cmd_generate)
    registry["generate"] = sp

    sp = sub.add_parser("augment", parents=[common],
                        help="write transformed copies of a dataset")
    sp.add_argument("--manifest", help="input manifest path")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--ops", help='"name:strength,..." or "none" (default: combo table)')
    sp.add_argument("--per-instance", type=int, default=1,
                    help="augmented copies per input instance")
    sp.add_argument("--ops-per-copy", type=int, default=2,
                    help="ops sampled for each copy")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--views", type=int, default=None,
                    help="emit N unlabeled contrastive views per instance instead")
    sp.set_defaults(handler=cmd_augment)
    registry["augment"] = sp

    sp = sub.add_parser("solve", parents=[common],
                        help="solve every instance and write a labeled copy")
    sp.add_argument("--manifest", help="input manifest path")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--jobs", type=int, default=None,
                    help="worker processes (default $QPAUG_JOBS or 1)")
    sp.add_argument("--failure-budget", type=float, default=0.1,
                    help="max tolerated solver failure rate")
    sp.set_defaults(handler=cmd_solve)
    registry["solve"] = sp

    sp = sub.add_parser("verify", parents=[common],
                        help="check stored solutions against first-order conditions")
    sp.add_argument("--manifest", help="input manifest path")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--absolute", action="store_true", default=None,
                    help="use absolute instead of relative residuals")
    sp.set_defaults(handler=cmd_verify)
    registry["verify"] = sp

    sp = sub.add_parser("heuristic-eval", parents=[common],
                        help="score the inactive-constraint heuristic on labeled data")
    sp.add_argument("--manifest", help="input manifest path")
    sp.add_argument("--active-tol", type=float, default=1e-6,
                    help="slack threshold for calling a row active")
    sp.set_defaults(handler=cmd_heuristic_eval)
    registry["heuristic-eval"] = sp

    sp = sub.add_parser("split", parents=[common],
                        help="reassign the train/val/test split in place")
    sp.add_argument("--manifest", help="manifest path to rewrite")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="write here instead of in place")
    sp.set_defaults(handler=cmd_split)
    registry["split"] = sp

    sp = sub.add_parser("graph", parents=[common],
                        help="export each instance as a bipartite graph file")
    sp.add_argument("--manifest", help="input manifest path")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(handler=cmd_graph)
    registry["graph"] = sp

    sp = sub.add_parser("metrics", parents=[common],
                        help="mean relative objective error of predicted values")
    sp.add_argument("--pairs", help="JSON file of [predicted, reference] pairs")
    sp.set_defaults(handler=cmd_metrics)
    registry["metrics"] = sp

    return parser, registry


def _config_defaults(registry, argv):
    """First pass: pull --config, validate its keys against the subcommand,
    and install them as defaults so explicit flags still win on re-parse."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, rest = probe.parse_known_args(argv)
    if known.config is None:
        return
    cmd = rest[0] if rest and not rest[0].startswith("-") else None
    if cmd not in registry:
        raise InputError("--config needs one of the known subcommands")
    sp = registry[cmd]
    doc = _parse(known.config)
    if not isinstance(doc, dict):
        raise InputError(f"{known.config}: config must hold a JSON object")
    dests = {a.dest for a in sp._actions} - {"help", "config"}
    overrides = {}
    for key, val in doc.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            raise InputError(f"{known.config}: unknown config key {key!r} for {cmd}")
        overrides[dest] = val
    sp.set_defaults(**overrides)


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, registry = _build_parser()
    try:
        _config_defaults(registry, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return handler(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
