"""Optimality-preserving instance transformations.

Every operation returns a new instance together with a TransformRecord whose
solution_map rebuilds the transformed optimum from the original one in linear
time.  Ops that never look at the solution (scaling, convex-combination rows,
the constrained extra variable) are safe on unlabeled data; the rest take the
Solution explicitly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    Definiteness,
    InputError,
    LcqpInstance,
    ProblemKind,
    Solution,
    SparseMatrix,
    psd_certificate,
)
from .rng import derive_rng


class MapKind(enum.Enum):
    IDENTITY = "identity"
    PRIMAL_SCALED = "primal_scaled"
    DUAL_SCALED = "dual_scaled"
    EXTENDED_WITH_ZEROS = "extended_with_zeros"
    RESTRICTED_TO = "restricted_to"
    EXPLICIT_DUAL = "explicit_dual"


@dataclass(frozen=True)
class SolutionMap:
    """Closed-form recipe mapping the old optimum to the new one.

    side selects which of the two vectors the indices refer to; values carries
    scale factors, or for EXPLICIT_DUAL the tuple (c_new, a_col...) defining
    the appended multiplier -(c_new + a_col . lam).
    """

    kind: MapKind
    side: str = "primal"
    values: tuple[float, ...] | None = None
    indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.side not in ("primal", "dual"):
            raise InputError(f"side must be primal or dual, got {self.side!r}")
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.indices is not None:
            object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))


@dataclass(frozen=True)
class TransformRecord:
    op_name: str
    params: dict
    solution_map: SolutionMap


def map_solution(record: TransformRecord, new_inst: LcqpInstance, sol: Solution) -> Solution:
    """Reconstruct the transformed Solution from the original one."""
    sm = record.solution_map
    x, lam = sol.x, sol.lam
    if sm.kind is MapKind.IDENTITY:
        pass
    elif sm.kind is MapKind.PRIMAL_SCALED:
        x = x * np.asarray(sm.values)
    elif sm.kind is MapKind.DUAL_SCALED:
        lam = lam * np.asarray(sm.values)
    elif sm.kind is MapKind.RESTRICTED_TO:
        idx = list(sm.indices)
        if sm.side == "primal":
            x = x[idx]
        else:
            lam = lam[idx]
    elif sm.kind is MapKind.EXTENDED_WITH_ZEROS:
        fresh = set(sm.indices)
        if sm.side == "primal":
            out = np.zeros(new_inst.n)
            out[[i for i in range(new_inst.n) if i not in fresh]] = x
            x = out
        else:
            out = np.zeros(new_inst.m)
            out[[i for i in range(new_inst.m) if i not in fresh]] = lam
            lam = out
    elif sm.kind is MapKind.EXPLICIT_DUAL:
        vals = np.asarray(sm.values)
        lam_new = -(vals[0] + vals[1:] @ lam)
        x = np.append(x, 0.0)
        lam = np.append(lam, lam_new)
    else:  # pragma: no cover
        raise InputError(f"unknown map kind {sm.kind}")
    return Solution.from_primal_dual(new_inst, x, lam)


def _emit(inst, q, a, b, c, kind, record):
    out = LcqpInstance(
        q=q, a=a, b=b, c=c, kind=kind, name=inst.name,
        provenance=inst.provenance + (record,),
    )
    return out, record


def _check_sol(inst: LcqpInstance, sol: Solution):
    if sol.x.shape != (inst.n,) or sol.lam.shape != (inst.m,):
        raise InputError("solution does not match instance dimensions")


# ----------------------------------------------------------------- scaling ops

def scale_variables(inst: LcqpInstance, alpha) -> tuple[LcqpInstance, TransformRecord]:
    """Rescale variable j by alpha_j > 0; the optimum moves to x_j / alpha_j."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (inst.n,):
        raise InputError(f"alpha must have shape ({inst.n},)")
    if not np.all(np.isfinite(alpha)) or alpha.min(initial=np.inf) <= 0:
        raise InputError("alpha entries must be positive")
    q = inst.q
    # pair products first so (i,j) and (j,i) stay bitwise equal
    q_new = SparseMatrix(inst.n, inst.n, q.rows, q.cols, q.vals * (alpha[q.rows] * alpha[q.cols]))
    a = inst.a
    a_new = SparseMatrix(inst.m, inst.n, a.rows, a.cols, a.vals * alpha[a.cols])
    record = TransformRecord(
        "scale_variables",
        {"alpha": alpha.tolist()},
        SolutionMap(MapKind.PRIMAL_SCALED, values=tuple(1.0 / alpha)),
    )
    return _emit(inst, q_new, a_new, inst.b, inst.c * alpha, inst.kind, record)


def scale_constraints(inst: LcqpInstance, d) -> tuple[LcqpInstance, TransformRecord]:
    """Rescale row i by d_i > 0; dual i moves to lam_i / d_i, primal untouched."""
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (inst.m,):
        raise InputError(f"d must have shape ({inst.m},)")
    if not np.all(np.isfinite(d)) or d.min(initial=np.inf) <= 0:
        raise InputError("d entries must be positive")
    a = inst.a
    a_new = SparseMatrix(inst.m, inst.n, a.rows, a.cols, a.vals * d[a.rows])
    record = TransformRecord(
        "scale_constraints",
        {"d": d.tolist()},
        SolutionMap(MapKind.DUAL_SCALED, side="dual", values=tuple(1.0 / d)),
    )
    return _emit(inst, inst.q, a_new, inst.b * d, inst.c, inst.kind, record)


# ----------------------------------------------------------------- removal ops

def _drop_variables(inst, drop: Iterable[int], op_name="drop_variables", extra=None):
    drop = sorted({int(j) for j in drop})
    if drop and (drop[0] < 0 or drop[-1] >= inst.n):
        raise InputError("variable index out of range")
    dropped = set(drop)
    kept = [j for j in range(inst.n) if j not in dropped]
    if not kept:
        raise InputError("cannot drop every variable")
    pos = np.full(inst.n, -1, dtype=np.int64)
    pos[kept] = np.arange(len(kept))
    q = inst.q
    qmask = np.isin(q.rows, kept) & np.isin(q.cols, kept)
    q_new = SparseMatrix(len(kept), len(kept), pos[q.rows[qmask]], pos[q.cols[qmask]], q.vals[qmask])
    a = inst.a
    amask = np.isin(a.cols, kept)
    a_new = SparseMatrix(inst.m, len(kept), a.rows[amask], pos[a.cols[amask]], a.vals[amask])
    record = TransformRecord(
        op_name,
        {"dropped": drop, **(extra or {})},
        SolutionMap(MapKind.RESTRICTED_TO, side="primal", indices=tuple(kept)),
    )
    return _emit(inst, q_new, a_new, inst.b, inst.c[kept], inst.kind, record)


def _drop_constraints(inst, drop: Iterable[int], op_name="drop_constraints", extra=None):
    drop = sorted({int(i) for i in drop})
    if drop and (drop[0] < 0 or drop[-1] >= inst.m):
        raise InputError("constraint index out of range")
    dropped = set(drop)
    kept = [i for i in range(inst.m) if i not in dropped]
    pos = np.full(inst.m, -1, dtype=np.int64)
    pos[kept] = np.arange(len(kept))
    a = inst.a
    amask = np.isin(a.rows, kept)
    a_new = SparseMatrix(len(kept), inst.n, pos[a.rows[amask]], a.cols[amask], a.vals[amask])
    record = TransformRecord(
        op_name,
        {"dropped": drop, **(extra or {})},
        SolutionMap(MapKind.RESTRICTED_TO, side="dual", indices=tuple(kept)),
    )
    return _emit(inst, inst.q, a_new, inst.b[kept], inst.c, inst.kind, record)


def remove_idle_variables(inst: LcqpInstance, sol: Solution, tol: float = 1e-8):
    """Drop every variable whose optimal value is (relatively) zero."""
    _check_sol(inst, sol)
    if tol < 0:
        raise InputError("tol must be nonnegative")
    scale = 1.0 + (np.abs(sol.x).max() if inst.n else 0.0)
    idle = np.flatnonzero(np.abs(sol.x) <= tol * scale)
    if idle.size == inst.n:
        raise InputError("every variable is idle; refusing to emit an empty instance")
    return _drop_variables(inst, idle.tolist(), op_name="remove_idle_variables", extra={"tol": tol})


def remove_inactive_constraints(
    inst: LcqpInstance, sol: Solution, tol: float = 1e-6,
    fraction: float = 1.0, seed: int = 0,
):
    """Drop a sampled fraction of the strictly inactive rows."""
    _check_sol(inst, sol)
    if not 0.0 <= fraction <= 1.0:
        raise InputError("fraction must lie in [0, 1]")
    inactive = np.flatnonzero(sol.slack > tol * (1.0 + np.abs(inst.b)))
    count = int(fraction * inactive.size)
    rng = derive_rng(seed, "remove_inactive_constraints")
    drop = np.sort(rng.choice(inactive, size=count, replace=False)) if count else np.empty(0, dtype=int)
    return _drop_constraints(
        inst, drop.tolist(), op_name="remove_inactive_constraints",
        extra={"tol": tol, "fraction": fraction, "seed": seed},
    )


# ---------------------------------------------------------------- addition ops

def add_variables(inst: LcqpInstance, q_vec, ridge: float | None = None):
    """Append a variable whose data is the q_vec-combination of existing ones.

    The extension [[Q, Qq], [q'Q, q'Qq]] is only positive semidefinite, so a
    small ridge (default 1e-2 * trace(Q)/n) lands on the new diagonal entry to
    keep the quadratic term PD; the mapped optimum has the new coordinate at 0
    either way.
    """
    q_vec = np.asarray(q_vec, dtype=np.float64)
    if q_vec.shape != (inst.n,):
        raise InputError(f"q_vec must have shape ({inst.n},)")
    if psd_certificate(inst.q) is not Definiteness.PD:
        raise InputError("add_variables needs a positive definite quadratic term")
    trace = float(inst.q.vals[inst.q.rows == inst.q.cols].sum())
    if ridge is None:
        ridge = 1e-2 * trace / inst.n
    if ridge < 0:
        raise InputError("ridge must be nonnegative")
    n, m = inst.n, inst.m
    qq = inst.q.matvec(q_vec)
    corner = float(q_vec @ qq) + ridge
    q = inst.q
    new_idx = np.arange(n)
    q_new = SparseMatrix(
        n + 1, n + 1,
        np.concatenate([q.rows, new_idx, np.full(n, n), [n]]),
        np.concatenate([q.cols, np.full(n, n), new_idx, [n]]),
        np.concatenate([q.vals, qq, qq, [corner]]),
    )
    aq = inst.a.matvec(q_vec)
    a = inst.a
    a_new = SparseMatrix(
        m, n + 1,
        np.concatenate([a.rows, np.arange(m)]),
        np.concatenate([a.cols, np.full(m, n)]),
        np.concatenate([a.vals, aq]),
    )
    c_new = np.append(inst.c, float(q_vec @ inst.c))
    record = TransformRecord(
        "add_variables",
        {"q_vec": q_vec.tolist(), "ridge": float(ridge)},
        SolutionMap(MapKind.EXTENDED_WITH_ZEROS, side="primal", indices=(n,)),
    )
    return _emit(inst, q_new, a_new, inst.b, c_new, inst.kind, record)


def add_variable_biased(inst: LcqpInstance, sol: Solution, q_diag: float, a_col):
    """Append a decoupled variable; its cost is chosen so the stationarity row
    closes at zero, which needs the optimal duals."""
    _check_sol(inst, sol)
    if q_diag <= 0:
        raise InputError("q_diag must be positive")
    a_col = np.asarray(a_col, dtype=np.float64)
    if a_col.shape != (inst.m,):
        raise InputError(f"a_col must have shape ({inst.m},)")
    n, m = inst.n, inst.m
    q = inst.q
    q_new = SparseMatrix(
        n + 1, n + 1,
        np.concatenate([q.rows, [n]]),
        np.concatenate([q.cols, [n]]),
        np.concatenate([q.vals, [q_diag]]),
    )
    a = inst.a
    a_new = SparseMatrix(
        m, n + 1,
        np.concatenate([a.rows, np.arange(m)]),
        np.concatenate([a.cols, np.full(m, n)]),
        np.concatenate([a.vals, a_col]),
    )
    c_new = np.append(inst.c, -float(a_col @ sol.lam))
    record = TransformRecord(
        "add_variable_biased",
        {"q_diag": float(q_diag), "a_col": a_col.tolist()},
        SolutionMap(MapKind.EXTENDED_WITH_ZEROS, side="primal", indices=(n,)),
    )
    return _emit(inst, q_new, a_new, inst.b, c_new, inst.kind, record)


def add_variable_constrained(inst: LcqpInstance, q_diag: float, a_col, c_new: float):
    """Append a variable pinned at zero by an extra x' <= 0 row.

    The sign restrictions a_col <= 0, c_new <= 0 make the appended multiplier
    -(c_new + a_col . lam) nonnegative for every dual vector, so the op stays
    solution-independent.  q_diag = 0 is accepted so LPs stay LPs.
    """
    if q_diag < 0:
        raise InputError("q_diag must be nonnegative")
    a_col = np.asarray(a_col, dtype=np.float64)
    if a_col.shape != (inst.m,):
        raise InputError(f"a_col must have shape ({inst.m},)")
    if a_col.max(initial=0.0) > 0:
        raise InputError("a_col entries must be nonpositive")
    if c_new > 0:
        raise InputError("c_new must be nonpositive")
    n, m = inst.n, inst.m
    q = inst.q
    q_new = SparseMatrix(
        n + 1, n + 1,
        np.concatenate([q.rows, [n]]),
        np.concatenate([q.cols, [n]]),
        np.concatenate([q.vals, [q_diag]]),
    )
    a = inst.a
    a_new = SparseMatrix(
        m + 1, n + 1,
        np.concatenate([a.rows, np.arange(m), [m]]),
        np.concatenate([a.cols, np.full(m, n), [n]]),
        np.concatenate([a.vals, a_col, [1.0]]),
    )
    kind = inst.kind if (inst.kind is ProblemKind.QP or q_diag == 0.0) else ProblemKind.QP
    record = TransformRecord(
        "add_variable_constrained",
        {"q_diag": float(q_diag), "a_col": a_col.tolist(), "c_new": float(c_new)},
        SolutionMap(MapKind.EXPLICIT_DUAL, side="dual", values=(float(c_new), *a_col)),
    )
    return _emit(
        inst, q_new, a_new, np.append(inst.b, 0.0), np.append(inst.c, c_new), kind, record
    )


def add_constraints(inst: LcqpInstance, weights: Sequence):
    """Append one row per weight vector: the w-convex-combination of existing
    rows, slack w . s >= 0 at any feasible point, dual 0 at the optimum."""
    ws = []
    for w in weights:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (inst.m,):
            raise InputError(f"weight must have shape ({inst.m},)")
        if not np.all(np.isfinite(w)) or w.min(initial=0.0) < 0:
            raise InputError("weights must be nonnegative")
        if w.max(initial=0.0) == 0:
            raise InputError("weight vector must not be all zero")
        ws.append(w)
    n, m = inst.n, inst.m
    rows = [inst.a.rows]
    cols = [inst.a.cols]
    vals = [inst.a.vals]
    b_extra = []
    for i, w in enumerate(ws):
        new_row = inst.a.rmatvec(w)
        nz = np.flatnonzero(new_row)
        rows.append(np.full(nz.size, m + i))
        cols.append(nz)
        vals.append(new_row[nz])
        b_extra.append(float(w @ inst.b))
    a_new = SparseMatrix(
        m + len(ws), n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )
    record = TransformRecord(
        "add_constraints",
        {"weights": [w.tolist() for w in ws]},
        SolutionMap(
            MapKind.EXTENDED_WITH_ZEROS, side="dual",
            indices=tuple(range(m, m + len(ws))),
        ),
    )
    return _emit(inst, inst.q, a_new, np.append(inst.b, b_extra), inst.c, inst.kind, record)


# ------------------------------------------------------------------- bias terms

def _bias_apply(inst: LcqpInstance, sol: Solution, b11, b21, params=None):
    """Shift (Q, A, b, c) by the given bias blocks while fixing (x*, lam*)."""
    _check_sol(inst, sol)
    b11 = np.asarray(b11, dtype=np.float64)
    b21 = np.asarray(b21, dtype=np.float64)
    if b11.shape != (inst.n, inst.n) or b21.shape != (inst.m, inst.n):
        raise InputError("bias blocks have wrong shape")
    b11 = (b11 + b11.T) / 2.0
    q_new = SparseMatrix.from_dense((inst.q.to_dense() + b11))
    a_new = SparseMatrix.from_dense(inst.a.to_dense() + b21)
    b_new = inst.b + b21 @ sol.x
    c_new = inst.c - b11 @ sol.x - b21.T @ sol.lam
    kind = ProblemKind.QP if q_new.nnz else inst.kind
    record = TransformRecord(
        "bias_instance",
        params if params is not None else {"b11": b11.tolist(), "b21": b21.tolist()},
        SolutionMap(MapKind.IDENTITY),
    )
    return _emit(inst, q_new, a_new, b_new, c_new, kind, record)


def bias_instance(inst: LcqpInstance, sol: Solution, rank: int, magnitude: float, seed: int):
    """Add a random PSD block to Q and a dense shift to A, compensating b and c
    so the original primal-dual pair stays optimal."""
    if rank < 1:
        raise InputError("rank must be at least 1")
    rng = derive_rng(seed, "bias_instance")
    r = magnitude * rng.standard_normal((inst.n, rank))
    b21 = magnitude * rng.standard_normal((inst.m, inst.n))
    b11 = r @ r.T
    return _bias_apply(
        inst, sol, b11, b21,
        params={"rank": int(rank), "magnitude": float(magnitude), "seed": int(seed)},
    )


# ------------------------------------------------------------ inactive heuristic

def heuristic_scores(inst: LcqpInstance, step: float | None = None) -> np.ndarray:
    """Normalized slack of each row at a trial step along the descent ray -c.

    Larger means more likely inactive at the optimum.  The step length
    defaults to 1 for QPs and 4 sqrt(n) for LPs, where optima sit far from the
    origin and the right-hand side would otherwise dominate the direction
    term.  Rows with no entries are vacuous and score +inf.
    """
    norms = inst.a.row_norms()
    if step is None:
        step = 1.0 if inst.kind is ProblemKind.QP else 4.0 * np.sqrt(inst.n)
    cnorm = float(np.linalg.norm(inst.c))
    if cnorm == 0.0:
        raw = inst.b.astype(np.float64)
    else:
        raw = inst.b + step * inst.a.matvec(inst.c) / cnorm
    with np.errstate(divide="ignore", invalid="ignore"):
        h = raw / norms
    h[norms == 0.0] = np.inf
    return h


def heuristic_inactive(inst: LcqpInstance, k: int, step: float | None = None) -> tuple[int, ...]:
    """Indices of the k rows most likely inactive; ties go to smaller index."""
    if not 0 <= k <= inst.m:
        raise InputError(f"k must lie in [0, {inst.m}]")
    if k == 0:
        return ()
    h = heuristic_scores(inst, step=step)
    order = np.argsort(-h, kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))


def heuristic_accuracy(gt_inactive, heu_inactive) -> float:
    heu = set(heu_inactive)
    if not heu:
        raise InputError("heuristic index set must be nonempty")
    return len(set(gt_inactive) & heu) / len(heu)


# ----------------------------------------------------------------------- policy

CATALOG_ORDER = ("drop-vars", "drop-cons", "scale-cons", "scale-vars", "add-cons", "add-vars")

# two-op combination strengths used for supervised-style augmentation
COMBO_STRENGTHS = {
    "drop-vars": 0.0, "drop-cons": 0.5, "scale-cons": 0.5,
    "scale-vars": 0.5, "add-cons": 0.6, "add-vars": 0.0,
}

# fixed strengths for contrastive view generation (no interpolation)
SSL_STRENGTHS_LP = {
    "drop-cons": 0.05, "scale-cons": 0.40, "scale-vars": 1.07,
    "add-cons": 0.36, "add-vars": 0.46,
}
SSL_STRENGTHS_QP = {
    "drop-cons": 0.07, "scale-cons": 1.03, "scale-vars": 0.65,
    "add-cons": 0.33, "add-vars": 0.26,
}

# single-op strengths tuned per problem kind
PER_OP_STRENGTHS_LP = {
    "drop-vars": 0.99, "drop-cons": 0.99, "scale-cons": 1.0,
    "scale-vars": 1.0, "add-cons": 0.5, "add-vars": 0.8,
}
PER_OP_STRENGTHS_QP = {
    "drop-vars": 0.99, "drop-cons": 0.99, "scale-cons": 1.0,
    "scale-vars": 1.0, "add-cons": 0.5, "add-vars": 0.6,
}

_SOLUTION_DEPENDENT = ("drop-vars",)


@dataclass(frozen=True)
class AugmentPolicy:
    """Which ops to sample, how hard to push them, and the stream seed."""

    strengths: Mapping[str, float]
    ops_per_instance: int = 2
    interpolate: bool = True
    seed: int = 0

    def __post_init__(self):
        s = {}
        for op, val in dict(self.strengths).items():
            if op not in CATALOG_ORDER:
                raise InputError(f"unknown augmentation op {op!r}")
            val = float(val)
            if not np.isfinite(val) or val < 0:
                raise InputError(f"strength for {op!r} must be finite and nonnegative")
            s[op] = val
        if self.ops_per_instance < 1:
            raise InputError("ops_per_instance must be at least 1")
        object.__setattr__(self, "strengths", s)


def _policy_drop_vars(inst, sol, aprime, rng):
    x = sol.x
    scale = 1.0 + (np.abs(x).max() if inst.n else 0.0)
    idle = np.flatnonzero(np.abs(x) <= 1e-8 * scale)
    frac = min(1.0, rng.uniform(0.0, aprime))
    k = min(int(frac * idle.size), inst.n - 1)
    if k <= 0:
        return None
    drop = np.sort(rng.choice(idle, size=k, replace=False))
    return _drop_variables(inst, drop.tolist())


def _policy_drop_cons(inst, sol, aprime, rng):
    if sol is not None:
        eligible = np.flatnonzero(sol.slack > 1e-6 * (1.0 + np.abs(inst.b)))
    else:
        k_guess = inst.m - inst.n if inst.m > inst.n else inst.m // 2
        eligible = np.asarray(heuristic_inactive(inst, k_guess), dtype=np.int64)
    frac = min(1.0, rng.uniform(0.0, aprime))
    k = int(frac * eligible.size)
    if k <= 0:
        return None
    drop = np.sort(rng.choice(eligible, size=k, replace=False))
    return _drop_constraints(inst, drop.tolist())


def _policy_add_cons(inst, aprime, rng):
    count = int(aprime * inst.m)
    if count <= 0 or inst.m == 0:
        return None
    weights = []
    take = min(3, inst.m)
    for _ in range(count):
        picked = rng.choice(inst.m, size=take, replace=False)
        raw = rng.random(take) + 1e-9
        w = np.zeros(inst.m)
        w[picked] = raw / raw.sum()
        weights.append(w)
    return add_constraints(inst, weights)


def _policy_add_var(inst, rng):
    if inst.kind is ProblemKind.LP:
        q_diag = 0.0
    else:
        trace = float(inst.q.vals[inst.q.rows == inst.q.cols].sum())
        q_diag = 1e-2 * trace / inst.n
    a_col = np.zeros(inst.m)
    if inst.m:
        picked = rng.choice(inst.m, size=min(3, inst.m), replace=False)
        a_col[picked] = -np.abs(rng.standard_normal(picked.size))
    c_new = -abs(rng.standard_normal())
    return add_variable_constrained(inst, q_diag=q_diag, a_col=a_col, c_new=c_new)


def apply_policy(
    inst: LcqpInstance, policy: AugmentPolicy, sol: Solution | None = None,
) -> tuple[LcqpInstance, Solution | None, list[TransformRecord]]:
    """Sample ops (probability proportional to strength, no replacement) and
    apply them in catalog order; deterministic given (seed, instance name)."""
    strengths = policy.strengths
    for op in _SOLUTION_DEPENDENT:
        if strengths.get(op, 0.0) > 0.0 and sol is None:
            raise InputError(f"op {op} requires a labeled instance")
    eligible = [op for op in CATALOG_ORDER if strengths.get(op, 0.0) > 0.0]
    records: list[TransformRecord] = []
    cur, cur_sol = inst, sol
    if not eligible:
        return cur, cur_sol, records
    sel = derive_rng(policy.seed, inst.name, "select")
    count = min(policy.ops_per_instance, len(eligible))
    w = np.array([strengths[op] for op in eligible])
    chosen_idx = sel.choice(len(eligible), size=count, replace=False, p=w / w.sum())
    chosen = {eligible[i] for i in chosen_idx}

    def advance(result):
        nonlocal cur, cur_sol
        if result is None:
            return
        cur, rec = result
        records.append(rec)
        if cur_sol is not None:
            cur_sol = map_solution(rec, cur, cur_sol)

    for op in CATALOG_ORDER:
        if op not in chosen:
            continue
        rng = derive_rng(policy.seed, inst.name, op)
        aprime = strengths[op] * rng.uniform() if policy.interpolate else strengths[op]
        if op == "drop-vars":
            advance(_policy_drop_vars(cur, cur_sol, aprime, rng))
        elif op == "drop-cons":
            advance(_policy_drop_cons(cur, cur_sol, aprime, rng))
        elif op == "scale-cons":
            advance(scale_constraints(cur, np.exp(rng.uniform(-aprime, aprime, size=cur.m))))
        elif op == "scale-vars":
            advance(scale_variables(cur, np.exp(rng.uniform(-aprime, aprime, size=cur.n))))
        elif op == "add-cons":
            advance(_policy_add_cons(cur, aprime, rng))
        elif op == "add-vars":
            for _ in range(int(aprime * cur.n)):
                advance(_policy_add_var(cur, rng))
    return cur, cur_sol, records
