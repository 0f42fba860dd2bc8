"""Reference solvers used to label and verify instances.

solve_splitting is an operator-splitting (ADMM) method with a one-time sparse
factorization and an equality-system polish step; solve_enumeration checks
every candidate active set and is the ground-truth oracle at toy sizes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (
    Definiteness,
    InputError,
    KktReport,
    LcqpInstance,
    ProblemKind,
    Solution,
    kkt_residuals,
    objective,
    psd_certificate,
)


class Unbounded(RuntimeError):
    """The objective decreases without limit along a feasible ray."""


class InfeasibleOrUnbounded(RuntimeError):
    """Exhaustive enumeration found no optimal active set."""


class Unconverged(RuntimeError):
    """Iteration budget exhausted; carries the best iterate seen."""

    def __init__(self, message: str, best: Solution | None, report: KktReport | None):
        super().__init__(message)
        self.best = best
        self.report = report


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 50000
    penalty: float = 1.0
    polish: bool = True


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    polished: bool
    report: KktReport


_SIGMA = 1e-6
_RELAX = 1.6
_CHECK_EVERY = 25
_ACTIVE_SLACK_TOL = 1e-5
_CERT_TOL = 1e-5
_POLISH_REG = 1e-9
_RHO_MIN = 1e-6
_RHO_MAX = 1e6


def _kkt_equality_solve(kkt: np.ndarray, rhs: np.ndarray, n: int) -> np.ndarray | None:
    """Solve the (possibly singular) equality KKT system.

    A quasi-definite shift (+d on the primal block, -d on the dual block)
    makes the matrix nonsingular; two refinement steps against the unshifted
    system remove the perturbation to working precision.
    """
    reg = kkt.copy()
    diag = np.arange(kkt.shape[0])
    reg[diag, diag] += np.where(diag < n, _POLISH_REG, -_POLISH_REG)
    try:
        fac = scipy.linalg.lu_factor(reg, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        return None
    w = scipy.linalg.lu_solve(fac, rhs, check_finite=False)
    for _ in range(2):
        resid = rhs - kkt @ w
        w = w + scipy.linalg.lu_solve(fac, resid, check_finite=False)
    if not np.all(np.isfinite(w)):
        return None
    return w


def _polish(inst: LcqpInstance, q_dense, a_dense, x: np.ndarray, y: np.ndarray):
    """Re-solve the equality system on the estimated active set.

    Repair rounds add every violated row at once but retire negative duals
    one at a time, which avoids add/drop cycling.
    """
    n, m = inst.n, inst.m
    slack = inst.b - a_dense @ x
    near = slack <= _ACTIVE_SLACK_TOL * (1.0 + np.abs(inst.b))
    pushed = y > 1e-10 * (1.0 + np.abs(y).max() if m else 1.0)
    active = np.flatnonzero(near | pushed)
    b_scale = 1.0 + (np.abs(inst.b).max() if m else 0.0)
    lam_tol = 1e-9 * (1.0 + (np.abs(y).max() if m else 0.0))
    for _ in range(60):
        k = active.size
        kkt = np.zeros((n + k, n + k))
        kkt[:n, :n] = q_dense
        if k:
            kkt[:n, n:] = a_dense[active].T
            kkt[n:, :n] = a_dense[active]
        rhs = np.concatenate([-inst.c, inst.b[active]])
        sol = _kkt_equality_solve(kkt, rhs, n)
        if sol is None:
            return None
        xp = sol[:n]
        lam_act = sol[n:]
        viol = a_dense @ xp - inst.b
        grow = np.flatnonzero(viol > 1e-9 * b_scale)
        grow = np.setdiff1d(grow, active, assume_unique=False)
        if grow.size:
            active = np.unique(np.concatenate([active, grow]))
            continue
        if k and lam_act.min() < -lam_tol:
            active = np.delete(active, int(np.argmin(lam_act)))
            continue
        lam = np.zeros(m)
        if k:
            lam[active] = np.maximum(lam_act, 0.0)
        return Solution.from_primal_dual(inst, xp, lam)
    return None


def solve_splitting_detailed(
    inst: LcqpInstance, cfg: SolverConfig = SolverConfig()
) -> tuple[Solution, SolveStats]:
    """Solve and also report iteration count and whether polish produced the
    returned point."""
    if cfg.tol <= 0 or cfg.max_iter < 1 or cfg.penalty <= 0:
        raise InputError("tol and penalty must be positive, max_iter >= 1")
    if inst.kind is ProblemKind.QP:
        if psd_certificate(inst.q) is Definiteness.INDEFINITE:
            raise InputError("quadratic term must be positive semidefinite")
    n, m = inst.n, inst.m
    q_csr = inst.q.csr
    a_csr = inst.a.csr
    b, c = inst.b, inst.c
    q_dense = inst.q.to_dense()
    rho = cfg.penalty

    def factor(r):
        kkt = sp.bmat(
            [
                [q_csr + _SIGMA * sp.identity(n), a_csr.T if m else None],
                [a_csr if m else None, -sp.identity(m) / r if m else None],
            ],
            format="csc",
        )
        return spla.splu(kkt)

    lu = factor(rho)
    a_dense = inst.a.to_dense()
    x = np.zeros(n)
    z = np.zeros(m)
    y = np.zeros(m)
    x_prev_probe = x.copy()
    cert_hits = 0
    best_xy: tuple[np.ndarray, np.ndarray] | None = None
    best_max = np.inf
    last_polish_at = np.inf
    c_scale = 1.0 + (np.abs(c).max() if n else 0.0)
    b_scale = 1.0 + (np.abs(b).max() if m else 0.0)

    def residual_max(xv, yv) -> float:
        stat = np.abs(q_csr @ xv + a_csr.T @ yv + c).max() / c_scale if n else 0.0
        ax = a_csr @ xv
        resid = ax - b
        prim = max(0.0, resid.max() / b_scale) if m else 0.0
        compl = np.abs(yv * resid).max() if m else 0.0
        return max(stat, prim, compl)  # yv >= 0 by construction

    def as_solution(xv, yv) -> Solution:
        return Solution.from_primal_dual(inst, xv, np.maximum(yv, 0.0))

    it = 0
    while it < cfg.max_iter:
        it += 1
        rhs = np.concatenate([_SIGMA * x - c, z - y / rho])
        w = lu.solve(rhs)
        xt = w[:n]
        nu = w[n:]
        zt = z + (nu - y) / rho
        x = _RELAX * xt + (1.0 - _RELAX) * x
        u = _RELAX * zt + (1.0 - _RELAX) * z + y / rho
        z = np.minimum(u, b)
        y = rho * (u - z)

        if it % _CHECK_EVERY == 0 or it == cfg.max_iter:
            cur_max = residual_max(x, y)
            if cur_max < best_max:
                best_max = cur_max
                best_xy = (x.copy(), y.copy())
            if cur_max <= cfg.tol:
                sol = as_solution(x, y)
                return sol, SolveStats(it, False, kkt_residuals(inst, sol, relative=True))
            want_polish = cur_max < 0.31 * last_polish_at or it % 2500 == 0
            if cfg.polish and want_polish:
                last_polish_at = min(last_polish_at, cur_max)
                pol = _polish(inst, q_dense, a_dense, x, y)
                if pol is not None:
                    prep = kkt_residuals(inst, pol, relative=True)
                    if prep.max_residual <= cfg.tol:
                        return pol, SolveStats(it, True, prep)
                    if prep.max_residual < best_max:
                        best_max = prep.max_residual
                        best_xy = (pol.x.copy(), pol.lam.copy())
            # certificate of a descent ray: direction with Q d ~ 0, c'd < 0,
            # A d <= 0 means the problem is unbounded below
            delta = x - x_prev_probe
            x_prev_probe = x.copy()
            nd = np.abs(delta).max() if n else 0.0
            if nd > 1e-12:
                d = delta / nd
                ray = (
                    np.abs(q_csr @ d).max(initial=0.0) <= _CERT_TOL
                    and c @ d <= -_CERT_TOL
                    and (a_csr @ d).max(initial=-np.inf) <= _CERT_TOL
                )
                cert_hits = cert_hits + 1 if ray else 0
                if cert_hits >= 2:
                    raise Unbounded("descent ray certificate found")
            if c @ x + 0.5 * (x @ (q_csr @ x)) < -1e12:
                raise Unbounded("objective diverged below -1e12")
            # rebalance the penalty toward equal primal/dual progress
            if m and it % 100 == 0:
                prim = np.abs(a_csr @ x - z).max() / b_scale
                dual = np.abs(q_csr @ x + a_csr.T @ y + c).max() / c_scale
                if prim > 1e-14 and dual > 1e-14:
                    new_rho = float(np.clip(rho * np.sqrt(prim / dual), _RHO_MIN, _RHO_MAX))
                    if new_rho > 5.0 * rho or new_rho < rho / 5.0:
                        rho = new_rho
                        lu = factor(rho)

    if cfg.polish:
        pol = _polish(inst, q_dense, a_dense, x, y)
        if pol is not None:
            prep = kkt_residuals(inst, pol, relative=True)
            if prep.max_residual < best_max:
                best_max = prep.max_residual
                best_xy = (pol.x.copy(), pol.lam.copy())
    if best_xy is not None and best_max <= 10.0 * cfg.tol:
        sol = as_solution(*best_xy)
        return sol, SolveStats(cfg.max_iter, True, kkt_residuals(inst, sol, relative=True))
    best_sol = as_solution(*best_xy) if best_xy is not None else None
    raise Unconverged(
        f"no solution within {10.0 * cfg.tol:g} after {cfg.max_iter} iterations",
        best_sol,
        kkt_residuals(inst, best_sol, relative=True) if best_sol is not None else None,
    )


def solve_splitting(inst: LcqpInstance, cfg: SolverConfig = SolverConfig()) -> Solution:
    sol, _ = solve_splitting_detailed(inst, cfg)
    return sol


@dataclass(frozen=True)
class Candidate:
    active_set: tuple[int, ...]
    x: np.ndarray
    lam: np.ndarray
    objective: float


_ENUM_MAX_ROWS = 20
_ENUM_MAX_COLS = 10


def enumerate_candidates(inst: LcqpInstance, tol: float = 1e-9):
    """Yield every active set whose equality system has a consistent,
    feasible, dual-nonnegative solution."""
    if inst.m > _ENUM_MAX_ROWS or inst.n > _ENUM_MAX_COLS:
        raise InputError(
            f"enumeration limited to m <= {_ENUM_MAX_ROWS}, n <= {_ENUM_MAX_COLS}"
        )
    n, m = inst.n, inst.m
    q = inst.q.to_dense()
    a = inst.a.to_dense()
    b, c = inst.b, inst.c
    b_scale = 1.0 + (np.abs(b).max() if m else 0.0)
    for k in range(min(n, m) + 1):
        for subset in itertools.combinations(range(m), k):
            s = list(subset)
            kkt = np.zeros((n + k, n + k))
            kkt[:n, :n] = q
            if k:
                kkt[:n, n:] = a[s].T
                kkt[n:, :n] = a[s]
            rhs = np.concatenate([-c, b[s]])
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            if np.abs(kkt @ sol - rhs).max() > tol * (1.0 + np.abs(rhs).max()):
                continue
            x = sol[:n]
            lam_s = sol[n:]
            if k and lam_s.min() < -tol:
                continue
            if m and (a @ x - b).max() > tol * b_scale:
                continue
            lam = np.zeros(m)
            if k:
                lam[s] = np.maximum(lam_s, 0.0)
            yield Candidate(subset, x, lam, objective(inst, x))


def solve_enumeration(inst: LcqpInstance) -> Solution:
    """Exhaustive oracle; ties on the objective go to the lexicographically
    smallest active set."""
    best: Candidate | None = None
    for cand in enumerate_candidates(inst):
        if best is None:
            best = cand
            continue
        tie = 1e-9 * (1.0 + abs(best.objective))
        if cand.objective < best.objective - tie:
            best = cand
        elif abs(cand.objective - best.objective) <= tie and cand.active_set < best.active_set:
            best = cand
    if best is None:
        raise InfeasibleOrUnbounded("no active set yields an optimal point")
    return Solution.from_primal_dual(inst, best.x, best.lam)
