"""Problem types, residual checks, and the definiteness certificate."""
import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from qpaug import (
    Definiteness,
    InputError,
    LcqpInstance,
    ProblemKind,
    Solution,
    SparseMatrix,
    kkt_residuals,
    objective,
    partition_constraints,
    permute_instance,
    psd_certificate,
)

from conftest import make_instance


# ---------------------------------------------------------------- SparseMatrix

def test_sparse_canonical_order_and_zero_drop():
    m = SparseMatrix(2, 2, rows=[1, 0, 0], cols=[0, 1, 0], vals=[3.0, 2.0, 0.0])
    assert m.nnz == 2
    assert m.rows.tolist() == [0, 1]
    assert m.cols.tolist() == [1, 0]
    assert m.vals.tolist() == [2.0, 3.0]


def test_sparse_duplicate_entry_rejected():
    with pytest.raises(InputError):
        SparseMatrix(2, 2, rows=[0, 0], cols=[1, 1], vals=[1.0, 2.0])


def test_sparse_index_out_of_range():
    with pytest.raises(InputError):
        SparseMatrix(2, 2, rows=[2], cols=[0], vals=[1.0])
    with pytest.raises(InputError):
        SparseMatrix(2, 2, rows=[0], cols=[-1], vals=[1.0])


def test_sparse_nonfinite_rejected():
    with pytest.raises(InputError):
        SparseMatrix(1, 1, rows=[0], cols=[0], vals=[np.nan])


def test_sparse_dense_round_trip():
    dense = np.array([[0.0, 1.5], [-2.0, 0.0], [0.0, 3.0]])
    m = SparseMatrix.from_dense(dense)
    assert m.shape == (3, 2)
    assert np.array_equal(m.to_dense(), dense)


def test_sparse_from_scipy_sums_duplicates():
    coo = sp.coo_matrix(([1.0, 2.0], ([0, 0], [0, 0])), shape=(1, 1))
    m = SparseMatrix.from_scipy(coo)
    assert m.nnz == 1
    assert m.vals[0] == 3.0


def test_sparse_equality_ignores_representation_history():
    a = SparseMatrix(2, 2, rows=[0, 1], cols=[1, 0], vals=[1.0, 2.0])
    b = SparseMatrix(2, 2, rows=[1, 0], cols=[0, 1], vals=[2.0, 1.0])
    assert a == b
    assert a != SparseMatrix.zeros(2, 2)


def test_sparse_matvec_row_norms():
    m = SparseMatrix.from_dense([[3.0, 4.0], [0.0, 1.0]])
    assert np.allclose(m.matvec([1.0, 1.0]), [7.0, 1.0])
    assert np.allclose(m.rmatvec([1.0, 0.0]), [3.0, 4.0])
    assert np.allclose(m.row_norms(), [5.0, 1.0])


def test_sparse_symmetry_detects_value_mismatch():
    assert SparseMatrix.from_dense([[1.0, 2.0], [2.0, 1.0]]).is_symmetric()
    assert not SparseMatrix.from_dense([[1.0, 2.0], [3.0, 1.0]]).is_symmetric()
    assert not SparseMatrix.from_dense([[1.0, 2.0]]).is_symmetric()


@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 1000))
def test_sparse_dense_round_trip_random(n_rows, n_cols, seed):
    rng = np.random.default_rng(seed)
    dense = rng.standard_normal((n_rows, n_cols)) * (rng.random((n_rows, n_cols)) < 0.4)
    m = SparseMatrix.from_dense(dense)
    assert np.array_equal(m.to_dense(), dense)
    assert m.nnz == np.count_nonzero(dense)


# ---------------------------------------------------------------- LcqpInstance

def test_instance_validation_errors():
    q = SparseMatrix.zeros(2, 2)
    a = SparseMatrix.from_dense([[1.0, 1.0]])
    with pytest.raises(InputError):
        LcqpInstance(q=q, a=a, b=[1.0, 2.0], c=[0.0, 0.0], kind=ProblemKind.LP)
    with pytest.raises(InputError):
        LcqpInstance(q=q, a=SparseMatrix.zeros(1, 3), b=[1.0], c=[0.0, 0.0], kind=ProblemKind.LP)
    asym = SparseMatrix(2, 2, rows=[0], cols=[1], vals=[1.0])
    with pytest.raises(InputError):
        LcqpInstance(q=asym, a=a, b=[1.0], c=[0.0, 0.0], kind=ProblemKind.QP)


def test_lp_requires_empty_quadratic():
    q = SparseMatrix.from_dense([[1.0]])
    a = SparseMatrix.from_dense([[1.0]])
    with pytest.raises(InputError):
        LcqpInstance(q=q, a=a, b=[1.0], c=[0.0], kind=ProblemKind.LP)


def test_instance_data_equal_ignores_name(e1):
    other = LcqpInstance(q=e1.q, a=e1.a, b=e1.b, c=e1.c, kind=e1.kind, name="else")
    assert e1.data_equal(other)
    assert not e1.data_equal(
        LcqpInstance(q=e1.q, a=e1.a, b=e1.b + 1.0, c=e1.c, kind=e1.kind)
    )


def test_solution_rejects_negative_duals(e1):
    with pytest.raises(InputError):
        Solution.from_primal_dual(e1, np.zeros(2), np.array([-1.0, 0.0, 0.0]))


def test_solution_arrays_frozen(e1, e1_sol):
    with pytest.raises(ValueError):
        e1_sol.x[0] = 2.0


# ------------------------------------------------------------------- objective

def test_objective_e1(e1):
    assert objective(e1, np.array([0.5, 0.5])) == pytest.approx(-1.5, abs=1e-15)


def test_objective_zero_vector():
    inst = make_instance([[0.0, 0.0], [0.0, 0.0]], [[1.0, 1.0]], [1.0], [1.0, 1.0], kind=ProblemKind.LP)
    assert objective(inst, np.zeros(2)) == 0.0


def test_objective_one_var():
    inst = make_instance([[1.0]], [[1.0]], [5.0], [0.0])
    assert objective(inst, np.array([3.0])) == pytest.approx(4.5, abs=1e-15)


@given(st.integers(0, 500))
def test_objective_matches_dense_reference(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    h = rng.standard_normal((n, n))
    q = h @ h.T
    q = (q + q.T) / 2
    c = rng.standard_normal(n)
    x = rng.standard_normal(n)
    inst = make_instance(q, np.zeros((1, n)), [1.0], c)
    ref = 0.5 * x @ q @ x + c @ x
    assert objective(inst, x) == pytest.approx(ref, rel=1e-12, abs=1e-12)


# --------------------------------------------------------------- kkt_residuals

def test_kkt_residuals_e1_optimum(e1, e1_sol):
    rep = kkt_residuals(e1, e1_sol)
    assert rep.max_residual <= 1e-12


def test_kkt_residuals_origin_with_slack():
    inst = make_instance([[1.0]], [[1.0]], [1.0], [0.0])
    sol = Solution.from_primal_dual(inst, np.zeros(1), np.zeros(1))
    rep = kkt_residuals(inst, sol)
    assert rep.max_residual == 0.0


def test_kkt_residuals_primal_violation(e1):
    sol = Solution.from_primal_dual(e1, np.array([1.0, 1.0]), np.zeros(3))
    rep = kkt_residuals(e1, sol)
    assert rep.primal_violation == pytest.approx(1.0, abs=1e-15)


def test_kkt_residuals_relative_scaling(e1):
    sol = Solution.from_primal_dual(e1, np.array([1.0, 1.0]), np.zeros(3))
    raw = kkt_residuals(e1, sol, relative=False)
    rel = kkt_residuals(e1, sol, relative=True)
    assert rel.primal_violation == pytest.approx(raw.primal_violation / (1.0 + 1.0))
    assert rel.stationarity_inf_norm == pytest.approx(raw.stationarity_inf_norm / (1.0 + 2.0))
    # dual and complementarity stay absolute
    assert rel.dual_violation == raw.dual_violation
    assert rel.complementarity == raw.complementarity


def test_kkt_report_max_residual():
    from qpaug import KktReport

    rep = KktReport(1e-3, 2e-3, 0.0, 5e-4, relative=False)
    assert rep.max_residual == 2e-3


def test_kkt_residuals_raw_matches_checked(e1, e1_sol):
    from qpaug import kkt_residuals_raw

    checked = kkt_residuals(e1, e1_sol, relative=True)
    raw = kkt_residuals_raw(e1, e1_sol.x, e1_sol.lam, relative=True)
    assert raw == checked


def test_kkt_residuals_raw_scores_negative_duals(e1, e1_sol):
    from qpaug import kkt_residuals_raw

    lam_bad = e1_sol.lam.copy()
    lam_bad[0] = -lam_bad[0]
    rep = kkt_residuals_raw(e1, e1_sol.x, lam_bad)
    assert rep.dual_violation == 1.0
    with pytest.raises(InputError):
        kkt_residuals_raw(e1, e1_sol.x, lam_bad[:-1])


# ------------------------------------------------------- partition_constraints

def test_partition_e1(e1, e1_sol):
    part = partition_constraints(e1, e1_sol, tol=1e-6)
    assert part.active == (0,)
    assert part.inactive == (1, 2)


def test_partition_all_inactive():
    inst = make_instance([[1.0]], [[1.0]], [5.0], [0.0])
    sol = Solution.from_primal_dual(inst, np.zeros(1), np.zeros(1))
    part = partition_constraints(inst, sol, tol=1e-6)
    assert part.active == ()
    assert part.inactive == (0,)


def test_partition_exact_equality_is_active():
    inst = make_instance([[1.0]], [[1.0], [1.0]], [2.0, 2.0], [-2.0])
    sol = Solution.from_primal_dual(inst, np.array([2.0]), np.array([0.0, 0.0]))
    part = partition_constraints(inst, sol, tol=1e-6)
    assert part.active == (0, 1)


@given(st.integers(0, 200))
def test_partition_invariant_under_row_permutation(seed):
    rng = np.random.default_rng(seed)
    n, m = 3, 6
    a = rng.standard_normal((m, n))
    x = rng.standard_normal(n)
    b = a @ x + rng.choice([0.0, 1.0], size=m)
    inst = make_instance(np.eye(n), a, b, -x)
    sol = Solution.from_primal_dual(inst, x, np.zeros(m))
    perm = rng.permutation(m)
    pinst = permute_instance(inst, np.arange(n), perm)
    psol = Solution.from_primal_dual(pinst, x, np.zeros(m))
    base = partition_constraints(inst, sol, tol=1e-6)
    mapped = partition_constraints(pinst, psol, tol=1e-6)
    assert sorted(perm[list(base.active)].tolist()) == list(mapped.active)


# ------------------------------------------------------------- psd_certificate

def test_psd_certificate_pd():
    assert psd_certificate(SparseMatrix.from_dense(2 * np.eye(2))) is Definiteness.PD


def test_psd_certificate_psd_rank_one():
    q = SparseMatrix.from_dense([[1.0, 1.0], [1.0, 1.0]])
    assert psd_certificate(q) is Definiteness.PSD


def test_psd_certificate_indefinite():
    q = SparseMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
    assert psd_certificate(q) is Definiteness.INDEFINITE


def test_psd_certificate_zero_matrix_is_psd():
    assert psd_certificate(SparseMatrix.zeros(3, 3)) is Definiteness.PSD


def test_psd_certificate_rejects_asymmetric():
    with pytest.raises(InputError):
        psd_certificate(SparseMatrix.from_dense([[1.0, 2.0], [0.0, 1.0]]))


@given(st.integers(0, 300))
def test_psd_certificate_gram_matrices(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    r = int(rng.integers(1, n + 1))
    g = rng.standard_normal((n, r))
    q = g @ g.T
    q = (q + q.T) / 2
    verdict = psd_certificate(SparseMatrix.from_dense(q))
    assert verdict in (Definiteness.PD, Definiteness.PSD)
    if r < n:
        assert verdict is Definiteness.PSD


@given(st.integers(0, 300))
def test_psd_certificate_shifted_negative(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    g = rng.standard_normal((n, n))
    q = g @ g.T
    q = (q + q.T) / 2
    shift = float(np.linalg.eigvalsh(q).max()) + 1.0
    ind = q.copy()
    ind[0, 0] -= shift
    assert psd_certificate(SparseMatrix.from_dense((ind + ind.T) / 2)) is Definiteness.INDEFINITE


# ------------------------------------------------------------ permute_instance

def test_permute_round_trip(e1):
    var_perm = np.array([1, 0])
    con_perm = np.array([2, 0, 1])
    p = permute_instance(e1, var_perm, con_perm)
    inv_var = np.argsort(var_perm)
    inv_con = np.argsort(con_perm)
    back = permute_instance(p, inv_var, inv_con)
    assert back.data_equal(e1)


def test_permute_preserves_objective(e1, e1_sol):
    var_perm = np.array([1, 0])
    p = permute_instance(e1, var_perm, np.arange(3))
    x_new = np.empty(2)
    x_new[var_perm] = e1_sol.x
    assert objective(p, x_new) == pytest.approx(e1_sol.objective, abs=1e-15)


def test_permute_rejects_non_permutation(e1):
    with pytest.raises(InputError):
        permute_instance(e1, np.array([0, 0]), np.arange(3))
