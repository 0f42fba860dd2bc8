"""Shared fixtures: the two hand-checked instances used throughout the suite.

E1 is a 2-variable QP whose optimum sits on the first constraint; E2 has one
variable pinned at zero by an active bound.  Both optima were verified by hand
against the first-order conditions and by exhaustive active-set enumeration.
"""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qpaug import LcqpInstance, ProblemKind, Solution, SparseMatrix

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def make_instance(q, a, b, c, kind=ProblemKind.QP, name=""):
    return LcqpInstance(
        q=SparseMatrix.from_dense(np.asarray(q, dtype=float)),
        a=SparseMatrix.from_dense(np.asarray(a, dtype=float)),
        b=np.asarray(b, dtype=float),
        c=np.asarray(c, dtype=float),
        kind=kind,
        name=name,
    )


@pytest.fixture
def e1():
    # min x'x - 2(x1+x2)  s.t.  x1+x2 <= 1, x >= 0; optimum (0.5, 0.5)
    return make_instance(
        q=[[2.0, 0.0], [0.0, 2.0]],
        a=[[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
        b=[1.0, 0.0, 0.0],
        c=[-2.0, -2.0],
        name="e1",
    )


@pytest.fixture
def e1_sol(e1):
    return Solution.from_primal_dual(e1, np.array([0.5, 0.5]), np.array([1.0, 0.0, 0.0]))


@pytest.fixture
def e2():
    # min 0.5 x'x - x1 + x2  s.t.  x >= 0; optimum (1, 0) with the second
    # bound active at dual 1
    return make_instance(
        q=[[1.0, 0.0], [0.0, 1.0]],
        a=[[-1.0, 0.0], [0.0, -1.0]],
        b=[0.0, 0.0],
        c=[-1.0, 1.0],
        name="e2",
    )


@pytest.fixture
def e2_sol(e2):
    return Solution.from_primal_dual(e2, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
