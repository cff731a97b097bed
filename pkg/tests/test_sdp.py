import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from witnesskit.sdp import (PsdBlock, SdpProblem, SdpStatus, hermitian_to_real_embedding,
                            restrict_to_face, solve)


def _hermitian(rng, n, cplx=True):
    a = rng.standard_normal((n, n)) + (1j * rng.standard_normal((n, n)) if cplx else 0)
    return (a + a.conj().T) / 2


def _max_eig_problem(h):
    # min t  s.t.  t I - H >= 0
    n = h.shape[0]
    return SdpProblem(np.array([1.0]), [PsdBlock(-h, np.eye(n)[None].astype(complex))])


@given(st.integers(0, 10_000), st.integers(2, 6), st.booleans())
def test_largest_eigenvalue_program(seed, n, cplx):
    h = _hermitian(np.random.default_rng(seed), n, cplx)
    sol = solve(_max_eig_problem(h))
    assert sol.status is SdpStatus.OPTIMAL
    assert np.isclose(sol.primal_objective, np.linalg.eigvalsh(h)[-1], atol=1e-7)
    assert sol.gap <= 1e-8


@given(st.integers(0, 10_000), st.integers(2, 5))
def test_trace_constrained_min_is_min_eigenvalue(seed, n):
    # min <C, X>  s.t. tr X = 1, X >= 0: variable X over a Hermitian basis
    rng = np.random.default_rng(seed)
    c = _hermitian(rng, n)
    basis = []
    for i in range(n):
        e = np.zeros((n, n), complex)
        e[i, i] = 1
        basis.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            for val in (1, 1j):
                e = np.zeros((n, n), complex)
                e[i, j], e[j, i] = val, np.conj(val)
                basis.append(e)
    basis = np.array(basis)
    cost = np.real(np.einsum("kij,ji->k", basis, c))
    a_eq = np.real(np.trace(basis, axis1=1, axis2=2))[None]
    prob = SdpProblem(cost, [PsdBlock(np.zeros((n, n), complex), basis)], a_eq, [1.0])
    sol = solve(prob)
    assert sol.status is SdpStatus.OPTIMAL
    assert np.isclose(sol.primal_objective, np.linalg.eigvalsh(c)[0], atol=1e-7)
    # duality gap and dual sign conventions: Z >= 0 and c = A'y + F*(Z)
    assert sol.gap <= 1e-8
    assert np.linalg.eigvalsh(sol.block_duals[0])[0] > -1e-8


def test_box_bounds_act_as_linear_constraints():
    # min -x1 - x2 with 0 <= x <= 1 and x1 + x2 = 1.5
    prob = SdpProblem(np.array([-1.0, -2.0]), [], np.array([[1.0, 1.0]]), [1.5],
                      lower=np.zeros(2), upper=np.ones(2))
    sol = solve(prob)
    assert sol.status is SdpStatus.OPTIMAL
    np.testing.assert_allclose(sol.x, [0.5, 1.0], atol=1e-7)


def test_infeasible_program_is_reported():
    # x >= 0 via a 1x1 block, and x = -1
    prob = SdpProblem(np.array([1.0]), [PsdBlock(np.zeros((1, 1)), np.ones((1, 1, 1)))],
                      np.array([[1.0]]), [-1.0])
    assert solve(prob).status is SdpStatus.INFEASIBLE


def test_inconsistent_equalities_are_infeasible():
    prob = SdpProblem(np.zeros(2), [], np.array([[1.0, 1.0], [1.0, 1.0]]), [0.0, 1.0])
    assert solve(prob).status is SdpStatus.INFEASIBLE


def test_feasibility_problem():
    prob = SdpProblem(np.zeros(1), [PsdBlock(np.eye(2), np.array([np.diag([1.0, -1.0])]))])
    sol = solve(prob)
    assert sol.status is SdpStatus.OPTIMAL
    assert abs(sol.x[0]) <= 1 + 1e-8


def test_problem_shape_validation():
    with pytest.raises(ValueError):
        SdpProblem(np.zeros(2), [PsdBlock(np.eye(2), np.zeros((1, 2, 2)))])
    with pytest.raises(ValueError):
        PsdBlock(np.array([[0, 1], [0, 0]]), np.zeros((1, 2, 2)))


def test_clarabel_backend_agrees():
    h = _hermitian(np.random.default_rng(5), 4)
    a = solve(_max_eig_problem(h))
    b = solve(_max_eig_problem(h), backend="clarabel")
    assert b.status is SdpStatus.OPTIMAL
    assert np.isclose(a.primal_objective, b.primal_objective, atol=1e-6)
    with pytest.raises(ValueError):
        solve(_max_eig_problem(h), backend="nope")


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_real_embedding_preserves_eigenvalues(seed, n):
    h = _hermitian(np.random.default_rng(seed), n)
    emb = hermitian_to_real_embedding(h)
    assert np.allclose(emb, emb.T)
    lam = np.linalg.eigvalsh(h)
    np.testing.assert_allclose(np.linalg.eigvalsh(emb), np.sort(np.repeat(lam, 2)), atol=1e-10)


def test_face_restriction_keeps_the_optimum():
    # max x  s.t. [[1 - x, 0], [0, x]] >= 0 touches the boundary at x = 1
    blk = PsdBlock(np.diag([1.0, 0.0]), np.array([np.diag([-1.0, 1.0])]))
    top = solve(SdpProblem(np.array([-1.0]), [blk]))
    assert top.status is SdpStatus.OPTIMAL and np.isclose(top.x[0], 1.0, atol=1e-7)
    face = restrict_to_face(SdpProblem(np.array([0.0]), [blk]), top.block_duals)
    assert face.a_eq.shape[0] == 1
    sol = solve(face)
    assert sol.status is SdpStatus.OPTIMAL and np.isclose(sol.x[0], 1.0, atol=1e-9)
