import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from witnesskit.qstate import (BipartiteDims, DensityMatrix, HermitianMatrix, PureState, as_dims,
                               basis_product, dephase, eigenstates, fidelity, ghz4, haar_random_pure,
                               haar_unitary, heisenberg_xy, is_ppt, maximally_entangled,
                               partial_transpose, partial_transpose_matrix, random_mixed,
                               schmidt_decompose)

dims_strategy = st.tuples(st.integers(2, 4), st.integers(2, 4))
seeds = st.integers(0, 2**31 - 1)


def test_dims_validation():
    assert as_dims(3) == BipartiteDims(3, 3)
    assert as_dims((2, 3)).total == 6
    with pytest.raises(ValueError):
        BipartiteDims(1, 3)


def test_pure_state_normalizes_and_rejects_zero():
    psi = PureState.from_vector([1, 1, 0, 0], (2, 2))
    assert np.isclose(np.linalg.norm(psi.amps), 1.0)
    with pytest.raises(ValueError):
        PureState.from_vector(np.zeros(4), (2, 2))


def test_density_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(4), (2, 2))  # trace 4
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5, 0, 0]), (2, 2))
    with pytest.raises(ValueError):
        HermitianMatrix(np.array([[0, 1], [0, 0]]))


def test_partial_transpose_of_bell_state():
    # PT of |phi+><phi+| is the swap operator over 2: one eigenvalue -1/2
    rho = maximally_entangled(2).density()
    vals = partial_transpose(rho).eigvalsh()
    np.testing.assert_allclose(vals, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)
    assert not is_ppt(rho)
    assert is_ppt(basis_product(0, 1, (2, 2)).density())


def test_ghz_split_and_maxent_schmidt():
    s = schmidt_decompose(ghz4())
    np.testing.assert_allclose(s.coeffs[:2], [2**-0.5] * 2)
    assert s.schmidt_rank == 2
    s = schmidt_decompose(maximally_entangled(3))
    np.testing.assert_allclose(s.coeffs, [3**-0.5] * 3)


@given(dims_strategy, seeds)
def test_partial_transpose_is_an_involution(dims, seed):
    rho = random_mixed(dims, seed=seed)
    twice = partial_transpose_matrix(partial_transpose_matrix(rho.mat, dims), dims)
    np.testing.assert_allclose(twice, rho.mat, atol=1e-14)


@given(dims_strategy, seeds)
def test_partial_transpose_preserves_trace_and_hermiticity(dims, seed):
    pt = partial_transpose_matrix(random_mixed(dims, seed=seed).mat, dims)
    assert np.isclose(np.trace(pt), 1.0)
    np.testing.assert_allclose(pt, pt.conj().T, atol=1e-14)


@given(dims_strategy, seeds)
def test_schmidt_reconstruction(dims, seed):
    psi = haar_random_pure(dims, seed=seed)
    s = schmidt_decompose(psi)
    np.testing.assert_allclose(s.reconstruct(), psi.amps, atol=1e-12)
    assert np.isclose(np.sum(s.coeffs**2), 1.0)
    assert np.all(np.diff(s.coeffs) <= 1e-15)


@given(dims_strategy, seeds)
def test_product_states_are_ppt_with_rank_one_schmidt(dims, seed):
    a = haar_random_pure((dims[0], 2), seed=seed).amps[: dims[0]]
    b = haar_random_pure((dims[1], 2), seed=seed + 1).amps[: dims[1]]
    psi = PureState.from_vector(np.kron(a, b), dims)
    assert schmidt_decompose(psi).schmidt_rank == 1
    assert is_ppt(psi.density())


@given(st.integers(2, 4), seeds, st.sampled_from(["hilbert-schmidt", "bures"]), st.data())
def test_random_mixed_is_a_state_of_requested_rank(d, seed, measure, data):
    rank = data.draw(st.integers(1, d * d))
    rho = random_mixed((d, d), rank, measure, seed=seed)
    assert rho.rank(1e-10) == rank
    assert rho.eigvalsh()[0] > -1e-12


def test_random_ensembles_are_seed_deterministic():
    np.testing.assert_array_equal(random_mixed(3, 4, "bures", seed=[1, 2]).mat,
                                  random_mixed(3, 4, "bures", seed=[1, 2]).mat)
    assert not np.allclose(haar_random_pure(3, seed=1).amps, haar_random_pure(3, seed=2).amps)
    u = haar_unitary(5, 7)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(5), atol=1e-12)


def test_haar_pure_fidelity_mean():
    # E |<0|psi>|^2 = 1/n for Haar-random psi
    ref = basis_product(0, 0, (2, 2)).density()
    vals = [fidelity(ref, haar_random_pure((2, 2), seed=i)) for i in range(4000)]
    assert abs(np.mean(vals) - 0.25) < 0.01


def test_dephase_keeps_diagonal():
    rho = random_mixed(2, seed=3)
    out = dephase(rho)
    np.testing.assert_allclose(np.diag(out.mat), np.diag(rho.mat))
    assert np.count_nonzero(out.mat - np.diag(np.diag(out.mat))) == 0


def test_xy_chain_spectrum_and_symmetry():
    ham = heisenberg_xy(4)
    assert ham.mat.shape == (16, 16)
    # the parity operator prod sigma_z commutes with the XY Hamiltonian
    parity = np.diag([(-1) ** bin(i).count("1") for i in range(16)])
    np.testing.assert_allclose(parity @ ham.mat, ham.mat @ parity, atol=1e-12)
    pairs = eigenstates(ham, 2)
    assert pairs[0][0] <= pairs[1][0]
    assert pairs[0][1].dims == BipartiteDims(4, 4)
    np.testing.assert_allclose(ham.mat @ pairs[0][1].amps, pairs[0][0] * pairs[0][1].amps, atol=1e-10)


def test_two_site_xy_matches_hand_diagonalization():
    # n = 2 periodic doubles the single bond; with gamma = 0 and h = 0 the
    # spectrum of -2 J (XX + YY)/2 is {-2, 0, 0, 2}
    vals = heisenberg_xy(2, j=1.0, gamma=0.0, h=0.0).eigvalsh()
    np.testing.assert_allclose(vals, [-2, 0, 0, 2], atol=1e-12)
