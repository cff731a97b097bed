import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from witnesskit.certify import (PPT, U_TILDE2, CertSet, WitnessTuple, correlation_unitary,
                                fidelity_envelope, fidelity_point_feasible, in_unfaithful_approx,
                                in_wk, max_first_fidelity, noise_threshold, tuple_threshold,
                                tuple_threshold_sensitivity, zero_in_numerical_range)
from witnesskit.noise import NoisyFamily, pure_separable_threshold, pure_unfaithful_threshold
from witnesskit.qstate import (DensityMatrix, PureState, basis_product, ghz4, haar_random_pure,
                               maximally_entangled, random_mixed, schmidt_decompose)


def _table1_family(q1, d=4):
    phi1, phi2 = maximally_entangled(d), basis_product(0, 1, (d, d))
    return NoisyFamily(DensityMatrix.mixture([q1, 1 - q1], [phi1, phi2])), WitnessTuple([phi1, phi2])


def test_cert_set_names():
    assert CertSet("u2") == U_TILDE2
    assert str(U_TILDE2) == "U_tilde2" and str(PPT) == "PPT"
    with pytest.raises(ValueError):
        CertSet("SEP")


def test_ghz_thresholds():
    fam = NoisyFamily(ghz4().density())
    assert abs(noise_threshold(fam, PPT) - 8 / 9) < 1e-6
    assert abs(noise_threshold(fam, U_TILDE2) - 4 / 7) < 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_pure_qutrit_thresholds_match_closed_forms(seed):
    psi = haar_random_pure(3, seed=seed)
    fam = NoisyFamily(psi.density())
    s = schmidt_decompose(psi)
    assert abs(noise_threshold(fam, PPT) - pure_separable_threshold(s)) < 1e-6
    assert abs(noise_threshold(fam, U_TILDE2) - pure_unfaithful_threshold(s)) < 1e-6


def test_unfaithful_certificate_is_valid():
    rho = NoisyFamily(maximally_entangled(2).density()).at(0.7)
    cert = in_unfaithful_approx(rho)
    assert cert is not None
    assert min(cert.residuals(rho).values()) > -1e-7
    assert in_unfaithful_approx(maximally_entangled(2).density()) is None


def test_separable_states_are_inside_both_sets():
    rho = basis_product(0, 1, (2, 2)).density()
    fam = NoisyFamily(rho)
    assert noise_threshold(fam, PPT) == pytest.approx(0.0, abs=1e-7)
    assert noise_threshold(fam, U_TILDE2) == pytest.approx(0.0, abs=1e-7)


@pytest.mark.parametrize("q1,expected", [(0.4, 0.468484999675455), (0.5, 0.5714285714)])
def test_fixed_tuple_threshold(q1, expected):
    fam, tup = _table1_family(q1)
    assert abs(tuple_threshold(fam, tup) - expected) < 1e-6


def test_in_wk_agrees_with_threshold():
    fam, tup = _table1_family(0.4)
    t = tuple_threshold(fam, tup)
    assert not in_wk(fam.at(t - 0.02), tup)  # certified entangled
    assert in_wk(fam.at(min(1.0, t + 0.02)), tup)


@settings(max_examples=5)
@given(st.integers(0, 10_000))
def test_tuple_threshold_bounded_and_monotone_in_size(seed):
    rng = np.random.default_rng(seed)
    rho = random_mixed(3, 2, seed=rng)
    fam = NoisyFamily(rho)
    vals, vecs = np.linalg.eigh(rho.mat)
    psis = [PureState.from_vector(vecs[:, -1], 3), PureState.from_vector(vecs[:, -2], 3),
            haar_random_pure(3, seed=rng)]
    p_sep = noise_threshold(fam, PPT)
    prev = 0.0
    for k in range(1, 4):
        t = tuple_threshold(fam, WitnessTuple(psis[:k]))
        assert t <= p_sep + 1e-6
        assert t >= prev - 1e-6
        prev = t


@settings(max_examples=5)
@given(st.integers(0, 10_000))
def test_threshold_program_duality_gap(seed):
    from witnesskit import certify
    from witnesskit.sdp import solve

    rng = np.random.default_rng(seed)
    fam = NoisyFamily(random_mixed(2, 2, seed=rng))
    tup = WitnessTuple([haar_random_pure(2, seed=rng) for _ in range(2)])
    prog, p, *_ = certify._tuple_program(fam, tup)
    sol = solve(prog.build([(p, 1.0)]))
    if sol.ok:
        assert sol.gap <= 1e-8


def test_sensitivity_matches_finite_differences():
    fam, tup = _table1_family(0.3)
    rng = np.random.default_rng(1)
    psis = [PureState.from_vector(p.amps + 0.2 * rng.standard_normal(16), 4) for p in tup.psis]
    sens = tuple_threshold_sensitivity(fam, WitnessTuple(psis))
    h = 1e-5
    for i in range(2):
        for j in (0, 5):
            for unit, part in ((1.0, np.real), (1j, np.imag)):
                shifted = []
                for sign in (1, -1):
                    amps = [p.amps.copy() for p in psis]
                    amps[i][j] += sign * h * unit
                    # the program only sees normalized states; differentiate the raw amplitudes
                    shifted.append(tuple_threshold(fam, WitnessTuple(
                        [PureState(a / np.linalg.norm(a), p.dims) for a, p in zip(amps, psis)])))
                fd = (shifted[0] - shifted[1]) / (2 * h)
                g = sens.grads[i]
                # project the analytic gradient through the normalization
                a = psis[i].amps
                g_tan = g - a * np.real(np.vdot(a, g))
                assert abs(part(g_tan[j]) - fd) < 1e-4


def test_fidelity_corners_and_envelopes_for_orthogonal_maxent():
    phi = maximally_entangled(4)
    shift = np.roll(np.eye(4), 1, axis=0)
    psi2 = PureState.from_vector((phi.as_matrix() @ shift.T).ravel(), 4)
    assert fidelity_point_feasible([phi, psi2], [0.25, 0.25])
    assert fidelity_point_feasible([phi, psi2], [0.25, 0.0])
    assert not fidelity_point_feasible([phi, psi2], [0.3, 0.0])
    assert max_first_fidelity(phi) == pytest.approx(0.25, abs=1e-7)
    env = fidelity_envelope(phi, psi2, PPT, c_values=[0.0, 0.1, 0.25, 0.3])
    np.testing.assert_allclose(env.v[:3], 0.25, atol=1e-6)
    assert np.isnan(env.v[3]) and env.points[3].status == "infeasible"


def test_maxent_vs_product_envelope_endpoint():
    phi, prod = maximally_entangled(4), basis_product(0, 1, (4, 4))
    ppt = fidelity_envelope(phi, prod, PPT, grid_size=3)
    u2 = fidelity_envelope(phi, prod, U_TILDE2, grid_size=3)
    assert all(p.status == "optimal" for p in ppt.points + u2.points)
    assert ppt.v[0] == pytest.approx(1.0, abs=1e-6)
    assert ppt.v[-1] == pytest.approx(0.25, abs=1e-6)
    assert np.max(u2.v - ppt.v) > 0.01


def test_correlation_unitary_and_numerical_range():
    phi = maximally_entangled(3)
    u = np.diag([1, np.exp(2j * np.pi / 3), np.exp(4j * np.pi / 3)])
    psi2 = PureState.from_vector(np.kron(np.eye(3), u) @ phi.amps, 3)
    np.testing.assert_allclose(correlation_unitary(phi, psi2), u, atol=1e-10)
    assert zero_in_numerical_range(u)
    assert not zero_in_numerical_range(np.diag([1, np.exp(0.5j)]))
    with pytest.raises(ValueError):
        correlation_unitary(phi, basis_product(0, 0, (3, 3)))
