"""Global noise channels and closed-form thresholds for noisy pure states."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .qstate import DensityMatrix, PureState, SchmidtDecomposition, dephase, fidelity, schmidt_decompose


class NoiseModel(str, enum.Enum):
    DEPOLARIZING = "depolarizing"
    DEPHASING = "dephasing"


@dataclass(frozen=True, eq=False)
class NoisyFamily:
    """The segment ``rho(p) = (1 - p) base + p target`` for ``p`` in ``[0, 1]``."""

    base: DensityMatrix
    model: NoiseModel = NoiseModel.DEPOLARIZING

    def __post_init__(self):
        object.__setattr__(self, "model", NoiseModel(self.model))

    @property
    def dims(self):
        return self.base.dims

    def target(self) -> np.ndarray:
        """The state reached at ``p = 1``."""
        if self.model is NoiseModel.DEPOLARIZING:
            n = self.base.dims.total
            return np.eye(n, dtype=complex) / n
        return dephase(self.base).mat

    def direction(self) -> np.ndarray:
        """``d rho(p) / dp``; the family is ``base + p * direction``."""
        return self.target() - self.base.mat

    def at(self, p: float) -> DensityMatrix:
        return apply_noise(self, p)


def apply_noise(family: NoisyFamily, p: float) -> DensityMatrix:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise strength must lie in [0, 1], got {p}")
    if p == 0.0:
        return family.base
    mat = p * family.target() + (1.0 - p) * family.base.mat
    return DensityMatrix(0.5 * (mat + mat.conj().T), family.base.dims)


def _local_dim(schmidt: SchmidtDecomposition, d) -> int:
    if d is None:
        if schmidt.dims.d_a != schmidt.dims.d_b:
            raise ValueError("closed-form thresholds need equal local dimensions")
        return schmidt.dims.d_a
    return int(d)


def pure_unfaithful_threshold(schmidt: SchmidtDecomposition, d: int = None) -> float:
    """Depolarizing strength above which ``|psi>`` becomes unfaithful.

    Product states are unfaithful at every ``p`` and return 0.
    """
    d = _local_dim(schmidt, d)
    s2 = float(np.sum(schmidt.coeffs)) ** 2
    if s2 <= 1.0 + 1e-14:
        return 0.0
    return max(0.0, (d * s2 - d) / (d * s2 - 1.0))


def pure_separable_threshold(schmidt: SchmidtDecomposition, d: int = None) -> float:
    """Depolarizing strength above which ``|psi>`` becomes separable."""
    d = _local_dim(schmidt, d)
    s = schmidt.coeffs
    s12 = float(s[0] * s[1]) if s.size > 1 else 0.0
    return d * d * s12 / (1.0 + d * d * s12)


def classic_witness_value(rho: DensityMatrix, psi: PureState) -> float:
    """``Tr(rho E)`` for ``E = s_1^2 I - |psi><psi|``; negative means entangled."""
    s1 = schmidt_decompose(psi).coeffs[0]
    return float(s1**2) - fidelity(rho, psi)


def _witness_objective(theta: np.ndarray, rho: DensityMatrix) -> float:
    n = rho.dims.total
    vec = theta[:n] + 1j * theta[n:]
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return 1.0
    vec = vec / norm
    s1 = np.linalg.svd(vec.reshape(rho.dims.d_a, rho.dims.d_b), compute_uv=False)[0]
    return float(s1**2 - np.real(np.vdot(vec, rho.mat @ vec)))


def faithful_witness(rho: DensityMatrix, starts: int = 6, seed=0, margin: float = 1e-7):
    """A pure state whose classic witness detects ``rho``, or ``None``.

    Runs local searches from the leading eigenvectors of ``rho`` and random
    points.  A returned state is a certificate of faithfulness
    (``classic_witness_value < -margin``); ``None`` is inconclusive.
    """
    from scipy.optimize import minimize

    n = rho.dims.total
    rng = np.random.default_rng(seed)
    vals, vecs = np.linalg.eigh(rho.mat)
    inits = [vecs[:, -1 - i] for i in range(min(2, n))]
    inits += [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(max(0, starts - len(inits)))]
    for v0 in inits:
        res = minimize(_witness_objective, np.concatenate([v0.real, v0.imag]), args=(rho,), method="BFGS")
        vec = res.x[:n] + 1j * res.x[n:]
        if np.linalg.norm(vec) < 1e-12:
            continue
        psi = PureState.from_vector(vec, rho.dims)
        if classic_witness_value(rho, psi) < -margin:
            return psi
    return None
