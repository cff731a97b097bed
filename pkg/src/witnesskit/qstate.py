"""Bipartite state containers, linear-algebra primitives and state factories.

Basis labels are 0-based throughout: the ket written ``|12>`` in 1-based
notation is ``basis_product(0, 1, dims)`` here.  Schmidt coefficients are
amplitudes (their squares sum to one), not probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-9
NORM_TOL = 1e-12


@dataclass(frozen=True)
class BipartiteDims:
    d_a: int
    d_b: int

    def __post_init__(self):
        if int(self.d_a) != self.d_a or int(self.d_b) != self.d_b:
            raise ValueError("local dimensions must be integers")
        if self.d_a < 2 or self.d_b < 2:
            raise ValueError(f"local dimensions must be >= 2, got ({self.d_a}, {self.d_b})")

    @property
    def total(self) -> int:
        return self.d_a * self.d_b

    def as_tuple(self) -> Tuple[int, int]:
        return (self.d_a, self.d_b)


DimsLike = Union[BipartiteDims, Tuple[int, int], int]


def as_dims(dims: DimsLike) -> BipartiteDims:
    """Coerce ``d``, ``(d_a, d_b)`` or a :class:`BipartiteDims` to dims."""
    if isinstance(dims, BipartiteDims):
        return dims
    if isinstance(dims, (int, np.integer)):
        return BipartiteDims(int(dims), int(dims))
    d_a, d_b = dims
    return BipartiteDims(int(d_a), int(d_b))


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    amps: np.ndarray
    dims: BipartiteDims

    def __post_init__(self):
        dims = as_dims(self.dims)
        amps = _readonly(np.ravel(self.amps))
        if amps.shape != (dims.total,):
            raise ValueError(f"amplitude vector has length {amps.size}, expected {dims.total}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"pure state must have unit norm, got {norm!r}")
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_vector(cls, vec, dims: DimsLike) -> "PureState":
        """Normalize an arbitrary nonzero vector into a pure state."""
        vec = np.asarray(vec, dtype=complex).ravel()
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(vec / norm, as_dims(dims))

    def projector(self) -> np.ndarray:
        return np.outer(self.amps, self.amps.conj())

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.projector(), self.dims)

    def as_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to ``d_a x d_b`` (row = A index)."""
        return self.amps.reshape(self.dims.d_a, self.dims.d_b)


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    mat: np.ndarray

    def __post_init__(self):
        mat = _readonly(self.mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {mat.shape}")
        err = np.abs(mat - mat.conj().T).max(initial=0.0)
        if err > HERMITIAN_TOL:
            raise ValueError(f"matrix is not Hermitian (max deviation {err:.3e})")
        object.__setattr__(self, "mat", mat)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def min_eig(self) -> float:
        return float(self.eigvalsh()[0])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Trace-one Hermitian PSD matrix with bipartite dimension tags.

    Inputs whose smallest eigenvalue lies in ``[-1e-9, 0)`` are accepted and
    stored unchanged.
    """

    mat: np.ndarray
    dims: BipartiteDims

    def __post_init__(self):
        dims = as_dims(self.dims)
        mat = _readonly(self.mat)
        if mat.shape != (dims.total, dims.total):
            raise ValueError(f"density matrix has shape {mat.shape}, expected {(dims.total,) * 2}")
        herr = np.abs(mat - mat.conj().T).max()
        if herr > HERMITIAN_TOL:
            raise ValueError(f"density matrix is not Hermitian (max deviation {herr:.3e})")
        tr = np.trace(mat)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix must have unit trace, got {tr!r}")
        lam = np.linalg.eigvalsh(mat)[0]
        if lam < -PSD_TOL:
            raise ValueError(f"density matrix is not PSD (min eigenvalue {lam:.3e})")
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_matrix(cls, mat, dims: DimsLike) -> "DensityMatrix":
        """Hermitize and trace-normalize ``mat`` before validating it."""
        mat = np.asarray(mat, dtype=complex)
        mat = 0.5 * (mat + mat.conj().T)
        return cls(mat / np.trace(mat).real, as_dims(dims))

    @classmethod
    def maximally_mixed(cls, dims: DimsLike) -> "DensityMatrix":
        dims = as_dims(dims)
        return cls(np.eye(dims.total) / dims.total, dims)

    @classmethod
    def mixture(cls, weights: Sequence[float], states: Sequence[PureState]) -> "DensityMatrix":
        """``sum_i w_i |psi_i><psi_i|`` for nonnegative weights summing to one."""
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be a probability vector")
        mat = sum(w * s.projector() for w, s in zip(weights, states))
        return cls.from_matrix(mat, states[0].dims)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.sum(self.eigvalsh() > tol))


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``|psi> = sum_i coeffs[i] |basis_a[:, i]> |basis_b[:, i]>``."""

    coeffs: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray
    dims: BipartiteDims

    def reconstruct(self) -> np.ndarray:
        r = self.coeffs.size
        mat = (self.basis_a[:, :r] * self.coeffs) @ self.basis_b[:, :r].T
        return mat.ravel()

    @property
    def schmidt_rank(self) -> int:
        return int(np.sum(self.coeffs > 1e-12))


def schmidt_decompose(psi: PureState) -> SchmidtDecomposition:
    u, s, vh = np.linalg.svd(psi.as_matrix())
    s = np.clip(s, 0.0, None)
    coeffs = s / np.linalg.norm(s)
    coeffs.setflags(write=False)
    return SchmidtDecomposition(coeffs, u, vh.T, psi.dims)


def _check_dims(a, b) -> None:
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims.as_tuple()} vs {b.dims.as_tuple()}")


def expectation(mat: np.ndarray, vec: np.ndarray) -> float:
    """Real part of ``<v|M|v>`` for Hermitian ``M``."""
    return float(np.real(np.vdot(vec, mat @ vec)))


def fidelity(rho: DensityMatrix, psi: PureState) -> float:
    """``<psi|rho|psi>``."""
    _check_dims(rho, psi)
    return expectation(rho.mat, psi.amps)


def partial_transpose_matrix(mat: np.ndarray, dims: DimsLike) -> np.ndarray:
    """Transpose the B indices of an operator on ``C^{d_a} x C^{d_b}``."""
    dims = as_dims(dims)
    d_a, d_b = dims.d_a, dims.d_b
    t = np.asarray(mat).reshape(d_a, d_b, d_a, d_b)
    return t.transpose(0, 3, 2, 1).reshape(d_a * d_b, d_a * d_b)


def partial_transpose(rho: DensityMatrix) -> HermitianMatrix:
    return HermitianMatrix(partial_transpose_matrix(rho.mat, rho.dims))


def is_ppt(rho: DensityMatrix, tol: float = 1e-8) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return partial_transpose(rho).min_eig() >= -tol


def dephase(rho: DensityMatrix) -> DensityMatrix:
    """Zero the off-diagonal entries in the computational product basis."""
    return DensityMatrix(np.diag(np.diag(rho.mat)), rho.dims)


# -- factories -----------------------------------------------------------------


def maximally_entangled(d: int) -> PureState:
    vec = np.zeros(d * d, dtype=complex)
    vec[:: d + 1] = 1.0 / np.sqrt(d)
    return PureState(vec, BipartiteDims(d, d))


def basis_product(i: int, j: int, dims: DimsLike) -> PureState:
    dims = as_dims(dims)
    if not (0 <= i < dims.d_a and 0 <= j < dims.d_b):
        raise IndexError(f"basis index ({i}, {j}) out of range for dims {dims.as_tuple()}")
    vec = np.zeros(dims.total, dtype=complex)
    vec[i * dims.d_b + j] = 1.0
    return PureState(vec, dims)


def ghz4() -> PureState:
    """4-qubit GHZ state, qubits (1, 2) on A and (3, 4) on B."""
    vec = np.zeros(16, dtype=complex)
    vec[0] = vec[15] = 1.0 / np.sqrt(2)
    return PureState(vec, BipartiteDims(4, 4))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(n: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, n, n))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def haar_random_pure(dims: DimsLike, seed=None) -> PureState:
    dims = as_dims(dims)
    rng = _rng(seed)
    return PureState.from_vector(_ginibre(rng, dims.total, 1).ravel(), dims)


def random_mixed(dims: DimsLike, rank: Optional[int] = None, measure: str = "hilbert-schmidt",
                 seed=None) -> DensityMatrix:
    """Random density matrix of rank at most ``rank``.

    ``measure`` is ``"hilbert-schmidt"`` (normalized Wishart ``GG^dag``) or
    ``"bures"`` (``(I+U) GG^dag (I+U)^dag`` with Haar ``U``).
    """
    dims = as_dims(dims)
    n = dims.total
    rank = n if rank is None else int(rank)
    if not 1 <= rank <= n:
        raise ValueError(f"rank must lie in [1, {n}], got {rank}")
    rng = _rng(seed)
    g = _ginibre(rng, n, rank)
    if measure in ("hilbert-schmidt", "hs", "haar"):
        a = g
    elif measure == "bures":
        u = haar_unitary(n, rng)
        a = (np.eye(n) + u) @ g
    else:
        raise ValueError(f"unknown measure {measure!r}")
    mat = a @ a.conj().T
    return DensityMatrix.from_matrix(mat, dims)


# -- Heisenberg XY chain ---------------------------------------------------------

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _site_operator(op: np.ndarray, site: int, n: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, op if k == site else np.eye(2))
    return out


def heisenberg_xy(n: int, j: float = 1.0, gamma: float = 0.5, h: float = 0.5) -> HermitianMatrix:
    """Periodic XY chain; qubit 0 is the most significant tensor factor."""
    if n < 2:
        raise ValueError("the chain needs at least two sites")
    dim = 2**n
    ham = np.zeros((dim, dim), dtype=complex)
    sx = [_site_operator(_PAULI["x"], k, n) for k in range(n)]
    sy = [_site_operator(_PAULI["y"], k, n) for k in range(n)]
    sz = [_site_operator(_PAULI["z"], k, n) for k in range(n)]
    # periodic: site n-1 couples back to site 0 (for n == 2 the bond appears twice)
    bonds = [(k, (k + 1) % n) for k in range(n)]
    for a, b in bonds:
        ham -= j * (0.5 * (1 + gamma) * sx[a] @ sx[b] + 0.5 * (1 - gamma) * sy[a] @ sy[b])
    for k in range(n):
        ham -= h * sz[k]
    return HermitianMatrix(0.5 * (ham + ham.conj().T))


def eigenstates(ham: HermitianMatrix, k: int, dims: Optional[DimsLike] = None
                ) -> List[Tuple[float, PureState]]:
    """The ``k`` lowest eigenpairs, ascending (ties keep ``eigh`` order).

    ``dims`` defaults to the contiguous half/half qubit split.
    """
    dim = ham.mat.shape[0]
    if k > dim or k < 1:
        raise ValueError(f"k must lie in [1, {dim}], got {k}")
    if dims is None:
        n = int(round(np.log2(dim)))
        if 2**n != dim:
            raise ValueError("dims required for a non-qubit Hamiltonian")
        dims = (2 ** (n // 2), 2 ** (n - n // 2))
    dims = as_dims(dims)
    vals, vecs = np.linalg.eigh(ham.mat)
    order = np.argsort(vals, kind="stable")[:k]
    return [(float(vals[i]), PureState.from_vector(vecs[:, i], dims)) for i in order]
