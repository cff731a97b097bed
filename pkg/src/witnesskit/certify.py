"""Certification programs: PPT / unfaithful-set membership, noise thresholds,
k-tuple fidelity witnesses and fidelity envelopes."""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .noise import NoisyFamily, apply_noise
from .qstate import (
    BipartiteDims,
    DensityMatrix,
    PureState,
    expectation,
    is_ppt,
    partial_transpose_matrix,
    schmidt_decompose,
)
from .sdp import PsdBlock, SdpProblem, SdpStatus, SolverFailure, restrict_to_face, solve

logger = logging.getLogger(__name__)

BISECTION_TOL = 1e-7


@dataclass(frozen=True)
class CertSet:
    """``PPT`` or the SDP inner approximation ``U_tilde(D)`` of the unfaithful set."""

    kind: str = "PPT"
    D: int = 2

    def __post_init__(self):
        kind = {"ppt": "PPT", "u_tilde": "U_tilde", "u_tilde2": "U_tilde", "u2": "U_tilde"}.get(
            self.kind.lower(), self.kind)
        if kind not in ("PPT", "U_tilde"):
            raise ValueError(f"unknown certification set {self.kind!r}")
        if self.D < 2:
            raise ValueError("D must be >= 2")
        object.__setattr__(self, "kind", kind)

    def __str__(self):
        return "PPT" if self.kind == "PPT" else f"U_tilde{self.D}"


PPT = CertSet("PPT")
U_TILDE2 = CertSet("U_tilde", 2)


@dataclass(frozen=True, eq=False)
class UnfaithfulCertificate:
    mu: float
    m_a: np.ndarray
    m_b: np.ndarray
    D: int = 2

    def residuals(self, rho: DensityMatrix) -> dict:
        """Worst violation of each SDP-1 condition (nonnegative means satisfied)."""
        d_a, d_b = rho.dims.d_a, rho.dims.d_b
        lhs = np.kron(self.m_a, np.eye(d_b)) + np.kron(np.eye(d_a), self.m_b) - rho.mat
        mineig = lambda m: float(np.linalg.eigvalsh(m)[0])
        return {
            "cover": mineig(lhs),
            "m_a_psd": mineig(self.m_a),
            "m_b_psd": mineig(self.m_b),
            "m_a_bound": mineig(self.mu * np.eye(d_a) - self.m_a),
            "m_b_bound": mineig((1 - self.mu) * np.eye(d_b) - self.m_b),
            "trace_a": -abs(np.trace(self.m_a).real - self.mu * (self.D - 1)),
            "trace_b": -abs(np.trace(self.m_b).real - (1 - self.mu) * (self.D - 1)),
        }


@dataclass(frozen=True, eq=False)
class WitnessTuple:
    psis: Tuple[PureState, ...]

    def __post_init__(self):
        psis = tuple(self.psis)
        if not psis:
            raise ValueError("a witness tuple needs at least one state")
        if any(p.dims != psis[0].dims for p in psis):
            raise ValueError("all witness states must share dimensions")
        object.__setattr__(self, "psis", psis)

    @property
    def k(self) -> int:
        return len(self.psis)

    @property
    def dims(self) -> BipartiteDims:
        return self.psis[0].dims

    def fidelities(self, rho: DensityMatrix) -> np.ndarray:
        return np.array([expectation(rho.mat, p.amps) for p in self.psis])


@dataclass(frozen=True)
class EnvelopePoint:
    c: float
    v: float
    status: str


@dataclass(frozen=True)
class EnvelopeCurve:
    points: Tuple[EnvelopePoint, ...]
    cert_set: CertSet
    c_max: float

    @property
    def c(self) -> np.ndarray:
        return np.array([p.c for p in self.points])

    @property
    def v(self) -> np.ndarray:
        return np.array([p.v for p in self.points])


# -- program assembly ------------------------------------------------------------


@functools.lru_cache(maxsize=16)
def hermitian_basis(n: int) -> np.ndarray:
    """Real-orthonormal basis of ``n x n`` Hermitian matrices, shape ``(n*n, n, n)``."""
    out = np.zeros((n * n, n, n), dtype=complex)
    k = 0
    for i in range(n):
        out[k, i, i] = 1.0
        k += 1
    s = 1 / np.sqrt(2)
    for i in range(n):
        for j in range(i + 1, n):
            out[k, i, j] = out[k, j, i] = s
            out[k + 1, i, j], out[k + 1, j, i] = -1j * s, 1j * s
            k += 2
    out.setflags(write=False)
    return out


class _Program:
    """Accumulates variables and affine constraints, then emits an :class:`SdpProblem`."""

    def __init__(self):
        self.n = 0
        self.lower: List[float] = []
        self.upper: List[float] = []
        self.blocks: List[Tuple[np.ndarray, List[Tuple[int, np.ndarray]]]] = []
        self.eqs: List[Tuple[List[Tuple[int, np.ndarray]], float]] = []

    def scalar(self, lo=-np.inf, hi=np.inf) -> int:
        self.lower.append(lo)
        self.upper.append(hi)
        self.n += 1
        return self.n - 1

    def hermitian(self, dim: int) -> int:
        start = self.n
        self.lower.extend([-np.inf] * dim * dim)
        self.upper.extend([np.inf] * dim * dim)
        self.n += dim * dim
        return start

    def psd(self, const: np.ndarray, terms: List[Tuple[int, np.ndarray]]):
        """``const + sum x[start:start+len(stack)] . stack >= 0``."""
        self.blocks.append((np.asarray(const), [(s, np.asarray(st)) for s, st in terms]))

    def eq(self, terms: List[Tuple[int, np.ndarray]], rhs: float):
        self.eqs.append(([(s, np.atleast_1d(np.asarray(v, dtype=float))) for s, v in terms], float(rhs)))

    def build(self, objective: List[Tuple[int, float]]) -> SdpProblem:
        n = self.n
        c = np.zeros(n)
        for idx, val in objective:
            c[idx] += val
        blocks = []
        for const, terms in self.blocks:
            m = const.shape[0]
            coeffs = np.zeros((n, m, m), dtype=complex)
            for start, stack in terms:
                stack = stack.reshape(-1, m, m)
                coeffs[start:start + stack.shape[0]] += stack
            blocks.append(PsdBlock(const.astype(complex), coeffs))
        a_eq = np.zeros((len(self.eqs), n))
        b_eq = np.zeros(len(self.eqs))
        for r, (terms, rhs) in enumerate(self.eqs):
            for start, vals in terms:
                a_eq[r, start:start + vals.size] += vals
            b_eq[r] = rhs
        return SdpProblem(c, blocks, a_eq, b_eq, np.array(self.lower), np.array(self.upper))


ZERO_FIDELITY = 1e-12
ENVELOPE_GAP_TOL = 1e-7


def _state_variable(prog: _Program, dims: BipartiteDims, null: Sequence[PureState] = ()
                    ) -> Tuple[int, np.ndarray]:
    """Add a density-matrix variable (PSD, unit trace); returns (start, basis).

    States in ``null`` are constrained to zero fidelity.  For a PSD matrix
    that forces ``sigma |psi> = 0``, so the variable is parametrized on the
    orthogonal complement instead of through an equality (which would leave
    the program without a strictly feasible point).
    """
    n = dims.total
    if null:
        vecs = np.stack([psi.amps for psi in null], axis=1)
        u, sv, _ = np.linalg.svd(vecs, full_matrices=True)
        rank = int(np.sum(sv > 1e-10))
        comp = u[:, rank:]
        r = comp.shape[1]
        if r == 0:
            raise ValueError("zero-fidelity states span the whole space")
        basis = np.einsum("ia,kab,jb->kij", comp, hermitian_basis(r), comp.conj())
    else:
        basis = hermitian_basis(n)
    start = prog.hermitian(int(round(np.sqrt(basis.shape[0]))))
    prog.psd(np.zeros((n, n)), [(start, basis)])
    prog.eq([(start, np.trace(basis, axis1=1, axis2=2).real)], 1.0)
    return start, basis


def _add_membership(prog: _Program, const: np.ndarray, terms, dims: BipartiteDims,
                    cert_set: CertSet) -> Optional[Tuple[int, int, int]]:
    """Constrain the affine state ``const + terms`` to lie in ``cert_set``.

    For ``U_tilde`` returns the indices of (mu, M_A, M_B).
    """
    if cert_set.kind == "PPT":
        pt = lambda m: partial_transpose_matrix(m, dims)
        n, d_a, d_b = dims.total, dims.d_a, dims.d_b
        pt_stack = lambda st: (st.reshape(-1, d_a, d_b, d_a, d_b)
                               .transpose(0, 1, 4, 3, 2).reshape(-1, n, n))
        prog.psd(pt(const), [(s, pt_stack(st)) for s, st in terms])
        return None

    d_a, d_b = dims.d_a, dims.d_b
    big_d = cert_set.D
    mu = prog.scalar(0.0, 1.0)
    a0 = prog.hermitian(d_a)
    b0 = prog.hermitian(d_b)
    ba, bb = hermitian_basis(d_a), hermitian_basis(d_b)
    ia, ib = np.eye(d_a), np.eye(d_b)
    cover = [(a0, np.stack([np.kron(m, ib) for m in ba])),
             (b0, np.stack([np.kron(ia, m) for m in bb]))]
    cover += [(s, -np.asarray(st)) for s, st in terms]
    prog.psd(-const, cover)
    prog.psd(np.zeros((d_a, d_a)), [(a0, ba)])
    prog.psd(np.zeros((d_b, d_b)), [(b0, bb)])
    prog.psd(np.zeros((d_a, d_a)), [(mu, ia[None]), (a0, -ba)])
    prog.psd(np.eye(d_b), [(mu, -ib[None]), (b0, -bb)])
    tr_a = np.trace(ba, axis1=1, axis2=2).real
    tr_b = np.trace(bb, axis1=1, axis2=2).real
    prog.eq([(a0, tr_a), (mu, [-(big_d - 1.0)])], 0.0)
    prog.eq([(b0, tr_b), (mu, [big_d - 1.0])], big_d - 1.0)
    return mu, a0, b0


def _require(sol, what: str):
    if sol.status is SdpStatus.NUMERICAL_FAILURE:
        raise SolverFailure(f"{what}: solver did not converge")
    return sol


# -- membership ----------------------------------------------------------------------


def in_unfaithful_approx(rho: DensityMatrix, D: int = 2) -> Optional[UnfaithfulCertificate]:
    """Certificate that ``rho`` lies in ``U_tilde(D)``, or ``None``.

    ``None`` means *not certified unfaithful*; it does not prove faithfulness.
    """
    prog = _Program()
    idx = _add_membership(prog, rho.mat, [], rho.dims, CertSet("U_tilde", D))
    sol = _require(solve(prog.build([])), "U_tilde membership")
    if sol.status is SdpStatus.INFEASIBLE:
        return None
    mu, a0, b0 = idx
    d_a, d_b = rho.dims.d_a, rho.dims.d_b
    m_a = np.tensordot(sol.x[a0:a0 + d_a * d_a], hermitian_basis(d_a), axes=1)
    m_b = np.tensordot(sol.x[b0:b0 + d_b * d_b], hermitian_basis(d_b), axes=1)
    return UnfaithfulCertificate(float(sol.x[mu]), m_a, m_b, D)


def fidelity_point_feasible(psis: Sequence[PureState], values: Sequence[float],
                            cert_set: CertSet = PPT) -> bool:
    """Is there a state in ``cert_set`` with ``<psi_i|sigma|psi_i> = values[i]``?"""
    tup = WitnessTuple(psis)
    prog = _Program()
    null = [psi for psi, val in zip(tup.psis, values) if abs(val) <= ZERO_FIDELITY]
    start, basis = _state_variable(prog, tup.dims, null)
    _add_membership(prog, np.zeros((tup.dims.total,) * 2), [(start, basis)], tup.dims, cert_set)
    for psi, val in zip(tup.psis, values):
        if abs(val) > ZERO_FIDELITY:
            prog.eq([(start, _fidelity_row(basis, psi))], val)
    sol = _require(solve(prog.build([])), "fidelity-point feasibility")
    return sol.status is SdpStatus.OPTIMAL


def in_wk(rho: DensityMatrix, witnesses: WitnessTuple) -> bool:
    """Whether some PPT state reproduces every witness fidelity of ``rho``.

    ``False`` certifies that ``rho`` is entangled.
    """
    if witnesses.dims != rho.dims:
        raise ValueError("witness and state dimensions differ")
    if is_ppt(rho):
        return True
    return fidelity_point_feasible(witnesses.psis, witnesses.fidelities(rho), PPT)


def _fidelity_row(basis: np.ndarray, psi: PureState) -> np.ndarray:
    v = psi.amps
    return np.real(np.einsum("i,kij,j->k", v.conj(), basis, v))


# -- thresholds -------------------------------------------------------------------------


def _bisect(member, tol: float = BISECTION_TOL) -> float:
    if member(0.0):
        return 0.0
    if not member(1.0):
        raise RuntimeError("noisy family is outside the set even at p = 1")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if member(mid):
            hi = mid
        else:
            lo = mid
    return hi


def noise_threshold(family: NoisyFamily, cert_set: CertSet = PPT) -> float:
    """Smallest ``p`` with ``rho(p)`` in ``cert_set`` (membership holds for all larger p)."""
    prog = _Program()
    p = prog.scalar(0.0, 1.0)
    _add_membership(prog, family.base.mat, [(p, family.direction()[None])], family.dims, cert_set)
    sol = solve(prog.build([(p, 1.0)]))
    if sol.status is SdpStatus.OPTIMAL:
        return float(np.clip(sol.x[p], 0.0, 1.0))
    if sol.status is SdpStatus.INFEASIBLE:
        raise RuntimeError("noisy family is outside the set even at p = 1")
    logger.warning("threshold SDP failed (%s); falling back to bisection", sol.status.value)
    if cert_set.kind == "PPT":
        return _bisect(lambda t: is_ppt(apply_noise(family, t), tol=1e-10))
    return _bisect(lambda t: in_unfaithful_approx(apply_noise(family, t), cert_set.D) is not None)


@dataclass(frozen=True)
class ThresholdSensitivity:
    """Optimal value of the tuple-threshold program and its derivative.

    ``grads[i]`` packs the derivative with respect to the real and imaginary
    parts of ``psis[i].amps`` as ``d/dRe + 1j d/dIm``.
    """

    value: float
    grads: Tuple[np.ndarray, ...]


def _tuple_program(family: NoisyFamily, witnesses: WitnessTuple):
    dims = family.dims
    prog = _Program()
    p = prog.scalar(0.0, 1.0)
    direction = family.direction()
    # witnesses orthogonal to rho(p) for every p pin sigma to their complement
    coeffs = [(expectation(family.base.mat, psi.amps), expectation(direction, psi.amps))
              for psi in witnesses.psis]
    pinned = [abs(f0) <= ZERO_FIDELITY and abs(f1) <= ZERO_FIDELITY for f0, f1 in coeffs]
    start, basis = _state_variable(prog, dims, [psi for psi, z in zip(witnesses.psis, pinned) if z])
    _add_membership(prog, np.zeros((dims.total,) * 2), [(start, basis)], dims, PPT)
    for psi, (f0, f1), z in zip(witnesses.psis, coeffs, pinned):
        if not z:
            prog.eq([(start, _fidelity_row(basis, psi)), (p, [-f1])], f0)
    return prog, p, start, basis, pinned


def tuple_threshold_sensitivity(family: NoisyFamily, witnesses: WitnessTuple) -> ThresholdSensitivity:
    """Solve the tuple-threshold program and differentiate its value through the duals."""
    if witnesses.dims != family.dims:
        raise ValueError("witness and state dimensions differ")
    prog, p, start, basis, pinned = _tuple_program(family, witnesses)
    sol = solve(prog.build([(p, 1.0)]))
    if sol.status is SdpStatus.INFEASIBLE:
        raise RuntimeError("noisy family is outside the witness set even at p = 1")
    if sol.status is not SdpStatus.OPTIMAL:
        raise SolverFailure("tuple-threshold SDP did not converge")
    pstar = float(sol.x[p])
    sigma = np.tensordot(sol.x[start:start + basis.shape[0]], basis, axes=1)
    gap = sigma - (family.base.mat + pstar * family.direction())
    # first eq row is the trace constraint; the unpinned fidelity rows follow in order
    ys = iter(sol.eq_duals[1:])
    grads = tuple(np.zeros_like(psi.amps) if z else -2.0 * next(ys) * (gap @ psi.amps)
                  for psi, z in zip(witnesses.psis, pinned))
    return ThresholdSensitivity(float(np.clip(pstar, 0.0, 1.0)), grads)


def tuple_threshold(family: NoisyFamily, witnesses: WitnessTuple) -> float:
    """Smallest ``p`` at which the witness fidelities of ``rho(p)`` are matched by a PPT state.

    Entanglement of ``rho(p)`` is certified for every ``p`` below the value.
    """
    try:
        return tuple_threshold_sensitivity(family, witnesses).value
    except SolverFailure:
        logger.warning("tuple-threshold SDP failed; falling back to bisection")
        return _bisect(lambda t: in_wk(apply_noise(family, t), witnesses))


# -- envelopes and the maximally-entangled analysis -----------------------------------------


def _fidelity_program(psi: PureState, cert_set: CertSet, fixed: Sequence[Tuple[PureState, float]] = ()):
    """Maximize ``<psi|sigma|psi>`` over ``cert_set`` with fixed fidelities; returns the problem."""
    prog = _Program()
    null = [other for other, val in fixed if abs(val) <= ZERO_FIDELITY]
    start, basis = _state_variable(prog, psi.dims, null)
    _add_membership(prog, np.zeros((psi.dims.total,) * 2), [(start, basis)], psi.dims, cert_set)
    for other, val in fixed:
        if abs(val) > ZERO_FIDELITY:
            prog.eq([(start, _fidelity_row(basis, other))], val)
    row = _fidelity_row(basis, psi)
    return prog.build([(start + i, -row[i]) for i in range(row.size)])


def _solve_envelope(problem):
    sol = solve(problem)
    if sol.status is SdpStatus.NUMERICAL_FAILURE:
        # boundary faces can stall the duals just above the default gap; accept 1e-7
        sol = solve(problem, gap_tol=ENVELOPE_GAP_TOL)
    return sol


def _max_fidelity(psi: PureState, cert_set: CertSet, fixed: Sequence[Tuple[PureState, float]] = ()):
    return _solve_envelope(_fidelity_program(psi, cert_set, fixed))


def max_first_fidelity(psi1: PureState, cert_set: CertSet = PPT) -> float:
    """Largest ``<psi1|sigma|psi1>`` over states ``sigma`` in ``cert_set``."""
    top = _max_fidelity(psi1, cert_set)
    if top.status is not SdpStatus.OPTIMAL:
        raise SolverFailure("could not compute the maximal first fidelity")
    return float(-top.primal_objective)


def fidelity_envelope(psi1: PureState, psi2: PureState, cert_set: CertSet = PPT,
                      grid_size: int = 61, c_values: Optional[Sequence[float]] = None) -> EnvelopeCurve:
    """Upper boundary of the achievable ``(<psi1|s|psi1>, <psi2|s|psi2>)`` region over ``cert_set``.

    The default grid spans ``[0, c_max]``; with ``c_values`` the boundary is
    evaluated there instead and points beyond ``c_max`` come back as NaN with
    status ``infeasible``.  At ``c_max`` the feasible states form a face of
    the cone, so that point is solved on the face exposed by the duals of the
    ``c_max`` program.
    """
    top = _max_fidelity(psi1, cert_set)
    if top.status is not SdpStatus.OPTIMAL:
        raise SolverFailure("could not compute the maximal first fidelity")
    c_max = float(-top.primal_objective)
    if c_values is None:
        if grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        c_values = np.linspace(0.0, c_max, grid_size)
    points = []
    for c in c_values:
        c = float(c)
        if c > c_max + 1e-9:
            points.append(EnvelopePoint(c, float("nan"), SdpStatus.INFEASIBLE.value))
            continue
        if c >= c_max - 1e-9:
            # same variables and blocks as the c_max program, so its duals expose the face
            face = restrict_to_face(_fidelity_program(psi2, cert_set), top.block_duals)
            sol = _solve_envelope(face)
        else:
            sol = _max_fidelity(psi2, cert_set, [(psi1, c)])
        if sol.status is SdpStatus.OPTIMAL:
            points.append(EnvelopePoint(c, float(-sol.primal_objective), "optimal"))
        else:
            points.append(EnvelopePoint(c, float("nan"), sol.status.value))
    return EnvelopeCurve(tuple(points), cert_set, float(c_max))


def _is_maximally_entangled(psi: PureState, tol: float = 1e-8) -> bool:
    d = min(psi.dims.as_tuple())
    return np.allclose(schmidt_decompose(psi).coeffs[:d], 1 / np.sqrt(d), atol=tol)


def correlation_unitary(psi1: PureState, psi2: PureState) -> Optional[np.ndarray]:
    """Unitary ``U`` on B with ``|psi2> = (I x U)|psi1>``, or ``None`` if none exists."""
    if psi1.dims != psi2.dims or psi1.dims.d_a != psi1.dims.d_b:
        raise ValueError("need equal local dimensions on both states")
    if not (_is_maximally_entangled(psi1) and _is_maximally_entangled(psi2)):
        raise ValueError("both states must be maximally entangled")
    # (I x U)|psi> reshapes to  Psi U^T
    u = np.linalg.solve(psi1.as_matrix(), psi2.as_matrix()).T
    d = u.shape[0]
    if not np.allclose(u.conj().T @ u, np.eye(d), atol=1e-8):
        return None
    return u


def zero_in_numerical_range(u: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether some unit ``x`` has ``<x|U|x> = 0`` for unitary ``U``.

    For a normal matrix the numerical range is the convex hull of the
    spectrum; for unit-modulus eigenvalues the hull misses the origin exactly
    when one angular gap between neighbouring eigenvalues exceeds pi, and the
    distance to the origin is then ``|cos(gap / 2)|``.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or not np.allclose(u.conj().T @ u, np.eye(u.shape[0]),
                                                                   atol=1e-8):
        raise ValueError("input is not unitary")
    angles = np.sort(np.angle(np.linalg.eigvals(u)))
    gaps = np.diff(np.concatenate([angles, angles[:1] + 2 * np.pi]))
    widest = gaps.max()
    if widest <= np.pi:
        return True
    return abs(np.cos(widest / 2)) <= tol
