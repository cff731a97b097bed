"""Small dense semidefinite programs with Hermitian PSD blocks.

Problems are stated in LMI form::

    minimize    c^T x
    subject to  B0_k + sum_i x_i B_ik  >= 0     (each block k, Hermitian)
                A_eq x = b_eq
                lower <= x <= upper

with the dual, in the sign convention used for ``eq_duals`` and
``block_duals``::

    maximize    b_eq^T y - sum_k <Z_k, B0_k>
    subject to  c_i = (A_eq^T y)_i + sum_k <Z_k, B_ik>,   Z_k >= 0

(bounds enter as 1x1 blocks).  Complex blocks are realified with
:func:`hermitian_to_real_embedding`, so the solver core only sees real
symmetric matrices.  The default core is a dense infeasible-start
primal-dual path-following method (HKM direction, Mehrotra
predictor-corrector); infeasibility is decided by a phase-I program that
minimizes the largest constraint violation.  ``backend="clarabel"`` routes
the same problem to Clarabel instead.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

logger = logging.getLogger(__name__)

_SQRT2 = np.sqrt(2.0)


class SdpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical-failure"


class SolverFailure(RuntimeError):
    """A solve ended without a usable verdict; treat the result as inconclusive."""


@dataclass
class PsdBlock:
    """Affine Hermitian matrix ``const + sum_i x_i coeffs[i]`` constrained PSD."""

    const: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.const = np.asarray(self.const)
        self.coeffs = np.asarray(self.coeffs)
        m = self.const.shape[0]
        if self.const.shape != (m, m) or self.coeffs.ndim != 3 or self.coeffs.shape[1:] != (m, m):
            raise ValueError("inconsistent block shapes")
        if np.abs(self.const - self.const.conj().T).max(initial=0) > 1e-10:
            raise ValueError("block constant is not Hermitian")
        if np.abs(self.coeffs - self.coeffs.conj().transpose(0, 2, 1)).max(initial=0) > 1e-10:
            raise ValueError("block coefficient is not Hermitian")

    @property
    def size(self) -> int:
        return self.const.shape[0]

    @property
    def is_complex(self) -> bool:
        return bool(np.iscomplexobj(self.const) and np.any(self.const.imag)) or bool(
            np.iscomplexobj(self.coeffs) and np.any(self.coeffs.imag))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.const + np.tensordot(x, self.coeffs, axes=1)


@dataclass
class SdpProblem:
    c: np.ndarray
    blocks: List[PsdBlock] = field(default_factory=list)
    a_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        for blk in self.blocks:
            if blk.coeffs.shape[0] != n:
                raise ValueError(f"block has {blk.coeffs.shape[0]} coefficient matrices for {n} variables")
        if self.a_eq is None:
            self.a_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        self.a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
        if self.a_eq.shape != (self.b_eq.size, n):
            raise ValueError("equality constraint shapes do not match")
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass
class SdpSolution:
    status: SdpStatus
    x: Optional[np.ndarray]
    primal_objective: float
    dual_objective: float
    block_duals: List[np.ndarray]
    eq_duals: Optional[np.ndarray]
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status is SdpStatus.OPTIMAL

    @property
    def gap(self) -> float:
        return abs(self.primal_objective - self.dual_objective)


def hermitian_to_real_embedding(h: np.ndarray) -> np.ndarray:
    """``X + iY  ->  [[X, -Y], [Y, X]]``.

    The embedding is PSD exactly when ``h`` is; every eigenvalue of ``h``
    appears twice in its spectrum.
    """
    h = np.asarray(h)
    x, y = h.real, h.imag
    return np.block([[x, -y], [y, x]])


def _embed_stack(mats: np.ndarray) -> np.ndarray:
    x, y = mats.real, mats.imag
    top = np.concatenate([x, -y], axis=-1)
    bottom = np.concatenate([y, x], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def _real_dual_to_hermitian(z: np.ndarray) -> np.ndarray:
    # chosen so that <Z_c, B> = <Z, embed(B)> for every Hermitian B
    m = z.shape[0] // 2
    z11, z12, z21, z22 = z[:m, :m], z[:m, m:], z[m:, :m], z[m:, m:]
    return (z11 + z22) + 1j * (z21 - z12)


# -- lowering to real symmetric blocks ----------------------------------------------


class _RealBlock:
    """``const + sum_i x_i B_i`` with ``vec(B_i)`` stored as column ``i`` of ``lmap``."""

    def __init__(self, const: np.ndarray, lmap: sp.spmatrix, source: int, cplx: bool = False):
        self.const = const
        self.lmap = sp.csc_matrix(lmap)
        self.lmap.eliminate_zeros()
        self.lmap_t = self.lmap.T.tocsr()
        self.source = source
        self.cplx = cplx
        m = const.shape[0]
        # columns that actually enter this block, with their matrices as a dense stack
        self.cols = np.flatnonzero(np.diff(self.lmap.indptr))
        sub = self.lmap[:, self.cols]
        self.sub_t = sub.T.tocsr()
        # bcat[a, j*m + c] = B_j[a, c], so Z @ bcat forms every Z B_j in one product
        self.bcat = np.ascontiguousarray(
            sub.toarray().reshape(m, m, self.cols.size).transpose(0, 2, 1).reshape(m, -1))

    @property
    def m(self) -> int:
        return self.const.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (self.lmap @ x).reshape(self.m, self.m)

    def adjoint(self, z: np.ndarray) -> np.ndarray:
        return self.lmap_t @ z.ravel()

    def schur_add(self, mmat: np.ndarray, z: np.ndarray, s_inv: np.ndarray) -> None:
        """Add ``M_ij = <B_i, Z B_j S^-1>`` for the active columns into ``mmat``."""
        m, na = self.m, self.cols.size
        if na == 0:
            return
        if m == 1:
            w = z[0, 0] * s_inv[0, 0]
            v = self.bcat[0]
            mmat[np.ix_(self.cols, self.cols)] += w * np.outer(v, v)
            return
        zb = (z @ self.bcat).reshape(m * na, m) @ s_inv          # rows (a, j), cols c
        zbs = zb.reshape(m, na, m).transpose(1, 0, 2).reshape(na, m * m)
        mmat[np.ix_(self.cols, self.cols)] += (self.sub_t @ zbs.T)


@dataclass
class _Lowered:
    c: np.ndarray
    blocks: List[_RealBlock]
    a_eq: np.ndarray
    b_eq: np.ndarray


def _lower(problem: SdpProblem) -> _Lowered:
    n = problem.n_vars
    blocks = []
    for k, blk in enumerate(problem.blocks):
        cplx = blk.is_complex
        const = hermitian_to_real_embedding(blk.const) if cplx else blk.const.real
        coeffs = _embed_stack(blk.coeffs) if cplx else blk.coeffs.real
        m = const.shape[0]
        lmap = sp.csc_matrix(coeffs.reshape(n, m * m).T)
        lmap.eliminate_zeros()
        blocks.append(_RealBlock(np.array(const, dtype=float), lmap, k, cplx))
    for i in np.flatnonzero(np.isfinite(problem.lower)):
        blocks.append(_RealBlock(np.array([[-problem.lower[i]]]),
                                 sp.csc_matrix(([1.0], ([0], [i])), shape=(1, n)), -1))
    for i in np.flatnonzero(np.isfinite(problem.upper)):
        blocks.append(_RealBlock(np.array([[problem.upper[i]]]),
                                 sp.csc_matrix(([-1.0], ([0], [i])), shape=(1, n)), -1))
    return _Lowered(problem.c.copy(), blocks, problem.a_eq, problem.b_eq)


# -- interior-point core --------------------------------------------------------------


@dataclass
class _IpmResult:
    converged: bool
    x: np.ndarray
    y: np.ndarray
    s: List[np.ndarray]
    z: List[np.ndarray]
    pobj: float
    dobj: float
    iterations: int
    reason: str = ""


def _max_step(mat: np.ndarray, delta: np.ndarray) -> float:
    """Largest ``a`` with ``mat + a * delta >= 0`` for ``mat > 0``."""
    if mat.shape[0] == 1:
        d = delta[0, 0]
        return np.inf if d >= 0 else -mat[0, 0] / d
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return 0.0
    tmp = sla.solve_triangular(chol, delta, lower=True)
    tmp = sla.solve_triangular(chol, tmp.T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (tmp + tmp.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _inv_spd(mat: np.ndarray) -> np.ndarray:
    if mat.shape[0] == 1:
        return 1.0 / mat
    chol = sla.cho_factor(mat, lower=True)
    inv = sla.cho_solve(chol, np.eye(mat.shape[0]))
    return 0.5 * (inv + inv.T)


def _is_pd(mat: np.ndarray) -> bool:
    if mat.shape[0] == 1:
        return bool(mat[0, 0] > 0)
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return False
    return True


def _sym(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


class _SaddleSolver:
    """Factorization of ``[[-M, A^T], [A, 0]]`` reused by predictor and corrector."""

    def __init__(self, mmat: np.ndarray, a_eq: np.ndarray):
        n = mmat.shape[0]
        diag = np.diag(mmat)
        reg = 1e-14 * max(1.0, diag.max(initial=1.0))
        mmat = mmat + reg * np.eye(n)
        try:
            self.mfac = sla.cho_factor(mmat, lower=True, check_finite=False)
            self.msolve = lambda r: sla.cho_solve(self.mfac, r, check_finite=False)
        except np.linalg.LinAlgError:
            pinv = np.linalg.pinv(mmat, hermitian=True)
            self.msolve = lambda r: pinv @ r
        self.a_eq = a_eq
        if a_eq.shape[0]:
            ma = self.msolve(a_eq.T)
            schur = a_eq @ ma
            schur = 0.5 * (schur + schur.T)
            try:
                fac = sla.cho_factor(schur, lower=True, check_finite=False)
                self.ssolve = lambda r: sla.cho_solve(fac, r, check_finite=False)
            except np.linalg.LinAlgError:
                pinv = np.linalg.pinv(schur, hermitian=True)
                self.ssolve = lambda r: pinv @ r

    def solve(self, h: np.ndarray, rb: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Solve ``-M dx + A^T dy = h``, ``A dx = rb``."""
        if not self.a_eq.shape[0]:
            return -self.msolve(h), np.zeros(0)
        mh = self.msolve(h)
        dy = self.ssolve(rb + self.a_eq @ mh)
        dx = self.msolve(self.a_eq.T @ dy) - mh
        return dx, dy


def _ipm(lp: _Lowered, gap_tol: float, feas_tol: float, max_iter: int) -> _IpmResult:
    c, blocks, a_eq, b_eq = lp.c, lp.blocks, lp.a_eq, lp.b_eq
    n = c.size
    dims = [b.m for b in blocks]
    nu = float(sum(dims))
    x = np.zeros(n)
    if a_eq.shape[0]:
        x = np.linalg.lstsq(a_eq, b_eq, rcond=None)[0]
    y = np.zeros(a_eq.shape[0])
    scale = 1.0 + max((np.abs(b.const).max(initial=0.0) for b in blocks), default=0.0)
    s = [scale * np.eye(m) for m in dims]
    z = [np.eye(m) for m in dims]
    for blk, sk in zip(blocks, s):
        # shift the start inside the cone if G(x0) is far from PSD
        g0 = blk.const + blk.apply(x)
        lam = np.linalg.eigvalsh(g0)[0]
        if lam > 0:
            sk[:] = g0 + 0.1 * scale * np.eye(blk.m)
    c_norm = 1.0 + np.abs(c).max(initial=0.0)
    b_norm = 1.0 + np.abs(b_eq).max(initial=0.0)

    pobj = dobj = np.nan
    stall = 0
    best = None  # most accurate iterate within tolerance, used if progress breaks down
    for it in range(1, max_iter + 1):
        gx = [blk.const + blk.apply(x) for blk in blocks]
        rp = [g - sk for g, sk in zip(gx, s)]
        rb = b_eq - a_eq @ x
        rc = c - a_eq.T @ y - sum(blk.adjoint(zk) for blk, zk in zip(blocks, z))
        pobj = float(c @ x)
        dobj = float(b_eq @ y - sum(np.sum(blk.const * zk) for blk, zk in zip(blocks, z)))
        mu = sum(np.sum(sk * zk) for sk, zk in zip(s, z)) / nu

        pres = max([np.linalg.norm(r) for r in rp] + [np.abs(rb).max(initial=0.0) / b_norm])
        dres = np.abs(rc).max(initial=0.0) / c_norm
        logger.debug("it %d pobj %.12g dobj %.12g pres %.2e dres %.2e mu %.2e", it, pobj, dobj, pres, dres, mu)
        if pres <= feas_tol and dres <= feas_tol:
            gap = abs(pobj - dobj)
            if gap <= 0.5 * gap_tol:
                return _IpmResult(True, x, y, s, z, pobj, dobj, it - 1)
            if gap <= gap_tol and (best is None or gap < best[0]):
                best = (gap, _IpmResult(True, x, y, s, z, pobj, dobj, it - 1))
        if not np.isfinite(pobj) or np.abs(x).max(initial=0.0) > 1e10 or abs(dobj) > 1e10:
            return best[1] if best else _IpmResult(False, x, y, s, z, pobj, dobj, it - 1, "diverged")

        s_inv = [_inv_spd(sk) for sk in s]
        mmat = np.zeros((n, n))
        for blk, zk, si in zip(blocks, z, s_inv):
            blk.schur_add(mmat, zk, si)
        mmat = 0.5 * (mmat + mmat.T)
        saddle = _SaddleSolver(mmat, a_eq)

        def direction(sigma_mu: float, corr: Optional[List[np.ndarray]]):
            # dZ = sigma_mu S^-1 - Z - sym((Z dS + corr) S^-1), dS = G(dx) + rp
            base = []
            for k, (sk, zk, si) in enumerate(zip(s, z, s_inv)):
                tmp = zk @ rp[k]
                if corr is not None:
                    tmp = tmp + corr[k]
                base.append(sigma_mu * si - zk - _sym(tmp @ si))
            h = rc - sum(blk.adjoint(bk) for blk, bk in zip(blocks, base))
            dx, dy = saddle.solve(h, rb)
            for _ in range(2):
                # iterative refinement against the operator form of M
                mdx = sum(blk.adjoint(_sym(zk @ blk.apply(dx) @ si))
                          for blk, zk, si in zip(blocks, z, s_inv))
                res_h = h - (a_eq.T @ dy - mdx)
                res_b = rb - a_eq @ dx
                if max(np.abs(res_h).max(initial=0.0), np.abs(res_b).max(initial=0.0)) < 1e-15:
                    break
                ddx, ddy = saddle.solve(res_h, res_b)
                dx, dy = dx + ddx, dy + ddy
            ds, dz = [], []
            for k, (blk, zk, si) in enumerate(zip(blocks, z, s_inv)):
                gdx = blk.apply(dx)
                ds.append(gdx + rp[k])
                dz.append(base[k] - _sym(zk @ gdx @ si))
            return dx, dy, ds, dz

        def steps(ds, dz):
            ap = min([_max_step(sk, d) for sk, d in zip(s, ds)] + [np.inf])
            ad = min([_max_step(zk, d) for zk, d in zip(z, dz)] + [np.inf])
            return ap, ad

        dx, dy, ds, dz = direction(0.0, None)
        ap, ad = steps(ds, dz)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = sum(np.sum((sk + ap * dsk) * (zk + ad * dzk))
                     for sk, zk, dsk, dzk in zip(s, z, ds, dz)) / nu
        sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0
        corr = [dzk @ dsk for dsk, dzk in zip(ds, dz)]
        dx, dy, ds, dz = direction(sigma * mu, corr)
        ap, ad = steps(ds, dz)
        tau = 0.9 + 0.09 * min(1.0, ap, ad)
        ap, ad = min(1.0, tau * ap), min(1.0, tau * ad)

        for _ in range(30):
            s_new = [_sym(sk + ap * dsk) for sk, dsk in zip(s, ds)]
            z_new = [_sym(zk + ad * dzk) for zk, dzk in zip(z, dz)]
            if all(_is_pd(mat) for mat in s_new + z_new):
                break
            ap, ad = 0.8 * ap, 0.8 * ad
        else:
            return best[1] if best else _IpmResult(False, x, y, s, z, pobj, dobj, it, "lost definiteness")
        x = x + ap * dx
        y = y + ad * dy
        s, z = s_new, z_new
        stall = stall + 1 if max(ap, ad) < 1e-8 else 0
        if stall >= 3:
            return best[1] if best else _IpmResult(False, x, y, s, z, pobj, dobj, it, "stalled")
        if best is not None and mu < 1e-3 * best[0] / nu:
            # complementarity is far below the gap: further steps only amplify round-off
            return best[1]
    return best[1] if best else _IpmResult(False, x, y, s, z, pobj, dobj, max_iter, "iteration limit")


def _phase_one(lp: _Lowered, gap_tol: float, feas_tol: float, max_iter: int) -> _IpmResult:
    """``min t  s.t.  G_k(x) + t I >= 0,  A x = b,  t >= -1``; last variable is ``t``."""
    n = lp.c.size
    blocks = []
    for blk in lp.blocks:
        m = blk.m
        eye_col = sp.csc_matrix(np.eye(m).reshape(m * m, 1))
        blocks.append(_RealBlock(blk.const, sp.hstack([blk.lmap, eye_col]).tocsc(), blk.source, blk.cplx))
    blocks.append(_RealBlock(np.array([[1.0]]), sp.csc_matrix(([1.0], ([0], [n])), shape=(1, n + 1)), -1))
    a_eq = np.hstack([lp.a_eq, np.zeros((lp.a_eq.shape[0], 1))])
    c = np.zeros(n + 1)
    c[-1] = 1.0
    return _ipm(_Lowered(c, blocks, a_eq, lp.b_eq), gap_tol, feas_tol, max_iter)


def _solution_from(problem: SdpProblem, lp: _Lowered, res: _IpmResult, status: SdpStatus,
                   x: np.ndarray) -> SdpSolution:
    duals = []
    for blk, zk in zip(lp.blocks, res.z):
        if blk.source >= 0:
            duals.append(_real_dual_to_hermitian(zk) if blk.cplx else zk)
    return SdpSolution(status, x, res.pobj, res.dobj, duals, res.y[:problem.a_eq.shape[0]].copy(),
                       res.iterations)


def _certified_feasible(problem: SdpProblem, x: np.ndarray, feas_tol: float) -> bool:
    for blk in problem.blocks:
        if np.linalg.eigvalsh(blk.evaluate(x))[0] < -feas_tol:
            return False
    if problem.a_eq.shape[0]:
        scale = 1.0 + np.abs(problem.b_eq).max()
        if np.abs(problem.a_eq @ x - problem.b_eq).max() > feas_tol * scale:
            return False
    return not (np.any(x < problem.lower - feas_tol) or np.any(x > problem.upper + feas_tol))


def _solve_ipm(problem: SdpProblem, gap_tol: float, feas_tol: float, max_iter: int) -> SdpSolution:
    lp = _lower(problem)
    n = problem.n_vars
    if problem.a_eq.shape[0]:
        x_ls = np.linalg.lstsq(problem.a_eq, problem.b_eq, rcond=None)[0]
        if np.abs(problem.a_eq @ x_ls - problem.b_eq).max() > feas_tol * (1 + np.abs(problem.b_eq).max()):
            return SdpSolution(SdpStatus.INFEASIBLE, None, np.inf, np.inf, [], None, 0)

    feasibility_only = not np.any(problem.c)
    if not feasibility_only:
        res = _ipm(lp, gap_tol, feas_tol, max_iter)
        if res.converged and _certified_feasible(problem, res.x, feas_tol):
            return _solution_from(problem, lp, res, SdpStatus.OPTIMAL, res.x)
        logger.debug("main solve did not converge (%s); running phase I", res.reason)

    ph = _phase_one(lp, gap_tol, feas_tol, max_iter)
    if not ph.converged:
        return SdpSolution(SdpStatus.NUMERICAL_FAILURE, ph.x[:n], np.nan, np.nan, [], None, ph.iterations)
    t_star = ph.x[-1]
    if t_star > feas_tol:
        return SdpSolution(SdpStatus.INFEASIBLE, None, np.inf, np.inf, [], None, ph.iterations)
    if feasibility_only:
        x = ph.x[:n]
        if not _certified_feasible(problem, x, feas_tol):
            return SdpSolution(SdpStatus.NUMERICAL_FAILURE, x, np.nan, np.nan, [], None, ph.iterations)
        phase_res = _IpmResult(True, x, ph.y, ph.s, ph.z[:-1], 0.0, 0.0, ph.iterations)
        return _solution_from(problem, lp, phase_res, SdpStatus.OPTIMAL, x)
    if res.reason == "diverged" and res.pobj < -1e8:
        return SdpSolution(SdpStatus.UNBOUNDED, res.x, -np.inf, -np.inf, [], None, res.iterations)
    return SdpSolution(SdpStatus.NUMERICAL_FAILURE, res.x, res.pobj, res.dobj, [], None, res.iterations)


# -- Clarabel backend -------------------------------------------------------------------


def _triu_index(m: int):
    # Clarabel's PSD triangle: upper triangle, column-major, off-diagonals scaled by sqrt(2)
    c, r = np.tril_indices(m)
    scale = np.where(r == c, 1.0, _SQRT2)
    return r, c, scale


def _solve_clarabel(problem: SdpProblem, gap_tol: float, feas_tol: float, max_iter: int) -> SdpSolution:
    import clarabel

    lp = _lower(problem)
    n = problem.n_vars
    rows, rhs, cones, metas = [], [], [], []
    if problem.a_eq.shape[0]:
        rows.append(sp.csr_matrix(problem.a_eq))
        rhs.append(problem.b_eq)
        cones.append(clarabel.ZeroConeT(problem.a_eq.shape[0]))
    for blk in lp.blocks:
        m = blk.m
        r, c, scale = _triu_index(m)
        sel = (r * m + c)
        a_blk = -(sp.diags(scale) @ blk.lmap.tocsr()[sel])
        rows.append(a_blk)
        rhs.append(blk.const[r, c] * scale)
        cones.append(clarabel.NonnegativeConeT(1) if m == 1 else clarabel.PSDTriangleConeT(m))
        metas.append((m, r, c, scale))
    a_mat = sp.vstack(rows).tocsc()
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = int(max_iter)
    settings.tol_gap_abs = settings.tol_gap_rel = gap_tol
    settings.tol_feas = feas_tol
    settings.tol_infeas_abs = settings.tol_infeas_rel = feas_tol
    sol = clarabel.DefaultSolver(sp.csc_matrix((n, n)), problem.c, a_mat, np.concatenate(rhs),
                                 cones, settings).solve()
    status = str(sol.status)
    if status == "PrimalInfeasible":
        return SdpSolution(SdpStatus.INFEASIBLE, None, np.inf, np.inf, [], None, sol.iterations)
    if status == "DualInfeasible":
        return SdpSolution(SdpStatus.UNBOUNDED, None, -np.inf, -np.inf, [], None, sol.iterations)
    x, zvec = np.asarray(sol.x), np.asarray(sol.z)
    n_eq = problem.a_eq.shape[0]
    offset = n_eq
    zs = []
    for m, r, c, scale in metas:
        t = r.size
        zk = np.zeros((m, m))
        zk[r, c] = zvec[offset:offset + t] / scale
        zk[c, r] = zvec[offset:offset + t] / scale
        zs.append(zk)
        offset += t
    pobj, dobj = float(sol.obj_val), float(sol.obj_val_dual)
    ok = (status in ("Solved", "AlmostSolved") and abs(pobj - dobj) <= gap_tol
          and _certified_feasible(problem, x, feas_tol))
    res = _IpmResult(ok, x, -zvec[:n_eq], [], zs, pobj, dobj, sol.iterations)
    return _solution_from(problem, lp, res, SdpStatus.OPTIMAL if ok else SdpStatus.NUMERICAL_FAILURE, x)


_BACKENDS = {"ipm": _solve_ipm, "clarabel": _solve_clarabel}


def solve(problem: SdpProblem, gap_tol: float = 1e-8, feas_tol: float = 1e-8,
          max_iter: int = 200, backend: str = "ipm") -> SdpSolution:
    """Solve ``problem``.

    ``OPTIMAL`` guarantees ``|primal - dual| <= gap_tol`` and that every block is
    PSD to within ``feas_tol``.  ``NUMERICAL_FAILURE`` is inconclusive and must
    never be read as a verdict.
    """
    try:
        fn = _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}") from None
    return fn(problem, gap_tol, feas_tol, max_iter)


def restrict_to_face(problem: SdpProblem, block_duals: List[np.ndarray], tol: float = 1e-6) -> SdpProblem:
    """Restrict ``problem`` to the face exposed by dual matrices ``block_duals``.

    Every ``x`` optimal for a program with those duals satisfies
    ``F_k(x) range(Z_k) = 0``.  Each block is compressed to ``null(Z_k)`` and
    the removed parts become equalities; linearly dependent rows are dropped.
    Useful when the feasible set touches the boundary of the cone (no
    interior point), where interior-point iterates lose accuracy.
    """
    blocks, a_rows, b_rows = [], [problem.a_eq], [problem.b_eq]
    for blk, z in zip(problem.blocks, block_duals):
        w, v = np.linalg.eigh(z)
        on = w <= tol * max(1.0, w.max())
        keep, drop = v[:, on], v[:, ~on]
        if not drop.shape[1]:
            blocks.append(blk)
            continue
        if keep.shape[1]:
            blocks.append(PsdBlock(keep.conj().T @ blk.const @ keep,
                                   np.einsum("ia,kij,jb->kab", keep.conj(), blk.coeffs, keep)))
        for left, right, herm in ((drop, keep, False), (drop, drop, True)):
            c0 = left.conj().T @ blk.const @ right
            cc = np.einsum("ia,kij,jb->kab", left.conj(), blk.coeffs, right)
            if herm:
                iu = np.triu_indices(c0.shape[0])
                c0, cc = c0[iu], cc[:, iu[0], iu[1]]
            else:
                c0, cc = c0.ravel(), cc.reshape(cc.shape[0], -1)
            for part in (np.real, np.imag):
                a_rows.append(part(cc).T)
                b_rows.append(-part(c0))
    a_eq, b_eq = np.vstack(a_rows), np.concatenate(b_rows)
    nonzero = np.abs(a_eq).max(axis=1, initial=0.0) > 1e-12
    a_eq, b_eq = a_eq[nonzero], b_eq[nonzero]
    if a_eq.shape[0]:
        _, r, piv = sla.qr(a_eq.T, pivoting=True, mode="economic")
        diag = np.abs(np.diag(r))
        rows = np.sort(piv[:int(np.sum(diag > 1e-9 * diag[0]))])
        a_eq, b_eq = a_eq[rows], b_eq[rows]
    return SdpProblem(problem.c, blocks, a_eq, b_eq, problem.lower, problem.upper)
