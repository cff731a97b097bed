"""Search for witness tuples with the largest certified noise threshold.

Each candidate witness is parametrized by a free complex vector ``x`` pulled
toward an anchor state ``phi`` with strength ``m``::

    embed(x; m, phi) = normalize(x / |x| + m phi)

Large ``m`` keeps the candidates near their anchors, where the threshold is
usually nonzero and has a useful gradient.  The anchors are refreshed and
``m`` is decayed stage by stage, ending with a stage at ``m = 0``.  Each
stage runs Adam-style ascent.  Restarts start near the leading eigenvectors
of the noiseless state (perturbed after the first restart) or, with
``anchor_init="random"``, at random anchors.  Gradients come from the duals of
the threshold program, with central differences as a cross-check.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .certify import WitnessTuple, tuple_threshold, tuple_threshold_sensitivity
from .noise import NoisyFamily
from .qstate import BipartiteDims, PureState
from .sdp import SolverFailure

logger = logging.getLogger(__name__)

_JITTER_RNG_SEED = 20240611


@dataclass(frozen=True, eq=False)
class EmbeddingParams:
    m: float
    anchors: Tuple[PureState, ...]

    def __post_init__(self):
        if not np.isfinite(self.m) or self.m < 0:
            raise ValueError(f"anchor strength must be finite and >= 0, got {self.m}")
        object.__setattr__(self, "anchors", tuple(self.anchors))


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    steps_per_stage: int = 200
    step_size: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    fd_step: float = 1e-4
    m0: float = 4.0
    m_decay: float = 0.5
    m_floor: float = 0.05
    anchor_refresh: bool = True
    anchor_init: str = "eigen"
    anchor_noise: float = 0.3
    start_noise: float = 0.1
    gradient: str = "dual"
    patience: Optional[int] = 40
    seed: int = 0

    def __post_init__(self):
        for name in ("restarts", "steps_per_stage"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("step_size", "fd_step", "m_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.m0 < 0 or not 0 < self.m_decay < 1:
            raise ValueError("need m0 >= 0 and 0 < m_decay < 1")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("moment constants must lie in [0, 1)")
        if self.gradient not in ("dual", "fd"):
            raise ValueError("gradient must be 'dual' or 'fd'")
        if self.anchor_init not in ("eigen", "random"):
            raise ValueError("anchor_init must be 'eigen' or 'random'")

    def schedule(self) -> List[float]:
        """Anchor strengths, one per stage, ending with 0."""
        out = []
        m = self.m0
        while m >= self.m_floor:
            out.append(m)
            m *= self.m_decay
        return out + [0.0]


@dataclass
class RestartTrace:
    seed: Tuple[int, int]
    stages: List[float]
    values: List[float]
    final: float
    failed: bool = False


@dataclass
class OptResult:
    best_tuple: Optional[WitnessTuple]
    best_value: float
    trace: List[RestartTrace] = field(default_factory=list)
    wall_time: float = 0.0


def embed(x: np.ndarray, params: EmbeddingParams, i: int) -> PureState:
    anchor = params.anchors[i]
    x = np.asarray(x, dtype=complex).ravel()
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("cannot embed the zero vector")
    v = x / nx + params.m * anchor.amps
    if np.linalg.norm(v) < 1e-12:
        jitter = np.random.default_rng(_JITTER_RNG_SEED).standard_normal((2, v.size)) * 1e-9
        v = v + jitter[0] + 1j * jitter[1]
    return PureState.from_vector(v, anchor.dims)


def _embed_backward(x: np.ndarray, params: EmbeddingParams, i: int, g_psi: np.ndarray) -> np.ndarray:
    """Pull a packed gradient ``dF/dRe + 1j dF/dIm`` back from the state to ``x``."""
    nx = np.linalg.norm(x)
    u = x / nx
    v = u + params.m * params.anchors[i].amps
    nv = np.linalg.norm(v)
    psi = v / nv
    g_v = (g_psi - psi * np.real(np.vdot(psi, g_psi))) / nv
    return (g_v - u * np.real(np.vdot(u, g_v))) / nx


def _tuple(xs: Sequence[np.ndarray], params: EmbeddingParams) -> WitnessTuple:
    return WitnessTuple([embed(x, params, i) for i, x in enumerate(xs)])


def objective(xs: Sequence[np.ndarray], params: EmbeddingParams, family: NoisyFamily) -> float:
    """Tuple threshold of the embedded candidates."""
    return tuple_threshold(family, _tuple(xs, params))


def _pack(xs: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.concatenate([x.real, x.imag]) for x in xs])


def _unpack(theta: np.ndarray, k: int) -> List[np.ndarray]:
    n = theta.size // (2 * k)
    parts = theta.reshape(k, 2, n)
    return [p[0] + 1j * p[1] for p in parts]


def fd_gradient(xs: Sequence[np.ndarray], params: EmbeddingParams, family: NoisyFamily,
                fd_step: float = 1e-4, fn: Optional[Callable] = None) -> np.ndarray:
    """Central-difference gradient over the real and imaginary parts of every ``x``.

    Layout: for each candidate, real parts then imaginary parts.  ``fn`` replaces
    :func:`objective` (same signature).
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    fn = objective if fn is None else fn
    xs = [np.asarray(x, dtype=complex).ravel() for x in xs]
    k = len(xs)
    theta = _pack(xs)
    grad = np.zeros_like(theta)
    for j in range(theta.size):
        step = np.zeros_like(theta)
        step[j] = fd_step
        hi = fn(_unpack(theta + step, k), params, family)
        lo = fn(_unpack(theta - step, k), params, family)
        grad[j] = (hi - lo) / (2 * fd_step)
    return grad


def dual_gradient(xs: Sequence[np.ndarray], params: EmbeddingParams, family: NoisyFamily
                  ) -> Tuple[float, np.ndarray]:
    """Objective value and its gradient (same layout as :func:`fd_gradient`) from one solve."""
    xs = [np.asarray(x, dtype=complex).ravel() for x in xs]
    sens = tuple_threshold_sensitivity(family, _tuple(xs, params))
    pulled = [_embed_backward(x, params, i, g) for i, (x, g) in enumerate(zip(xs, sens.grads))]
    return sens.value, _pack(pulled)


def _initial_anchors(family: NoisyFamily, k: int, rng: np.random.Generator, restart: int,
                     config: OptimizerConfig) -> List[np.ndarray]:
    n = family.dims.total
    rand = lambda: rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if config.anchor_init == "random":
        return [rand() for _ in range(k)]
    # leading eigenvectors of the noiseless state; restart 0 uses them unperturbed
    vals, vecs = np.linalg.eigh(family.base.mat)
    order = np.argsort(vals)[::-1]
    out = []
    for i in range(k):
        if i < n and vals[order[i]] > 1e-10:
            v = vecs[:, order[i]].astype(complex)
        else:
            v = rand()
            v /= np.linalg.norm(v)
        if restart > 0:
            w = rand()
            v = v + config.anchor_noise * w / np.linalg.norm(w)
        out.append(v / np.linalg.norm(v))
    return out


def _run_restart(family: NoisyFamily, k: int, config: OptimizerConfig, restart: int):
    rng = np.random.default_rng([config.seed, restart])
    n = family.dims.total
    if config.anchor_init == "random":
        # anchors are the embedded starting points themselves
        xs = [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(k)]
        anchors = [PureState.from_vector(x, family.dims) for x in xs]
        return _ascend(family, k, config, restart, xs, anchors)
    anchors = [PureState.from_vector(a, family.dims)
               for a in _initial_anchors(family, k, rng, restart, config)]
    # start slightly off the anchors so the embedding has a direction to move in
    xs = []
    for a in anchors:
        w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        xs.append(a.amps + config.start_noise * w / np.linalg.norm(w))
    return _ascend(family, k, config, restart, xs, anchors)


def _ascend(family: NoisyFamily, k: int, config: OptimizerConfig, restart: int,
            xs: List[np.ndarray], anchors: List[PureState]):
    theta = _pack(xs)
    best_value, best_tuple = -np.inf, None
    stages, values = [], []

    for m in config.schedule():
        params = EmbeddingParams(m, anchors)
        mom1 = np.zeros_like(theta)
        mom2 = np.zeros_like(theta)
        stage_best, stale, failures = -np.inf, 0, 0
        prev = None
        for step in range(1, config.steps_per_stage + 1):
            cur = _unpack(theta, k)
            try:
                if config.gradient == "dual":
                    value, grad = dual_gradient(cur, params, family)
                else:
                    value = objective(cur, params, family)
                    grad = fd_gradient(cur, params, family, config.fd_step)
            except SolverFailure:
                # step back halfway toward the last good point; give up after repeated failures
                failures += 1
                if prev is None or failures > 5:
                    raise
                theta = 0.5 * (theta + prev)
                continue
            prev = theta.copy()
            if value > best_value:
                best_value, best_tuple = value, _tuple(cur, params)
            if value > stage_best + 1e-9:
                stage_best, stale = value, 0
            else:
                stale += 1
                if config.patience is not None and stale >= config.patience:
                    break
            mom1 = config.beta1 * mom1 + (1 - config.beta1) * grad
            mom2 = config.beta2 * mom2 + (1 - config.beta2) * grad**2
            m_hat = mom1 / (1 - config.beta1**step)
            v_hat = mom2 / (1 - config.beta2**step)
            theta = theta + config.step_size * m_hat / (np.sqrt(v_hat) + 1e-12)
        stages.append(m)
        values.append(stage_best)
        logger.debug("restart %d stage m=%.4g best=%.8f", restart, m, stage_best)
        if config.anchor_refresh:
            anchors = list(_tuple(_unpack(theta, k), params).psis)
    return best_value, best_tuple, RestartTrace((config.seed, restart), stages, values, best_value)


def _run_job(family: NoisyFamily, k: int, config: OptimizerConfig, restart: int,
             seed_tuple: Optional[WitnessTuple]):
    try:
        if seed_tuple is None:
            return _run_restart(family, k, config, restart)
        return _run_seeded(family, k, config, restart, seed_tuple)
    except (SolverFailure, RuntimeError) as exc:
        logger.warning("restart %d aborted: %s", restart, exc)
        return -np.inf, None, RestartTrace((config.seed, restart), [], [], float("nan"), failed=True)


def optimize_tuple(family: NoisyFamily, k: int, config: OptimizerConfig = OptimizerConfig(),
                   initial: Optional[Sequence[WitnessTuple]] = None, jobs: int = 1) -> OptResult:
    """Multi-start search for the witness tuple of size ``k`` with the largest threshold.

    ``initial`` optionally seeds extra restarts whose anchors are the given
    tuples (padded with random states when shorter than ``k``).  With
    ``jobs > 1`` restarts run in worker processes; every restart draws from
    its own ``(seed, restart)`` stream, so the result does not depend on ``jobs``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    t0 = time.perf_counter()
    jobs_list = [(r, None) for r in range(config.restarts)]
    for j, tup in enumerate(initial or ()):
        jobs_list.append((config.restarts + j, tup))

    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(jobs_list))) as pool:
            futures = [pool.submit(_run_job, family, k, config, r, tup) for r, tup in jobs_list]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_run_job(family, k, config, r, tup) for r, tup in jobs_list]

    best_value, best_tuple = -np.inf, None
    traces = []
    for value, tup, trace in outcomes:
        traces.append(trace)
        if tup is not None and value > best_value:
            best_value, best_tuple = value, tup

    if best_tuple is not None:
        # report the value recomputed on the returned tuple itself
        best_value = tuple_threshold(family, best_tuple)
    return OptResult(best_tuple, float(best_value), traces, time.perf_counter() - t0)


def _run_seeded(family: NoisyFamily, k: int, config: OptimizerConfig, restart: int,
                seed_tuple: WitnessTuple):
    rng = np.random.default_rng([config.seed, restart])
    n = family.dims.total
    psis = list(seed_tuple.psis)[:k]
    while len(psis) < k:
        psis.append(PureState.from_vector(rng.standard_normal(n) + 1j * rng.standard_normal(n), family.dims))
    # start exactly on the seed tuple: x equals its anchor, so embed() returns it for any m
    return _ascend(family, k, config, restart, [p.amps.copy() for p in psis], psis)
