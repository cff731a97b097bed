"""The six reproducible experiments behind the command line.

Each runner takes a resolved configuration (see :mod:`witnesskit.config`)
and returns an :class:`ExperimentResult` whose rows are written verbatim
to CSV.  Wall-clock data never enters the rows, so reruns are byte-stable.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .certify import (PPT, U_TILDE2, CertSet, WitnessTuple, fidelity_envelope, max_first_fidelity,
                      noise_threshold, tuple_threshold)
from .noise import NoiseModel, NoisyFamily, faithful_witness
from .optimize import OptimizerConfig, optimize_tuple
from .qstate import (DensityMatrix, PureState, basis_product, eigenstates, ghz4, haar_random_pure,
                     heisenberg_xy, maximally_entangled, random_mixed)
from .sdp import SolverFailure

logger = logging.getLogger(__name__)

# tuple thresholds may exceed the separable bound by at most this much
REPORT_TOL = 1e-6

COLUMNS = {
    "pure-thresholds": ["state_id", "d", "measure", "noise_model", "p_sep_inf", "p_u2_sup", "status"],
    "table1": ["q1", "d", "noise_model", "p_sep_inf", "p_u2_sup", "f_fixed", "k", "max_f", "status"],
    "ghz": ["noise_model", "k", "p_sep_inf", "p_u2_sup", "max_f", "restarts", "status"],
    "xy": ["noise_model", "k", "p_sep_inf", "p_u2_sup", "max_f", "restarts", "status"],
    "random-scan": ["state_id", "rank", "p_sep_inf", "p_u2_sup", "max_f", "unfaithful_at_p0",
                    "advantage", "status"],
    "envelope": ["c", "v_ppt", "v_u2"],
}


@dataclass
class ExperimentResult:
    experiment: str
    columns: List[str]
    rows: List[dict]
    failed_ids: List[str] = field(default_factory=list)
    summary: Optional[dict] = None
    timings: Dict[str, float] = field(default_factory=dict)


def _optimizer_config(cfg: dict) -> OptimizerConfig:
    return OptimizerConfig(seed=cfg["seed"], **cfg["optimizer"])


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Ordered map, in worker processes when ``jobs > 1``."""
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _failure(exc: Exception) -> str:
    kind = "solver" if isinstance(exc, SolverFailure) else "error"
    return f"failed:{kind}"


def _check_report(row: dict, key: str = "max_f"):
    p_sep, val = row.get("p_sep_inf"), row.get(key)
    if p_sep is not None and val is not None and val > p_sep + REPORT_TOL:
        raise RuntimeError(f"tuple threshold {val} exceeds separable threshold {p_sep}")


# -- pure-thresholds ----------------------------------------------------------------------


def _explicit_state(spec, d: int) -> DensityMatrix:
    if spec == "maxent":
        return maximally_entangled(d).density()
    if spec == "product":
        return basis_product(0, 0, (d, d)).density()
    if isinstance(spec, dict):
        re = np.asarray(spec["re"], dtype=float)
        im = np.asarray(spec.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise ValueError("re and im parts differ in length")
        vec = re + 1j * im
    else:
        vec = np.asarray(spec, dtype=float).astype(complex)
    return PureState.from_vector(vec, (d, d)).density()


def _pure_item(args):
    state_id, rho, d, measure, noises = args
    rows = []
    for noise in noises:
        row = {"state_id": state_id, "d": d, "measure": measure, "noise_model": noise,
               "p_sep_inf": None, "p_u2_sup": None, "status": "ok"}
        try:
            fam = NoisyFamily(rho, NoiseModel(noise))
            row["p_sep_inf"] = noise_threshold(fam, PPT)
            row["p_u2_sup"] = noise_threshold(fam, U_TILDE2)
        except (SolverFailure, RuntimeError) as exc:
            row["status"] = _failure(exc)
        rows.append(row)
    return rows


MAX_DRAWS_PER_STATE = 200


def random_state(d: int, measure: str, rank: Optional[int], seed) -> DensityMatrix:
    """Haar (pure, or Hilbert-Schmidt when mixed) or Bures random state on ``d x d``."""
    if rank == 1:
        return haar_random_pure((d, d), seed=seed).density()
    return random_mixed((d, d), rank, "hilbert-schmidt" if measure == "haar" else measure, seed=seed)


def faithful_sample(d: int, count: int, measure: str = "haar", rank: Optional[int] = None, seed: int = 0):
    """First ``count`` draws that carry a faithfulness certificate, as ``(draw_index, state)``.

    Draw ``i`` is seeded by ``(seed, i)``, so the accepted states do not
    depend on how many are requested.
    """
    out = []
    for i in range(count * MAX_DRAWS_PER_STATE):
        rho = random_state(d, measure, rank, [seed, i])
        if faithful_witness(rho) is not None:
            out.append((i, rho))
            if len(out) == count:
                return out
    raise RuntimeError(f"only {len(out)} faithful states in {count * MAX_DRAWS_PER_STATE} draws")


def run_pure_thresholds(cfg: dict) -> ExperimentResult:
    d, seed = cfg["d"], cfg["seed"]
    items = []
    if cfg.get("states"):
        for i, spec in enumerate(cfg["states"]):
            try:
                rho = _explicit_state(spec, d)
            except ValueError as exc:
                from .config import ConfigError
                raise ConfigError(f"states[{i}]: {exc}") from None
            items.append((f"x{i:04d}", rho, d, "explicit", cfg["noise"]))
    else:
        for i, rho in faithful_sample(d, cfg["count"], cfg["measure"], cfg.get("rank") or d, seed):
            items.append((f"s{i:04d}", rho, d, cfg["measure"], cfg["noise"]))
    rows = [r for chunk in _map(_pure_item, items, cfg["jobs"]) for r in chunk]
    rows.sort(key=lambda r: (r["state_id"], r["noise_model"]))
    failed = sorted({r["state_id"] for r in rows if r["status"] != "ok"})
    return ExperimentResult("pure-thresholds", COLUMNS["pure-thresholds"], rows, failed)


# -- table1 -----------------------------------------------------------------------------------


def table1_state(q1: float, d: int = 4) -> DensityMatrix:
    """``q1 |phi+><phi+| + (1 - q1) |01><01|`` on ``d x d``."""
    phi1, phi2 = table1_tuple(d).psis
    return DensityMatrix.mixture([q1, 1.0 - q1], [phi1, phi2])


def table1_tuple(d: int = 4) -> WitnessTuple:
    return WitnessTuple([maximally_entangled(d), basis_product(0, 1, (d, d))])


def run_table1(cfg: dict) -> ExperimentResult:
    d, k = cfg["d"], cfg["k"][0]
    fixed = table1_tuple(d)
    opt_cfg = _optimizer_config(cfg)
    rows, timings = [], {}
    for q1 in cfg["q1"]:
        for noise in cfg["noise"]:
            row = {"q1": q1, "d": d, "noise_model": noise, "p_sep_inf": None, "p_u2_sup": None,
                   "f_fixed": None, "k": k if cfg["optimize"] else None, "max_f": None, "status": "ok"}
            try:
                fam = NoisyFamily(table1_state(q1, d), NoiseModel(noise))
                row["p_sep_inf"] = noise_threshold(fam, PPT)
                row["p_u2_sup"] = noise_threshold(fam, U_TILDE2)
                row["f_fixed"] = tuple_threshold(fam, fixed)
                if cfg["optimize"]:
                    res = optimize_tuple(fam, k, opt_cfg, initial=[fixed], jobs=cfg["jobs"])
                    if res.best_tuple is None:
                        raise SolverFailure("every optimizer restart failed")
                    row["max_f"] = res.best_value
                    timings[f"q1={q1}/{noise}"] = res.wall_time
                _check_report(row, "f_fixed")
                _check_report(row)
            except (SolverFailure, RuntimeError) as exc:
                row["status"] = _failure(exc)
            rows.append(row)
    failed = [f"q1={r['q1']}/{r['noise_model']}" for r in rows if r["status"] != "ok"]
    return ExperimentResult("table1", COLUMNS["table1"], rows, failed, timings=timings)


# -- ghz and xy ---------------------------------------------------------------------------


def xy_state(n: int = 4, j: float = 1.0, gamma: float = 0.5, h: float = 0.5,
             q=(0.7, 0.3)) -> DensityMatrix:
    """Mixture of the ground and first excited state of the periodic XY chain."""
    states = [s for _, s in eigenstates(heisenberg_xy(n, j, gamma, h), len(q))]
    return DensityMatrix.mixture(list(q), states)


def _threshold_rows(rho: DensityMatrix, cfg: dict, experiment: str):
    opt_cfg = _optimizer_config(cfg)
    rows, timings = [], {}
    for noise in cfg["noise"]:
        fam = NoisyFamily(rho, NoiseModel(noise))
        base = {"noise_model": noise, "p_sep_inf": None, "p_u2_sup": None}
        try:
            base["p_sep_inf"] = noise_threshold(fam, PPT)
            base["p_u2_sup"] = noise_threshold(fam, U_TILDE2)
        except (SolverFailure, RuntimeError) as exc:
            rows.append({**base, "k": None, "max_f": None, "restarts": None, "status": _failure(exc)})
            continue
        if not cfg["optimize"]:
            rows.append({**base, "k": None, "max_f": None, "restarts": None, "status": "ok"})
            continue
        previous = None
        for k in sorted(cfg["k"]):
            row = {**base, "k": k, "max_f": None, "restarts": opt_cfg.restarts, "status": "ok"}
            try:
                # the best smaller tuple seeds one restart, so values cannot drop with k
                initial = [previous] if previous is not None else None
                res = optimize_tuple(fam, k, opt_cfg, initial=initial, jobs=cfg["jobs"])
                if res.best_tuple is None:
                    raise SolverFailure("every optimizer restart failed")
                previous = res.best_tuple
                row["max_f"] = res.best_value
                timings[f"{noise}/k={k}"] = res.wall_time
                _check_report(row)
            except (SolverFailure, RuntimeError) as exc:
                row["status"] = _failure(exc)
            rows.append(row)
    failed = [f"{r['noise_model']}/k={r['k']}" for r in rows if r["status"] != "ok"]
    return ExperimentResult(experiment, COLUMNS[experiment], rows, failed, timings=timings)


def run_ghz(cfg: dict) -> ExperimentResult:
    return _threshold_rows(ghz4().density(), cfg, "ghz")


def run_xy(cfg: dict) -> ExperimentResult:
    xy = cfg["xy"]
    rho = xy_state(xy["n"], xy["j"], xy["gamma"], xy["h"], tuple(xy["q"]))
    return _threshold_rows(rho, cfg, "xy")


# -- random-scan ---------------------------------------------------------------------------


def _scan_item(args):
    state_id, rho, rank, noise, k, opt_cfg, optimize = args
    row = {"state_id": state_id, "rank": rank, "p_sep_inf": None, "p_u2_sup": None, "max_f": None,
           "unfaithful_at_p0": None, "advantage": None, "status": "ok"}
    wall = 0.0
    try:
        fam = NoisyFamily(rho, NoiseModel(noise))
        row["p_sep_inf"] = noise_threshold(fam, PPT)
        row["p_u2_sup"] = noise_threshold(fam, U_TILDE2)
        row["unfaithful_at_p0"] = row["p_u2_sup"] <= REPORT_TOL
        if optimize:
            res = optimize_tuple(fam, k, opt_cfg)
            if res.best_tuple is None:
                raise SolverFailure("every optimizer restart failed")
            row["max_f"], wall = res.best_value, res.wall_time
            if row["p_u2_sup"] > REPORT_TOL:
                row["advantage"] = row["max_f"] / row["p_u2_sup"] - 1.0
            _check_report(row)
    except (SolverFailure, RuntimeError) as exc:
        row["status"] = _failure(exc)
    return row, wall


def scan_summary(rows: List[dict]) -> dict:
    """Advantage statistics over entangled states not already certified unfaithful at ``p = 0``."""
    ok = [r for r in rows if r["status"] == "ok" and r["max_f"] is not None]
    denom = [r for r in ok if r["p_sep_inf"] > REPORT_TOL and not r["unfaithful_at_p0"]]
    wins = [r for r in denom if r["max_f"] > r["p_u2_sup"] + REPORT_TOL]
    ratios = [r["advantage"] for r in denom if r["advantage"] is not None]
    return {
        "n_states": len(rows),
        "n_ok": len(ok),
        "n_entangled": sum(r["p_sep_inf"] > REPORT_TOL for r in ok),
        "n_unfaithful_at_p0": sum(bool(r["unfaithful_at_p0"]) for r in ok),
        "n_denominator": len(denom),
        "n_advantage": len(wins),
        "advantage_fraction": len(wins) / len(denom) if denom else None,
        "mean_advantage": float(np.mean(ratios)) if ratios else None,
        "mean_advantage_definition": "mean over the denominator states of max_f / p_u2_sup - 1",
    }


def run_random_scan(cfg: dict) -> ExperimentResult:
    opt_cfg = _optimizer_config(cfg)
    measure = "haar" if cfg["measure"] == "haar" else "bures"
    items = []
    for i in range(cfg["count"]):
        rho = random_mixed((cfg["d"], cfg["d"]), cfg["rank"], measure, seed=[cfg["seed"], i])
        items.append((f"s{i:04d}", rho, cfg["rank"], cfg["noise"][0], cfg["k"][0], opt_cfg,
                      cfg["optimize"]))
    outcomes = _map(_scan_item, items, cfg["jobs"])
    rows = [row for row, _ in outcomes]
    timings = {row["state_id"]: wall for row, wall in outcomes}
    failed = [r["state_id"] for r in rows if r["status"] != "ok"]
    result = ExperimentResult("random-scan", COLUMNS["random-scan"], rows, failed, timings=timings)
    if cfg["optimize"]:
        result.summary = scan_summary(rows)
    return result


# -- envelope -----------------------------------------------------------------------------


def envelope_preset(name: str, d: int = 4) -> WitnessTuple:
    phi = maximally_entangled(d)
    if name == "maxent-vs-product":
        return WitnessTuple([phi, basis_product(0, 1, (d, d))])
    if name == "orthogonal-maxent":
        # (I x X)|phi+> with X the cyclic shift; orthogonal because tr X = 0
        shift = np.roll(np.eye(d), 1, axis=0)
        amps = (phi.as_matrix() @ shift.T).ravel()
        return WitnessTuple([phi, PureState.from_vector(amps, (d, d))])
    raise ValueError(f"unknown preset {name!r}")


_SET_COLUMNS = {"PPT": ("v_ppt", PPT), "U_tilde2": ("v_u2", U_TILDE2)}


def run_envelope(cfg: dict) -> ExperimentResult:
    psi1, psi2 = envelope_preset(cfg["preset"], cfg["d"]).psis
    sets = [_SET_COLUMNS[s] for s in cfg["sets"]]
    failed = []
    try:
        c_max = max(max_first_fidelity(psi1, cs) for _, cs in sets)
    except SolverFailure:
        return ExperimentResult("envelope", COLUMNS["envelope"], [], ["c_max"])
    grid = np.linspace(0.0, c_max, cfg["grid_size"])
    rows = [{"c": float(c), "v_ppt": None, "v_u2": None} for c in grid]
    for col, cs in sets:
        try:
            curve = fidelity_envelope(psi1, psi2, cs, c_values=grid)
        except SolverFailure:
            failed.append(f"{col}/c_max")
            continue
        for i, pt in enumerate(curve.points):
            if pt.status == "optimal":
                rows[i][col] = pt.v
            elif pt.status != "infeasible":
                failed.append(f"{col}/{i}")
    return ExperimentResult("envelope", COLUMNS["envelope"], rows, failed)


RUNNERS = {
    "pure-thresholds": run_pure_thresholds,
    "table1": run_table1,
    "ghz": run_ghz,
    "xy": run_xy,
    "random-scan": run_random_scan,
    "envelope": run_envelope,
}


def run(cfg: dict) -> ExperimentResult:
    t0 = time.perf_counter()
    result = RUNNERS[cfg["experiment"]](cfg)
    result.timings["total"] = time.perf_counter() - t0
    return result
