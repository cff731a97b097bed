"""Estimator-style wrappers (``fit`` / ``transform`` / ``predict``).

These let the threshold computations slot into scikit-learn tooling:
hyper-parameters live in ``__init__`` and are exposed by ``get_params``,
learned quantities end in ``_``.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .certify import CertSet, WitnessTuple, in_wk, noise_threshold, tuple_threshold
from .noise import NoiseModel, NoisyFamily
from .optimize import OptimizerConfig, optimize_tuple
from .validation import check_density_stack, check_dims


class NoiseThresholdTransformer(TransformerMixin, BaseEstimator):
    """Map each density matrix to its noise thresholds.

    Columns of ``transform`` follow ``cert_sets`` (default: separable bound
    from PPT, then the unfaithful bound).
    """

    def __init__(self, dims=(2, 2), noise: str = "depolarizing",
                 cert_sets: Sequence[str] = ("PPT", "U_tilde")):
        self.dims = dims
        self.noise = noise
        self.cert_sets = cert_sets

    def fit(self, X=None, y=None):
        self.dims_ = check_dims(self.dims)
        self.noise_ = NoiseModel(self.noise)
        self.cert_sets_ = [CertSet(c) for c in self.cert_sets]
        if not self.cert_sets_:
            raise ValueError("cert_sets must not be empty")
        if X is not None:
            check_density_stack(X, self.dims_)
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "dims_"):
            raise NotFittedError("call fit before transform")
        states = check_density_stack(X, self.dims_)
        out = np.empty((len(states), len(self.cert_sets_)))
        for i, rho in enumerate(states):
            fam = NoisyFamily(rho, self.noise_)
            for j, cs in enumerate(self.cert_sets_):
                out[i, j] = noise_threshold(fam, cs)
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array([f"threshold_{c}" for c in self.cert_sets_], dtype=object)


class WitnessSearch(BaseEstimator):
    """Search a ``k``-tuple of witness states for one reference state.

    ``fit(rho)`` runs the multi-start optimizer; afterwards ``predict``
    flags states whose entanglement the found tuple certifies.
    """

    def __init__(self, dims=(2, 2), k: int = 2, noise: str = "depolarizing",
                 restarts: int = 8, steps_per_stage: int = 200, step_size: float = 0.05,
                 m0: float = 4.0, m_decay: float = 0.5, gradient: str = "dual",
                 seed: int = 0):
        self.dims = dims
        self.k = k
        self.noise = noise
        self.restarts = restarts
        self.steps_per_stage = steps_per_stage
        self.step_size = step_size
        self.m0 = m0
        self.m_decay = m_decay
        self.gradient = gradient
        self.seed = seed

    def _config(self) -> OptimizerConfig:
        return OptimizerConfig(restarts=self.restarts, steps_per_stage=self.steps_per_stage,
                               step_size=self.step_size, m0=self.m0, m_decay=self.m_decay,
                               gradient=self.gradient, seed=self.seed)

    def fit(self, X, y=None, initial: Optional[Sequence[WitnessTuple]] = None):
        states = check_density_stack(X, self.dims)
        if len(states) != 1:
            raise ValueError("WitnessSearch fits exactly one reference state")
        if int(self.k) < 1:
            raise ValueError("k must be >= 1")
        family = NoisyFamily(states[0], NoiseModel(self.noise))
        result = optimize_tuple(family, int(self.k), self._config(), initial=initial)
        if result.best_tuple is None:
            raise RuntimeError("every optimizer restart failed")
        self.family_ = family
        self.witnesses_ = result.best_tuple
        self.threshold_ = result.best_value
        self.result_ = result
        return self

    def _check_fitted(self):
        if not hasattr(self, "witnesses_"):
            raise NotFittedError("call fit first")

    def predict(self, X) -> np.ndarray:
        """``True`` where the fitted tuple certifies the state as entangled."""
        self._check_fitted()
        return np.array([not in_wk(rho, self.witnesses_) for rho in check_density_stack(X, self.dims)])

    def score(self, X, y=None) -> float:
        """Certified threshold of the fitted tuple on the first state of ``X``."""
        self._check_fitted()
        rho = check_density_stack(X, self.dims)[0]
        return tuple_threshold(NoisyFamily(rho, self.family_.model), self.witnesses_)
