"""Noise thresholds for entanglement certified by fidelity-tuple witnesses.

Modules
-------
qstate     states, partial transpose, Schmidt decomposition, random ensembles, XY chain
noise      depolarizing / dephasing families and closed-form pure-state thresholds
sdp        dense Hermitian SDP solver (interior point, optional Clarabel backend)
certify    membership tests and noise thresholds for PPT, U_tilde and witness tuples
optimize   multi-start search for the best witness tuple
estimators scikit-learn style wrappers
cli        the ``witnesskit`` command line
"""

from .certify import (PPT, U_TILDE2, CertSet, WitnessTuple, fidelity_envelope, in_unfaithful_approx,
                      in_wk, noise_threshold, tuple_threshold)
from .noise import NoiseModel, NoisyFamily, apply_noise, pure_separable_threshold, pure_unfaithful_threshold
from .optimize import OptimizerConfig, OptResult, optimize_tuple
from .qstate import BipartiteDims, DensityMatrix, PureState, schmidt_decompose
from .sdp import SdpProblem, SdpStatus, SolverFailure, solve

__version__ = "0.1.0"

__all__ = [
    "PPT", "U_TILDE2", "CertSet", "WitnessTuple", "fidelity_envelope", "in_unfaithful_approx", "in_wk",
    "noise_threshold", "tuple_threshold", "NoiseModel", "NoisyFamily", "apply_noise",
    "pure_separable_threshold", "pure_unfaithful_threshold", "OptimizerConfig", "OptResult",
    "optimize_tuple", "BipartiteDims", "DensityMatrix", "PureState", "schmidt_decompose",
    "SdpProblem", "SdpStatus", "SolverFailure", "solve",
]
