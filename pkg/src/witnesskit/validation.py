"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

from typing import List, Sequence, Union

import numpy as np

from .qstate import BipartiteDims, DensityMatrix, DimsLike, PureState, as_dims


def check_dims(dims: DimsLike) -> BipartiteDims:
    try:
        return as_dims(dims)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid bipartite dimensions {dims!r}: {exc}") from None


def check_density_stack(X, dims: DimsLike) -> List[DensityMatrix]:
    """Coerce ``X`` into a list of validated density matrices on ``dims``.

    Accepts a single matrix, a 3-D array of matrices, or a sequence of
    :class:`DensityMatrix` / array-likes.
    """
    dims = check_dims(dims)
    if isinstance(X, DensityMatrix):
        X = [X]
    elif isinstance(X, np.ndarray) and X.ndim == 2:
        X = [X]
    out = []
    for i, item in enumerate(X):
        if isinstance(item, DensityMatrix):
            if item.dims != dims:
                raise ValueError(f"sample {i} has dims {item.dims.as_tuple()}, expected {dims.as_tuple()}")
            out.append(item)
            continue
        mat = np.asarray(item, dtype=complex)
        if mat.shape != (dims.total, dims.total):
            raise ValueError(f"sample {i} has shape {mat.shape}, expected {(dims.total,) * 2}")
        out.append(DensityMatrix(mat, dims))
    if not out:
        raise ValueError("no samples given")
    return out


def check_pure(state: Union[PureState, Sequence[complex], np.ndarray], dims: DimsLike) -> PureState:
    if isinstance(state, PureState):
        if state.dims != as_dims(dims):
            raise ValueError("pure state has the wrong dimensions")
        return state
    return PureState.from_vector(np.asarray(state, dtype=complex), dims)


def check_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or not np.isfinite(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p
