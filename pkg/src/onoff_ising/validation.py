"""Input coercion and argument checks shared by the estimator and the CLI."""

from __future__ import annotations

import numbers

import numpy as np
import scipy.sparse as sp

from .core import DOMAINS, SPIN, DimensionError, IsingProblem
from .problems import WeightedGraph, maxcut_encode


def check_problem(X, bias=None, domain: str = SPIN) -> IsingProblem:
    """Coerce ``X`` to an :class:`IsingProblem`.

    Accepts an ``IsingProblem`` (returned as is), a ``WeightedGraph``
    (MAX-CUT encoding) or a square dense / sparse coupling matrix.
    """
    if isinstance(X, IsingProblem):
        if bias is not None:
            raise ValueError("bias must be part of the IsingProblem when one is given")
        return X
    if isinstance(X, WeightedGraph):
        return maxcut_encode(X)
    if domain not in DOMAINS:
        raise ValueError(f"domain must be one of {DOMAINS}, got {domain!r}")
    if sp.issparse(X):
        m = X
    else:
        m = np.asarray(X, dtype=np.float64)
        if m.ndim != 2:
            raise DimensionError(f"coupling matrix must be 2-D, got {m.ndim}-D")
    if not np.all(np.isfinite(m.data if sp.issparse(m) else m)):
        raise ValueError("coupling matrix contains non-finite values")
    return IsingProblem(m, bias, domain)


def check_count(value, name: str, minimum: int = 0) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name: str) -> float:
    v = float(value)
    if not v > 0 or not np.isfinite(v):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return v


def check_choice(value, name: str, choices) -> str:
    if value not in choices:
        raise ValueError(f"{name} must be one of {tuple(choices)}, got {value!r}")
    return value
