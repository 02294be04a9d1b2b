"""Distances between Choi matrices."""

import numpy as np

from .errors import DimensionMismatch, InputError
from .linalg import as_matrix, psd_sqrt


def _pair(a, b):
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return a, b


def _normalized(m):
    tr = np.trace(m).real
    if tr <= 0:
        raise InputError("Choi matrix must have positive trace")
    return m / tr


def hs_distance(a, b, normalize=False):
    """``Tr[(A - B)^2]``, optionally after dividing each matrix by its trace."""
    a, b = _pair(a, b)
    if normalize:
        a, b = _normalized(a), _normalized(b)
    diff = a - b
    return float(max(np.vdot(diff, diff).real, 0.0))


def uhlmann_fidelity(a, b):
    """``(Tr|sqrt(A) sqrt(B)|)^2`` on trace-normalised inputs."""
    a, b = _pair(a, b)
    sa = psd_sqrt(_normalized(a))
    sb = psd_sqrt(_normalized(b))
    s = np.linalg.svd(sa @ sb, compute_uv=False)
    return float(min(s.sum() ** 2, 1.0 + 1e-12))
