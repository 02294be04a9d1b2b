"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Composite indices
follow the ``numpy.kron`` convention: the leftmost tensor factor is the most
significant, so for ``a`` of shape ``(m, n)`` and ``b`` of shape ``(p, q)``::

    kron(a, b)[i*p + k, j*q + l] == a[i, j] * b[k, l]

``partial_trace`` uses the same convention, which is what makes the two
round-trip.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import (
    BadSubsystemIndex,
    DimensionMismatch,
    EmptyInput,
    NotHermitian,
    NotPSD,
    NotSquare,
    RankDeficient,
    ShapeMismatch,
    Singular,
)

HERMITIAN_TOL = 1e-10
PSD_CLIP_TOL = 1e-8


def as_matrix(m):
    """Coerce ``m`` to a finite 2-D complex array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def fro(m):
    return float(np.linalg.norm(m))


def _require_square(m):
    if m.shape[0] != m.shape[1]:
        raise NotSquare(f"matrix of shape {m.shape} is not square")


def hermitian_defect(m):
    """Relative Hermiticity defect ``||m - m^†||_F / max(1, ||m||_F)``."""
    return fro(m - dagger(m)) / max(1.0, fro(m))


def check_hermitian(m, tol=HERMITIAN_TOL):
    m = as_matrix(m)
    _require_square(m)
    defect = hermitian_defect(m)
    if defect > tol:
        raise NotHermitian(f"Hermiticity defect {defect:.3e} exceeds {tol:.1e}")
    return m


def _fix_phases(vecs):
    # Make the first non-negligible component of every column real positive.
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size:
            c = col[idx[0]]
            out[:, j] = col * (abs(c) / c)
    return out


def hermitian_eig(m):
    """Eigendecomposition of a Hermitian matrix.

    Returns:
        ``(w, v)`` with real eigenvalues ``w`` sorted in descending order and
        orthonormal eigenvector columns ``v`` such that
        ``v @ diag(w) @ v^† == m``. Each eigenvector's first non-negligible
        component is real and positive.

    Raises:
        NotSquare, NotHermitian
    """
    m = check_hermitian(m)
    h = 0.5 * (m + dagger(m))
    w, v = np.linalg.eigh(h)
    order = np.argsort(-w, kind="stable")
    return w[order], _fix_phases(v[:, order])


def qr_orthonormalize(m, tol=1e-10):
    """Orthonormal basis of the column span of ``m`` (thin QR).

    Columns are sign-fixed so that ``R`` has a positive real diagonal, which
    makes the result unique and leaves orthonormal inputs unchanged.
    """
    m = as_matrix(m)
    rows, cols = m.shape
    if rows < cols:
        raise RankDeficient(f"{rows}x{cols} matrix cannot have full column rank")
    q, r = np.linalg.qr(m)
    diag = np.diag(r)
    scale = max(np.max(np.abs(diag)), np.finfo(float).tiny)
    if np.any(np.abs(diag) <= tol * scale) or np.max(np.abs(diag)) == 0:
        raise RankDeficient("matrix is numerically rank deficient")
    phases = diag / np.abs(diag)
    return q * phases[np.newaxis, :]


def numerical_rank(vectors, tol=1e-8):
    """Rank of a collection of equally shaped matrices, viewed as vectors.

    Counts singular values of the stacked vectorisations that exceed
    ``tol`` times the largest one.
    """
    mats = [np.asarray(v, dtype=complex) for v in vectors]
    if not mats:
        raise EmptyInput("no matrices given")
    shape = mats[0].shape
    if any(x.shape != shape for x in mats):
        raise ShapeMismatch("all matrices must share one shape")
    if tol <= 0:
        raise ValueError("tol must be positive")
    stacked = np.stack([x.ravel() for x in mats])
    s = np.linalg.svd(stacked, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def kron(*mats):
    """Kronecker product of one or more matrices, leftmost most significant."""
    out = as_matrix(mats[0])
    for m in mats[1:]:
        out = np.kron(out, as_matrix(m))
    return out


def partial_trace(m, dims, keep):
    """Trace out every subsystem of ``m`` not listed in ``keep``.

    Args:
        m: square matrix on ``H_0 ⊗ H_1 ⊗ ... `` with ``dims[i] = dim H_i``.
        dims: subsystem dimensions.
        keep: indices of subsystems to keep; their relative order is preserved.
    """
    m = as_matrix(m)
    _require_square(m)
    dims = [int(d) for d in dims]
    if any(d <= 0 for d in dims):
        raise DimensionMismatch("subsystem dimensions must be positive")
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not multiply to {m.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise BadSubsystemIndex(f"keep={keep} out of range for {n} subsystems")
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in traced:
        col[i] = row[i]
    out_idx = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out_idx, t)
    d_out = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(d_out, d_out)


def psd_sqrt(m):
    """Principal square root of a Hermitian PSD matrix.

    Eigenvalues down to ``-1e-8`` are treated as rounding noise and clipped to
    zero; anything more negative raises :class:`NotPSD`.
    """
    w, v = hermitian_eig(m)
    if w.size and w[-1] < -PSD_CLIP_TOL:
        raise NotPSD(f"smallest eigenvalue {w[-1]:.3e} is below -{PSD_CLIP_TOL:g}")
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)) @ dagger(v)
    return 0.5 * (s + dagger(s))


def solve_small_linear(a, b):
    """Solve ``a @ x = b`` for a small dense square ``a``.

    Raises:
        Singular: if the factorisation fails or the residual exceeds
            ``1e-9 * max(1, ||b||_F)``.
    """
    a = as_matrix(a)
    b = np.asarray(b, dtype=complex)
    _require_square(a)
    if b.shape[0] != a.shape[0]:
        raise ShapeMismatch(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        try:
            x = scipy.linalg.solve(a, b, check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise Singular(str(exc)) from exc
        resid = fro(a @ x - b)
    if not np.isfinite(resid) or resid > 1e-9 * max(1.0, fro(b)):
        raise Singular(f"residual {resid:.3e} too large (cond ~ {np.linalg.cond(a):.3e})")
    return x


def random_hermitian(dim, rng):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + dagger(g))


def random_density(dim, rng, rank=None):
    """Random density matrix from a Ginibre sample of the given rank."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_unitary(dim, rng):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return qr_orthonormalize(g)
