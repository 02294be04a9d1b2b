"""Rank-R approximation of density operators and worst-case error bounds.

Two truncation distances are provided on purpose:

* :func:`truncation_distance_bound_form` evaluates
  ``Σ_{i>=R} λ_i^2 + (Σ_{i>=R} λ_i)^2 / R^2``, the expression the bound
  formulas are derived from;
* :func:`truncation_distance_direct` evaluates ``Tr[(σ - ρ)^2]`` for the
  optimal rank-R state ``σ``, which works out to
  ``Σ_{i>=R} λ_i^2 + (Σ_{i>=R} λ_i)^2 / R``.

They differ for any state with a non-trivial tail. Bound-dominance checks use
the first, physical distances use the second.
"""

import dataclasses
import enum
import math

import numpy as np

from .errors import BadPurity, BadRank, InfeasibleConstraints
from .linalg import dagger, hermitian_eig

PURITY_SLACK = 1e-12


class Branch(str, enum.Enum):
    LOW_RANK = "low_rank"  # R < K - 1
    HIGH_RANK = "high_rank"  # K <= R
    BOTH = "both"  # R == K - 1, neither stated case; max of the two formulas


@dataclasses.dataclass
class BoundResult:
    purity: float
    rank: int
    dim: int
    trace: float
    K: int
    branch: Branch
    beta_plus: float | None
    beta_minus_at: dict
    bound: float
    worst_spectrum: np.ndarray
    argmax_l: int | None = None  # best support size l of the high-rank profile, if evaluated

    @property
    def flagged(self):
        return self.branch is Branch.BOTH


def as_spectrum(values):
    """Sorted-descending copy of ``values`` with tiny negatives clipped."""
    s = np.sort(np.asarray(values, dtype=float))[::-1]
    if s.size and s[-1] < -1e-12:
        raise ValueError("spectrum has negative entries")
    return np.clip(s, 0.0, None)


def purity_of(spectrum):
    s = np.asarray(spectrum, dtype=float)
    return float(np.dot(s, s))


def _check_rank(r, d):
    if not 1 <= r <= d:
        raise BadRank(f"rank {r} outside 1..{d}")


def optimal_rank_r(rho, r):
    """Closest rank-``r`` density operator to ``rho`` in Hilbert-Schmidt distance.

    ``σ = Π ρ Π + (1 - Tr[Π ρ Π]) Π / r`` with ``Π`` the projector onto the
    top-``r`` eigenvectors of ``ρ``.

    Returns:
        ``(sigma, d_direct)`` where ``d_direct = Tr[(σ - ρ)^2]``.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    _check_rank(r, d)
    tr = np.trace(rho).real
    if abs(tr - 1) > 1e-9:
        raise ValueError(f"rho must be normalised, trace is {tr}")
    _, vecs = hermitian_eig(rho)
    top = vecs[:, :r]
    proj = top @ dagger(top)
    kept = proj @ rho @ proj
    sigma = kept + (1.0 - np.trace(kept).real) / r * proj
    sigma = 0.5 * (sigma + dagger(sigma))
    diff = sigma - rho
    return sigma, float(np.vdot(diff, diff).real)


def truncation_distance_bound_form(spectrum, r):
    s = as_spectrum(spectrum)
    _check_rank(r, s.size)
    tail = s[r:]
    return float(np.dot(tail, tail) + tail.sum() ** 2 / r**2)


def truncation_distance_direct(spectrum, r):
    """Independent oracle: build σ on ``diag(spectrum)`` and evaluate ``Tr[(σ-ρ)^2]``."""
    s = as_spectrum(spectrum)
    _check_rank(r, s.size)
    sigma = np.zeros_like(s)
    sigma[:r] = s[:r] + (1.0 - s[:r].sum()) / r
    return float(np.sum((sigma - s) ** 2))


def _bound_form_batch(spectra, r):
    # spectra: (n, d) sorted descending rows
    tail = spectra[:, r:]
    return np.sum(tail * tail, axis=1) + tail.sum(axis=1) ** 2 / r**2


def _k_of(purity):
    return max(1, math.ceil(1.0 / purity - 1e-9))


def beta_plus(x, purity):
    if x == 1:
        return 1.0
    return 1.0 / x + math.sqrt(max(0.0, (purity - 1.0 / x) / (x * (x - 1))))


def beta_minus(x, purity):
    """``1/x - sqrt((P - 1/x) / (x (x - 1)))``; ``None`` when the root is imaginary."""
    if purity >= 1 - PURITY_SLACK:
        return 0.0
    if x == 1:
        return None
    arg = (purity - 1.0 / x) / (x * (x - 1))
    if arg < -PURITY_SLACK:
        return None
    return max(0.0, 1.0 / x - math.sqrt(max(0.0, arg)))


def _low_rank(purity, r, k):
    bp = beta_plus(k, purity)
    value = purity - r * bp**2 + (1.0 - r * bp) ** 2 / r**2
    spec = np.zeros(k)
    spec[: k - 1] = bp
    spec[k - 1] = 1.0 - (k - 1) * bp
    return max(value, 0.0), bp, spec


def _high_rank(purity, r, k, dim):
    betas = {}
    best = (-1.0, None, None)
    for l in range(max(r, k), dim + 1):
        bm = beta_minus(l, purity)
        if bm is None:
            continue
        betas[l] = bm
        value = (l - r) * (1.0 + (l - r) / r**2) * bm**2
        if value > best[0]:
            spec = np.full(l, bm)
            spec[0] = 1.0 - (l - 1) * bm
            best = (value, l, spec)
    return best[0], best[1], best[2], betas


def purity_rank_bound(purity, rank, dim, trace=1.0):
    """Worst-case HS error of the best rank-``rank`` approximation at fixed purity.

    The value is the bound for a normalised state times ``trace**2``. The
    branch is picked from ``K = ceil(1/purity)``: ``rank < K - 1`` uses the
    profile with ``K - 1`` equal leading eigenvalues, ``rank >= K`` scans the
    support size ``l`` of the profile with one dominant eigenvalue and
    ``l - 1`` equal ones. ``rank == K - 1`` evaluates both and keeps the
    larger.
    """
    dim = int(dim)
    rank = int(rank)
    if not 1.0 / dim - PURITY_SLACK <= purity <= 1.0 + PURITY_SLACK:
        raise BadPurity(f"purity {purity} outside [1/{dim}, 1]")
    if not 1 <= rank < dim:
        raise BadRank(f"rank {rank} outside 1..{dim - 1}")
    if trace <= 0:
        raise ValueError("trace must be positive")
    purity = min(max(purity, 1.0 / dim), 1.0)
    k = min(_k_of(purity), dim)
    scale = trace**2

    candidates = []
    bp = None
    betas = {}
    l_high = None
    if rank <= k - 1:
        lo, bp, spec = _low_rank(purity, rank, k)
        candidates.append((lo, None, spec))
    if rank >= k - 1:
        hi, l_high, spec, betas = _high_rank(purity, rank, k, dim)
        if l_high is not None:
            candidates.append((hi, l_high, spec))
    if rank < k - 1:
        branch = Branch.LOW_RANK
    elif rank >= k:
        branch = Branch.HIGH_RANK
    else:
        branch = Branch.BOTH
    value, _, spec = max(candidates, key=lambda c: c[0])
    worst = np.zeros(dim)
    worst[: spec.size] = spec
    return BoundResult(
        purity=purity,
        rank=rank,
        dim=dim,
        trace=trace,
        K=k,
        branch=branch,
        beta_plus=bp,
        beta_minus_at=betas,
        bound=scale * value,
        worst_spectrum=worst,
        argmax_l=l_high,
    )


def project_to_moments(spectra, purity, iters=200, tol=1e-12):
    """Map nonnegative rows onto ``{Σλ = 1, Σλ² = purity, λ >= 0}``.

    Alternates a radial rescale about the uniform vector on the current
    support (which fixes the second moment while keeping the sum) with
    clipping of negative entries. Rows that cannot be repaired come back
    with ``valid == False``.

    Returns:
        ``(spectra, valid)``; spectra are sorted descending.
    """
    x = np.clip(np.array(spectra, dtype=float, copy=True), 0.0, None)
    n, d = x.shape
    sums = x.sum(axis=1, keepdims=True)
    sums[sums == 0] = 1.0
    x /= sums
    valid = np.ones(n, dtype=bool)
    for _ in range(iters):
        support = x > 0
        m = support.sum(axis=1)
        u = 1.0 / m
        q = np.sum(x * x, axis=1)
        excess = q - u
        need = purity - u
        bad = (need < -1e-15) | ((excess <= 1e-300) & (need > 1e-15))
        valid &= ~bad
        t = np.sqrt(np.clip(need, 0.0, None) / np.where(excess > 1e-300, excess, 1.0))
        t = np.where(bad, 1.0, t)
        x = np.where(support, u[:, None] + t[:, None] * (x - u[:, None]), 0.0)
        x = np.clip(x, 0.0, None)
        x /= x.sum(axis=1, keepdims=True)
        resid = np.abs(np.sum(x * x, axis=1) - purity)
        if np.all(resid[valid] <= tol):
            break
    resid = np.abs(np.sum(x * x, axis=1) - purity)
    valid &= resid <= 1e-10
    return -np.sort(-x, axis=1), valid


def _random_spectra(rng, n, dim, k_min):
    # Random supports of at least k_min entries, Dirichlet weights with
    # log-uniform concentration so both peaked and flat profiles appear.
    sizes = rng.integers(k_min, dim + 1, size=n)
    alpha = np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=n))
    g = rng.gamma(alpha[:, None], size=(n, dim))
    mask = np.arange(dim)[None, :] < sizes[:, None]
    g = np.where(mask, g, 0.0) + np.where(mask, 1e-12, 0.0)
    return g


def simplex_worst_case_oracle(purity, rank, dim, samples=100_000, seed=0, workers=1, refine_steps=3000):
    """Numerically maximise :func:`truncation_distance_bound_form` over feasible spectra.

    Random search over descending spectra with fixed sum and purity followed
    by a shrinking-perturbation hill climb from the best sample. Samples are
    split over ``workers`` independent streams spawned from ``seed``, and the
    result is the maximum over streams, so a fixed ``(seed, samples, workers)``
    reproduces exactly.

    Returns:
        ``(max_found, argmax_spectrum)``.
    """
    dim = int(dim)
    if not 1.0 / dim - PURITY_SLACK <= purity <= 1.0 + PURITY_SLACK:
        raise InfeasibleConstraints(f"no spectrum of dimension {dim} has purity {purity}")
    _check_rank(rank, dim)
    purity = min(max(purity, 1.0 / dim), 1.0)
    k_min = min(_k_of(purity), dim)
    if purity >= 1 - PURITY_SLACK:
        spec = np.zeros(dim)
        spec[0] = 1.0
        return truncation_distance_bound_form(spec, rank), spec
    if purity <= 1.0 / dim + PURITY_SLACK:
        spec = np.full(dim, 1.0 / dim)
        return truncation_distance_bound_form(spec, rank), spec

    streams = np.random.SeedSequence(seed).spawn(max(1, int(workers)))
    per = [samples // len(streams) + (1 if i < samples % len(streams) else 0) for i in range(len(streams))]
    best_val, best_spec = -math.inf, None
    for ss, count in zip(streams, per):
        rng = np.random.default_rng(ss)
        val, spec = _oracle_stream(rng, purity, rank, dim, k_min, count, refine_steps)
        if val > best_val:
            best_val, best_spec = val, spec
    if best_spec is None:
        raise InfeasibleConstraints("no feasible spectrum found")
    return best_val, best_spec


def _oracle_stream(rng, purity, rank, dim, k_min, count, refine_steps, batch=20_000):
    best_val, best_spec = -math.inf, None
    done = 0
    while done < count:
        n = min(batch, count - done)
        done += n
        spec, ok = project_to_moments(_random_spectra(rng, n, dim, k_min), purity)
        if not ok.any():
            continue
        spec = spec[ok]
        vals = _bound_form_batch(spec, rank)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_spec = float(vals[i]), spec[i]
    if best_spec is None:
        return best_val, best_spec
    # Hill climb: perturb, re-project, keep improvements.
    scale = 0.05
    pop = 64
    for _ in range(refine_steps // pop):
        trial = best_spec[None, :] + scale * rng.standard_normal((pop, dim)) * (rng.random((pop, dim)) < 0.5)
        spec, ok = project_to_moments(trial, purity, iters=100)
        if ok.any():
            vals = _bound_form_batch(spec[ok], rank)
            i = int(np.argmax(vals))
            if vals[i] > best_val:
                best_val, best_spec = float(vals[i]), spec[ok][i]
                continue
        scale = max(scale * 0.85, 1e-9)
    return best_val, best_spec


def bound_table(dim, purity_grid, ranks, trace=1.0):
    """Bound values over a purity × rank grid.

    Returns a list of dict rows with keys ``purity, rank, bound, branch, K``,
    ordered rank-major then by purity as given.
    """
    rows = []
    for r in ranks:
        for p in purity_grid:
            res = purity_rank_bound(float(p), int(r), dim, trace)
            rows.append({"purity": float(p), "rank": int(r), "bound": res.bound, "branch": res.branch.value, "K": res.K})
    return rows


def is_nonincreasing_in_purity(rows, slack=1e-12):
    """Check every rank column of a :func:`bound_table` is non-increasing in purity."""
    by_rank = {}
    for row in rows:
        by_rank.setdefault(row["rank"], []).append((row["purity"], row["bound"]))
    for pts in by_rank.values():
        pts.sort()
        vals = [b for _, b in pts]
        if any(b2 > b1 + slack for b1, b2 in zip(vals, vals[1:])):
            return False
    return True


def suggest_rank(purity, dim, tolerance):
    """Smallest rank whose worst-case (normalised) bound is at most ``tolerance``."""
    for r in range(1, dim):
        if purity_rank_bound(purity, r, dim).bound <= tolerance:
            return r
    return dim
