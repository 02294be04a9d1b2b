"""ADAM on the complex Stiefel manifold with a Cayley retraction.

A point ``X`` is an ``n x p`` matrix with ``X^† X = I``. Gradients are the
Wirtinger derivatives ``G = ∂f/∂X*`` of a real cost, so that
``df = 2 Re Tr(G^† dX)``.

Update rule for iteration ``t`` (counted from 1)::

    M <- g1 M + (1 - g1) G
    v <- g2 v + (1 - g2) ||G||_F^2
    r  = (1 - g1^t) sqrt(v / (1 - g2^t) + eps)
    D  = (M X^† - X M^†) / r
    k  = min(k0, 1 / (||D||_F + eps))
    X <- (I + k D / 2)^{-1} (I - k D / 2) X

To first order the retraction moves along ``-D X``, which for ``M ∝ G`` is
minus the Riemannian gradient under the canonical metric, so every step is a
descent step.
"""

import dataclasses
import json
import logging
import math

import numpy as np

from .errors import CallbackFailure, NotSkewHermitian, ShapeMismatch
from .linalg import dagger, fro, qr_orthonormalize, solve_small_linear

log = logging.getLogger(__name__)

STIEFEL_TOL = 1e-8


@dataclasses.dataclass(frozen=True)
class OptimizerConfig:
    gamma1: float = 0.9
    gamma2: float = 0.999
    epsilon: float = 1e-8
    kappa0: float = 0.2
    delta: float = 1e-4
    max_iters: int = 50000

    def __post_init__(self):
        if not 0 <= self.gamma1 < 1:
            raise ValueError("gamma1 must lie in [0, 1)")
        if not 0 <= self.gamma2 < 1:
            raise ValueError("gamma2 must lie in [0, 1)")
        if self.epsilon <= 0 or self.kappa0 <= 0 or self.delta <= 0:
            raise ValueError("epsilon, kappa0 and delta must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    def to_json(self):
        return json.dumps(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown optimizer config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclasses.dataclass(frozen=True)
class AdamState:
    """Biased moments and iteration counter. ``v`` starts at 1, not 0."""

    m: np.ndarray
    v: float = 1.0
    t: int = 0

    @classmethod
    def fresh(cls, shape):
        return cls(m=np.zeros(shape, dtype=complex), v=1.0, t=0)


def stiefel_defect(x):
    """``||X^† X - I||_F``."""
    x = np.asarray(x)
    return fro(dagger(x) @ x - np.eye(x.shape[1]))


def check_stiefel(x, tol=STIEFEL_TOL):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] < x.shape[1]:
        raise ShapeMismatch(f"Stiefel points need n >= p, got shape {x.shape}")
    defect = stiefel_defect(x)
    if defect > tol:
        raise ValueError(f"point is off the Stiefel manifold (defect {defect:.3e})")
    return x


def _same_shape(x, g):
    if np.shape(x) != np.shape(g):
        raise ShapeMismatch(f"gradient shape {np.shape(g)} != point shape {np.shape(x)}")


def euclid_to_skew(x, grad):
    """Skew-Hermitian generator ``D = G X^† - X G^†`` of the projected velocity ``D X``."""
    _same_shape(x, grad)
    a = grad @ dagger(x)
    return a - dagger(a)


def riemannian_grad_norm(x, grad):
    return fro(euclid_to_skew(x, grad))


def cayley_retract(x, d, kappa):
    """Move ``x`` along the curve ``(I + κD/2)^{-1} (I - κD/2) x``.

    ``d`` must be skew-Hermitian; the Cayley transform of a skew-Hermitian
    matrix is unitary, so the result stays on the manifold.
    """
    x = np.asarray(x, dtype=complex)
    d = np.asarray(d, dtype=complex)
    n = x.shape[0]
    if d.shape != (n, n):
        raise ShapeMismatch(f"generator shape {d.shape} incompatible with point {x.shape}")
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    if fro(d + dagger(d)) > 1e-12 * max(1.0, fro(d)):
        raise NotSkewHermitian("generator is not skew-Hermitian")
    if kappa == 0:
        return x.copy()
    half = 0.5 * kappa * d
    eye = np.eye(n)
    return solve_small_linear(eye + half, (eye - half) @ x)


def _reorthonormalize(x):
    defect = stiefel_defect(x)
    if defect > STIEFEL_TOL:
        log.warning("Stiefel drift %.3e exceeded %.0e; re-orthonormalising", defect, STIEFEL_TOL)
        return qr_orthonormalize(x)
    return x


def adam_step(x, grad, state, cfg):
    """One ADAM iteration. Returns the new point and the new state."""
    x = np.asarray(x, dtype=complex)
    grad = np.asarray(grad, dtype=complex)
    _same_shape(x, grad)
    _same_shape(x, state.m)
    t = state.t + 1
    m = cfg.gamma1 * state.m + (1.0 - cfg.gamma1) * grad
    v = cfg.gamma2 * state.v + (1.0 - cfg.gamma2) * float(np.vdot(grad, grad).real)
    r = (1.0 - cfg.gamma1**t) * math.sqrt(v / (1.0 - cfg.gamma2**t) + cfg.epsilon)
    d = euclid_to_skew(x, m) / r
    kappa = min(cfg.kappa0, 1.0 / (fro(d) + cfg.epsilon))
    x_new = _reorthonormalize(cayley_retract(x, d, kappa))
    return x_new, AdamState(m=m, v=v, t=t)


@dataclasses.dataclass
class OptimizeResult:
    x: np.ndarray
    cost: float
    iterations: int
    converged: bool
    trace: list  # (iteration, cost, riemannian grad norm)


def _evaluate(cost_and_grad, x):
    try:
        cost, grad = cost_and_grad(x)
    except Exception as exc:
        raise CallbackFailure(f"cost callback failed: {exc}") from exc
    cost = float(cost)
    grad = np.asarray(grad, dtype=complex)
    if not np.isfinite(cost) or grad.shape != x.shape or not np.all(np.isfinite(grad)):
        raise CallbackFailure("cost callback returned a non-finite cost or malformed gradient")
    return cost, grad


def optimize(x0, cost_and_grad, cfg=None):
    """Minimise ``cost_and_grad`` over the Stiefel manifold starting from ``x0``.

    Each iteration evaluates the callback at the current point, records
    ``(iteration, cost, ||G X^† - X G^†||_F)`` and stops once that norm is
    below ``cfg.delta``; otherwise it takes one :func:`adam_step`. The point
    with the lowest evaluated cost is returned, not necessarily the last one.
    """
    cfg = cfg or OptimizerConfig()
    x = check_stiefel(x0).copy()
    state = AdamState.fresh(x.shape)
    trace = []
    best_x, best_cost = x, math.inf
    converged = False
    for it in range(1, cfg.max_iters + 1):
        cost, grad = _evaluate(cost_and_grad, x)
        gnorm = riemannian_grad_norm(x, grad)
        trace.append((it, cost, gnorm))
        if cost < best_cost:
            best_x, best_cost = x, cost
        if gnorm < cfg.delta:
            converged = True
            break
        x, state = adam_step(x, grad, state, cfg)
    else:
        cost, _ = _evaluate(cost_and_grad, x)
        if cost < best_cost:
            best_x, best_cost = x, cost
    return OptimizeResult(x=best_x, cost=best_cost, iterations=len(trace), converged=converged, trace=trace)
