"""Shared oracles for the test-suite."""

import numpy as np

from combtomo.comb import random_isometry
from combtomo.linalg import random_density


def random_effect(dim, rng):
    # 0 <= E <= I from a random density matrix rescaled by a uniform factor
    rho = random_density(dim, rng)
    return rho / np.linalg.eigvalsh(rho)[-1] * rng.uniform(0.2, 1.0)


def random_cost_instance(rng, d_o=None, d_a_next=None, d_in=None, n=None):
    """(W, targets, etas, effects) with random shapes up to 16 x 8."""
    d_o = d_o or int(rng.integers(1, 3)) + 1
    d_a_next = d_a_next or int(rng.integers(1, 9 // d_o + 1)) * (2 if d_o == 1 else 1)
    rows = d_o * d_a_next
    d_in = d_in or int(rng.integers(1, min(rows, 8) + 1))
    n = n or int(rng.integers(3, 12))
    w = random_isometry(rows, d_in, rng)
    etas = [random_density(d_in, rng) * rng.uniform(0.3, 1.0) for _ in range(n)]
    pool = [random_effect(d_o, rng) for _ in range(3)]
    effects = [pool[int(rng.integers(0, 3))] for _ in range(n)]
    targets = rng.uniform(0, 1, size=n)
    return w, targets, etas, effects


def finite_difference_grad(f, w, h=1e-5):
    """Central differences returning the Wirtinger gradient ∂f/∂W*.

    With df = 2 Re Tr(G^† dW), the derivative along a real unit E_ij is
    2 Re G_ij and along i E_ij it is 2 Im G_ij.
    """
    g = np.zeros_like(w, dtype=complex)
    for idx in np.ndindex(*w.shape):
        e = np.zeros_like(w, dtype=complex)
        e[idx] = 1.0
        d_re = (f(w + h * e) - f(w - h * e)) / (2 * h)
        d_im = (f(w + 1j * h * e) - f(w - 1j * h * e)) / (2 * h)
        g[idx] = 0.5 * (d_re + 1j * d_im)
    return g


def direct_cost(w, targets, etas, effects):
    """Cost evaluated term by term from the probability formula, no grouping."""
    d_o = effects[0].shape[0]
    d_a = w.shape[0] // d_o
    total = 0.0
    for t, eta, e in zip(targets, etas, effects):
        p = np.trace(np.kron(e, np.eye(d_a)) @ w @ eta @ w.conj().T).real
        total += (p - t) ** 2
    return total
