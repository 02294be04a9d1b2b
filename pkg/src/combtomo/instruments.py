"""Instruments (CP trace-non-increasing maps) and their ξ operators.

For a map ``A : L(H_o) -> L(H_i)`` the operator

    ξ = Σ_{jk} A(|j><k|) ⊗ |k><j|      on H_i ⊗ H_o

satisfies ``Tr_o[ξ (I_i ⊗ ρ)] = A(ρ)``. A measure-and-prepare instrument
``A(X) = Tr[E X] ρ`` has ``ξ = ρ ⊗ E``, which is how the state/effect
experiments and the instrument experiments share one recursion.
"""

import dataclasses

import numpy as np

from .errors import DimensionMismatch, NotCP, RankDeficient
from .linalg import as_matrix, dagger, hermitian_eig, numerical_rank, partial_trace, qr_orthonormalize


def apply_kraus(kraus, x):
    x = as_matrix(x)
    return sum(k @ x @ dagger(k) for k in kraus)


def choi_of_kraus(kraus):
    """``J = Σ_{jk} |j><k| ⊗ A(|j><k|)`` (input leg first)."""
    k0 = as_matrix(kraus[0])
    d_out, d_in = k0.shape
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in kraus:
        vec = np.asarray(k).T.reshape(-1)  # Σ_j |j> ⊗ K|j>
        j += np.outer(vec, vec.conj())
    return j


def apply_choi(choi, x, in_dim):
    """``A(X) = Tr_in[(X^T ⊗ I) J]``."""
    x = as_matrix(x)
    d_out = choi.shape[0] // in_dim
    return partial_trace(np.kron(x.T, np.eye(d_out)) @ choi, [in_dim, d_out], keep=[1])


def _xi_from_choi(choi, in_dim):
    d_out = choi.shape[0] // in_dim
    # J[(j,a),(k,b)] = A(|j><k|)[a,b];  ξ[(a,k),(b,j)] = A(|j><k|)[a,b]
    t = choi.reshape(in_dim, d_out, in_dim, d_out)
    return np.transpose(t, (1, 2, 3, 0)).reshape(d_out * in_dim, d_out * in_dim)


def instrument_xi(instrument, in_dim=None):
    """ξ operator of a CP map.

    Args:
        instrument: a list/tuple of Kraus operators ``H_o -> H_i``, or a Choi
            matrix (2-D array) in the ``(input, output)`` leg order.
        in_dim: dimension of ``H_o``; required for a Choi matrix whose
            dimension is not a perfect square.

    Returns:
        ξ on ``H_i ⊗ H_o``.

    Raises:
        NotCP: if a Choi matrix is not PSD within ``1e-10``.
    """
    if isinstance(instrument, (list, tuple)):
        choi = choi_of_kraus(instrument)
        in_dim = as_matrix(instrument[0]).shape[1]
    else:
        choi = as_matrix(instrument)
        if in_dim is None:
            in_dim = int(round(np.sqrt(choi.shape[0])))
        if choi.shape[0] % in_dim:
            raise DimensionMismatch("Choi dimension is not a multiple of in_dim")
        w, _ = hermitian_eig(choi)
        if w[-1] < -1e-10:
            raise NotCP(f"Choi matrix has eigenvalue {w[-1]:.3e}")
    return _xi_from_choi(choi, in_dim)


def apply_xi(xi, rho):
    """``Tr_o[ξ (I ⊗ ρ)]``; recovers the map from its ξ operator."""
    rho = as_matrix(rho)
    d_o = rho.shape[0]
    d_i = xi.shape[0] // d_o
    return partial_trace(xi @ np.kron(np.eye(d_i), rho), [d_i, d_o], keep=[0])


def xi_effect(xi, out_dim):
    """``Tr_i ξ``: the effect whose expectation gives the instrument's success probability."""
    d_i = xi.shape[0] // out_dim
    return partial_trace(xi, [d_i, out_dim], keep=[1])


def measure_prepare_xi(effect, state):
    return np.kron(as_matrix(state), as_matrix(effect))


@dataclasses.dataclass(frozen=True)
class InstrumentSet:
    """Instruments ``H_o -> H_i`` applied in one gap, stored as ξ operators."""

    xis: tuple
    out_dim: int  # dim H_o (input of the map)
    in_dim: int  # dim H_i (output of the map)
    label: str = ""

    def __post_init__(self):
        xis = tuple(as_matrix(x) for x in self.xis)
        dim = self.out_dim * self.in_dim
        for x in xis:
            if x.shape != (dim, dim):
                raise DimensionMismatch(f"ξ of shape {x.shape}, expected {dim}x{dim}")
        object.__setattr__(self, "xis", xis)

    def __len__(self):
        return len(self.xis)

    def __getitem__(self, i):
        return self.xis[i]

    @property
    def rank(self):
        return numerical_rank(self.xis)

    def check_physical(self, tol=1e-9):
        """Raise :class:`NotCP` unless every map is CP and trace non-increasing."""
        for n, x in enumerate(self.xis):
            t = x.reshape(self.in_dim, self.out_dim, self.in_dim, self.out_dim)
            choi = np.transpose(t, (3, 0, 1, 2)).reshape(self.out_dim * self.in_dim, -1)
            w, _ = hermitian_eig(0.5 * (choi + dagger(choi)))
            if w[-1] < -1e-10:
                raise NotCP(f"instrument {n} is not completely positive")
            eff = xi_effect(x, self.out_dim)
            if hermitian_eig(0.5 * (eff + dagger(eff)))[0][0] > 1 + tol:
                raise NotCP(f"instrument {n} increases trace")


def random_cptp_kraus(dim, rng, n_kraus=None):
    """Kraus operators of a random CPTP map from a random Stinespring isometry."""
    n_kraus = dim if n_kraus is None else n_kraus
    g = rng.standard_normal((dim * n_kraus, dim)) + 1j * rng.standard_normal((dim * n_kraus, dim))
    v = qr_orthonormalize(g)
    return [v[i * dim : (i + 1) * dim] for i in range(n_kraus)]


def identity_kraus(dim):
    return [np.eye(dim, dtype=complex)]


def reset_kraus(dim):
    """``ρ -> Tr(ρ) |0><0|``."""
    ops = []
    for j in range(dim):
        k = np.zeros((dim, dim), dtype=complex)
        k[0, j] = 1.0
        ops.append(k)
    return ops


def measure_prepare_instruments(preps, meas):
    """All ``Tr[E_b ·] ρ_a`` instruments; spans the full ``d^4`` space for complete sets."""
    xis = [measure_prepare_xi(e, r) for r in preps.states for e in meas.effects]
    return InstrumentSet(tuple(xis), out_dim=meas.dim, in_dim=preps.dim, label="measure-prepare")


def default_cptp_instruments(dim=2, seed=0):
    """Identity, reset and random CPTP maps spanning every trace-preserving direction.

    Trace-preserving maps span a space of dimension ``d^4 - d^2 + 1``, so that
    is the rank this set reaches (13 for a qubit), not ``d^4``.
    """
    rng = np.random.default_rng(seed)
    target = dim**4 - dim**2 + 1
    xis = [instrument_xi(identity_kraus(dim)), instrument_xi(reset_kraus(dim))]
    for _ in range(10 * target):
        if len(xis) >= target:
            break
        cand = instrument_xi(random_cptp_kraus(dim, rng))
        if numerical_rank(xis + [cand]) > len(xis):
            xis.append(cand)
    if numerical_rank(xis) < target:
        raise RankDeficient("could not build a spanning CPTP instrument set")
    return InstrumentSet(tuple(xis), out_dim=dim, in_dim=dim, label="cptp-default")
