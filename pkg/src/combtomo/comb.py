"""Quantum combs represented as sequences of isometries.

Step ``k`` of an ``N``-step comb is an isometry
``V_k : H_{i_k} ⊗ H_{A_k} -> H_{o_k} ⊗ H_{A_{k+1}}`` stored as a matrix with
row index ``o * d_A[k+1] + a_next`` and column index ``i * d_A[k] + a_prev``
(system leg most significant). ``d_A[0]`` is always 1 and the last ancilla
``A_N`` is traced out.

Choi matrices use the unnormalised convention ``Tr Υ = prod(d_i)`` with legs
ordered ``(i_0, o_0, i_1, o_1, ...)``.
"""

import dataclasses
import math

import numpy as np

from .errors import BadIndex, BadShape, CombTooLarge, DimensionMismatch, NotUnitary
from .linalg import as_matrix, dagger, fro, kron, partial_trace, qr_orthonormalize
from .stiefel import stiefel_defect

CHOI_DIM_CAP = 4096


@dataclasses.dataclass(frozen=True)
class CombDims:
    in_dims: tuple
    out_dims: tuple
    anc_dims: tuple  # length N + 1, anc_dims[0] == 1

    def __post_init__(self):
        object.__setattr__(self, "in_dims", tuple(int(d) for d in self.in_dims))
        object.__setattr__(self, "out_dims", tuple(int(d) for d in self.out_dims))
        object.__setattr__(self, "anc_dims", tuple(int(d) for d in self.anc_dims))
        n = len(self.in_dims)
        if n == 0:
            raise DimensionMismatch("a comb needs at least one step")
        if len(self.out_dims) != n or len(self.anc_dims) != n + 1:
            raise DimensionMismatch(
                f"expected {n} output dims and {n + 1} ancilla dims, "
                f"got {len(self.out_dims)} and {len(self.anc_dims)}"
            )
        if min(self.in_dims + self.out_dims + self.anc_dims) < 1:
            raise DimensionMismatch("all dimensions must be positive")
        if self.anc_dims[0] != 1:
            raise DimensionMismatch("anc_dims[0] must be 1")
        for k in range(n):
            rows, cols = self.shape(k)
            if rows < cols:
                raise DimensionMismatch(
                    f"step {k}: d_o*d_A[{k + 1}] = {rows} < d_i*d_A[{k}] = {cols}, "
                    "no isometry exists"
                )

    @classmethod
    def from_lists(cls, in_dims, out_dims, anc_dims):
        """Build from user-facing lists; ``anc_dims`` may omit the leading 1."""
        anc = list(anc_dims)
        if len(anc) == len(in_dims):
            anc = [1] + anc
        return cls(tuple(in_dims), tuple(out_dims), tuple(anc))

    @property
    def steps(self):
        return len(self.in_dims)

    def shape(self, k):
        """Matrix shape ``(rows, cols)`` of the step-``k`` isometry."""
        return (
            self.out_dims[k] * self.anc_dims[k + 1],
            self.in_dims[k] * self.anc_dims[k],
        )

    @property
    def choi_dim(self):
        return math.prod(self.in_dims) * math.prod(self.out_dims)

    def truncated(self, k):
        return CombDims(self.in_dims[:k], self.out_dims[:k], self.anc_dims[: k + 1])

    def to_dict(self):
        return {
            "steps": self.steps,
            "in_dims": list(self.in_dims),
            "out_dims": list(self.out_dims),
            "anc_dims": list(self.anc_dims),
        }

    @classmethod
    def from_dict(cls, d):
        dims = cls(d["in_dims"], d["out_dims"], d["anc_dims"])
        if "steps" in d and int(d["steps"]) != dims.steps:
            raise DimensionMismatch("'steps' disagrees with the dimension lists")
        return dims


@dataclasses.dataclass(frozen=True)
class QuantumComb:
    dims: CombDims
    isometries: tuple

    def __post_init__(self):
        isos = tuple(as_matrix(v) for v in self.isometries)
        if len(isos) != self.dims.steps:
            raise DimensionMismatch(f"{len(isos)} isometries for a {self.dims.steps}-step comb")
        for k, v in enumerate(isos):
            if v.shape != self.dims.shape(k):
                raise DimensionMismatch(f"isometry {k} has shape {v.shape}, expected {self.dims.shape(k)}")
            if stiefel_defect(v) > 1e-8:
                raise BadShape(f"isometry {k} violates V^†V = I")
        object.__setattr__(self, "isometries", isos)

    @property
    def steps(self):
        return self.dims.steps

    def __len__(self):
        return self.dims.steps


def random_isometry(rows, cols, seed):
    """Column-orthonormalised complex Gaussian ``rows x cols`` matrix.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if rows < cols or cols < 1:
        raise BadShape(f"cannot build a {rows}x{cols} isometry")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return qr_orthonormalize(g)


def random_comb(dims, seed):
    """Random comb, isometry by isometry, from one seeded generator."""
    rng = np.random.default_rng(seed)
    return QuantumComb(dims, tuple(random_isometry(*dims.shape(k), rng) for k in range(dims.steps)))


def step_apply(v, rho):
    """``V rho V^†``."""
    v = as_matrix(v)
    rho = as_matrix(rho)
    if rho.shape != (v.shape[1], v.shape[1]):
        raise DimensionMismatch(f"state of shape {rho.shape} does not fit isometry {v.shape}")
    return v @ rho @ dagger(v)


def apply_kraus(kraus, x):
    return sum(k @ x @ dagger(k) for k in kraus)


def comb_apply(comb, inputs, interleavers=None):
    """Run a comb on per-step input states.

    Args:
        comb: the comb.
        inputs: one density operator per step on ``H_{i_k}``. With an
            interleaver at gap ``k`` the input for step ``k + 1`` comes from
            the interleaver instead and ``inputs[k + 1]`` may be ``None``.
        interleavers: optional list of length ``N - 1``; entry ``k`` is
            ``None`` or a list of Kraus operators ``H_{o_k} -> H_{i_{k+1}}``.
            Without an interleaver the output ``o_k`` is discarded.

    Returns:
        The final output state on ``H_{o_{N-1}}`` after tracing out ``A_N``.
    """
    dims = comb.dims
    n = dims.steps
    interleavers = list(interleavers) if interleavers is not None else [None] * (n - 1)
    if len(inputs) != n or len(interleavers) != n - 1:
        raise DimensionMismatch("need one input per step and one interleaver slot per gap")
    carried = np.ones((1, 1), dtype=complex)
    fed = None
    for k, v in enumerate(comb.isometries):
        if fed is None:
            rho = as_matrix(inputs[k])
            if rho.shape != (dims.in_dims[k],) * 2:
                raise DimensionMismatch(f"input {k} has shape {rho.shape}")
            joint = kron(rho, carried)
        else:
            joint = fed
        out = step_apply(v, joint)
        d_o, d_a = dims.out_dims[k], dims.anc_dims[k + 1]
        if k == n - 1:
            return partial_trace(out, [d_o, d_a], keep=[0])
        ops = interleavers[k]
        if ops is None:
            carried = partial_trace(out, [d_o, d_a], keep=[1])
            fed = None
        else:
            eye_a = np.eye(d_a)
            fed = sum(kron(kk, eye_a) @ out @ dagger(kron(kk, eye_a)) for kk in ops)
            if fed.shape[0] != dims.in_dims[k + 1] * d_a:
                raise DimensionMismatch(f"interleaver {k} does not map o_{k} to i_{k + 1}")
    raise AssertionError("unreachable")


def _choi_factor(comb, cap):
    # Returns M with Υ = M M^†: rows index (i0, o0, i1, o1, ...), columns A_N.
    dims = comb.dims
    if dims.choi_dim > cap:
        raise CombTooLarge(f"Choi dimension {dims.choi_dim} exceeds cap {cap}")
    psi = np.ones((1,), dtype=complex)
    for k, v in enumerate(comb.isometries):
        d_o, d_next = dims.out_dims[k], dims.anc_dims[k + 1]
        d_i, d_prev = dims.in_dims[k], dims.anc_dims[k]
        v4 = v.reshape(d_o, d_next, d_i, d_prev)
        # Feed the second half of Σ_j |j>|j> into leg i_k; the first half stays as reference.
        psi = np.einsum("...a,oxra->...rox", psi, v4)
    return psi.reshape(dims.choi_dim, dims.anc_dims[-1])


def choi_of_comb(comb, cap=CHOI_DIM_CAP):
    """Unnormalised Choi matrix on ``(i_0, o_0, i_1, o_1, ...)``."""
    m = _choi_factor(comb, cap)
    choi = m @ dagger(m)
    return 0.5 * (choi + dagger(choi))


def comb_purity(comb, cap=CHOI_DIM_CAP):
    """``Tr(Υ^2) / (Tr Υ)^2`` computed from the Stinespring factor."""
    m = _choi_factor(comb, cap)
    gram = dagger(m) @ m
    return float(np.vdot(gram, gram).real / np.trace(gram).real ** 2)


def truncated_comb(comb, k):
    """The first ``k`` steps of ``comb``; ``A_k`` becomes the traced-out ancilla."""
    if not 1 <= k <= comb.steps:
        raise BadIndex(f"k={k} outside 1..{comb.steps}")
    return QuantumComb(comb.dims.truncated(k), comb.isometries[:k])


def gauge_transform(comb, k, u):
    """Rotate the ancilla ``A_{k+1}`` between steps ``k`` and ``k+1`` by ``u``.

    Observable behaviour and the Choi matrix are unchanged.
    """
    dims = comb.dims
    if not 0 <= k <= dims.steps - 2:
        raise BadIndex(f"gauge index k={k} outside 0..{dims.steps - 2}")
    u = as_matrix(u)
    d_a = dims.anc_dims[k + 1]
    if u.shape != (d_a, d_a) or fro(dagger(u) @ u - np.eye(d_a)) > 1e-10:
        raise NotUnitary(f"gauge must be a {d_a}x{d_a} unitary")
    isos = list(comb.isometries)
    isos[k] = kron(np.eye(dims.out_dims[k]), u) @ isos[k]
    isos[k + 1] = isos[k + 1] @ kron(np.eye(dims.in_dims[k + 1]), dagger(u))
    return QuantumComb(dims, tuple(isos))
