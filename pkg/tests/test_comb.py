import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combtomo.comb import (
    CombDims,
    QuantumComb,
    choi_of_comb,
    comb_apply,
    comb_purity,
    gauge_transform,
    random_comb,
    random_isometry,
    step_apply,
    truncated_comb,
)
from combtomo.errors import BadIndex, BadShape, CombTooLarge, DimensionMismatch, NotUnitary
from combtomo.linalg import dagger, fro, random_density, random_unitary
from combtomo.stiefel import stiefel_defect


def purity(m):
    return float(np.trace(m @ m).real / np.trace(m).real ** 2)


def test_dims_validation():
    with pytest.raises(DimensionMismatch, match="no isometry exists"):
        CombDims.from_lists([2, 2], [2, 2], [2, 1])
    with pytest.raises(DimensionMismatch):
        CombDims((2,), (2,), (2, 2))
    with pytest.raises(DimensionMismatch):
        CombDims((2, 2), (2,), (1, 2, 2))
    d = CombDims.from_lists([2, 2], [2, 2], [2, 2])
    assert d.anc_dims == (1, 2, 2) and d.shape(1) == (4, 4) and d.choi_dim == 16
    assert CombDims.from_dict(d.to_dict()) == d
    assert d.truncated(1) == CombDims((2,), (2,), (1, 2))


def test_random_isometry(rng):
    u = random_isometry(2, 2, 5)
    assert fro(dagger(u) @ u - np.eye(2)) <= 1e-12 and fro(u @ dagger(u) - np.eye(2)) <= 1e-12
    assert np.array_equal(random_isometry(4, 3, 9), random_isometry(4, 3, 9))
    assert stiefel_defect(random_isometry(8, 2, rng)) <= 1e-12
    with pytest.raises(BadShape):
        random_isometry(2, 3, 0)


def test_comb_validation(rng):
    dims = CombDims((2,), (2,), (1, 1))
    with pytest.raises(DimensionMismatch):
        QuantumComb(dims, (np.eye(3),))
    with pytest.raises(BadShape):
        QuantumComb(dims, (2 * np.eye(2),))


def test_step_apply(rng):
    rho = random_density(2, rng)
    assert np.allclose(step_apply(np.eye(2), rho), rho)
    u = random_unitary(2, rng)
    assert purity(step_apply(u, rho)) == pytest.approx(purity(rho), abs=1e-12)
    v = random_isometry(6, 2, rng)
    assert abs(np.trace(step_apply(v, rho)) - 1) <= 1e-12
    with pytest.raises(DimensionMismatch):
        step_apply(v, np.eye(3))


def test_comb_apply_examples(rng):
    rho = random_density(2, rng)
    one = QuantumComb(CombDims((2,), (2,), (1, 1)), (np.eye(2),))
    assert np.allclose(comb_apply(one, [rho]), rho)
    # two identity steps carrying the first input through the interleaver
    dims = CombDims((2, 2), (2, 2), (1, 1, 1))
    wire = QuantumComb(dims, (np.eye(2), np.eye(2)))
    assert np.allclose(comb_apply(wire, [rho, None], [[np.eye(2)]]), rho)
    # without an interleaver the second input passes instead
    sigma = random_density(2, rng)
    assert np.allclose(comb_apply(wire, [rho, sigma]), sigma)


def test_comb_apply_trace_and_conservation(rng):
    comb = random_comb(CombDims.from_lists([2, 2, 2], [2, 2, 2], [2, 2, 2]), 3)
    rho = random_density(2, rng)
    out = comb_apply(comb, [rho, random_density(2, rng), random_density(2, rng)])
    assert np.trace(out).real <= 1 + 1e-9
    # measure-and-prepare in the computational basis at each gap: summing outcomes keeps trace 1
    z = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    total = 0.0
    for a in range(2):
        for b in range(2):
            inter = [[z[a]], [z[b]]]  # projective Kraus operators o -> i
            total += np.trace(comb_apply(comb, [rho, None, None], inter)).real
    assert total == pytest.approx(1.0, abs=1e-9)


def test_choi_single_step_unitary(rng):
    u = random_unitary(3, rng)
    comb = QuantumComb(CombDims((3,), (3,), (1, 1)), (u,))
    phi = np.eye(3).reshape(-1)
    expect = np.kron(np.eye(3), u) @ np.outer(phi, phi) @ dagger(np.kron(np.eye(3), u))
    choi = choi_of_comb(comb)
    assert np.allclose(choi, expect)
    assert np.trace(choi).real == pytest.approx(3)


def test_choi_identity_is_bell():
    comb = QuantumComb(CombDims((2,), (2,), (1, 1)), (np.eye(2),))
    choi = choi_of_comb(comb) / 2
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(choi, np.outer(phi, phi))
    assert comb_purity(comb) == pytest.approx(1.0)


def test_choi_pure_when_final_ancilla_trivial():
    # smallest single-qubit-input 2-step comb with d_A2 = 1 that admits isometries
    comb = random_comb(CombDims.from_lists([2, 2], [2, 4], [2, 1]), 7)
    assert comb_purity(comb) == pytest.approx(1.0, abs=1e-8)
    choi = choi_of_comb(comb)
    assert np.trace(choi).real == pytest.approx(4, rel=1e-6)


def test_choi_maximally_mixed():
    # depolarising channel ρ -> Tr(ρ) I/2 via Kraus |a><b|/sqrt(2)
    v = np.zeros((8, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            v[a * 4 + (2 * a + b), b] = 1 / np.sqrt(2)
    comb = QuantumComb(CombDims((2,), (2,), (1, 4)), (v,))
    assert np.allclose(choi_of_comb(comb), np.eye(4) / 2)
    assert comb_purity(comb) == pytest.approx(0.25)


def test_choi_leg_order_matches_comb_apply(rng):
    # Υ read through (i0, o0, i1, o1): apply to product inputs, discard o0.
    comb = random_comb(CombDims.from_lists([2, 2], [2, 2], [2, 2]), 4)
    choi = choi_of_comb(comb).reshape([2] * 8)
    r0, r1 = random_density(2, rng), random_density(2, rng)
    out = np.einsum("xy,uw,yewfxeuh->fh", r0.T, r1.T, choi)
    assert np.allclose(out, comb_apply(comb, [r0, r1]))


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**31))
def test_choi_trace_and_purity_range(steps, last_anc, seed):
    anc = [2] * (steps - 1) + [last_anc]
    outs = [2] * (steps - 1) + [max(2, -(-2 * (2 if steps > 1 else 1) // last_anc))]
    comb = random_comb(CombDims.from_lists([2] * steps, outs, anc), seed)
    choi = choi_of_comb(comb)
    assert np.trace(choi).real == pytest.approx(2**steps, rel=1e-6)
    assert np.linalg.eigvalsh(choi)[0] >= -1e-8
    p = comb_purity(comb)
    assert 0 < p <= 1 + 1e-12 and p == pytest.approx(purity(choi))


def test_choi_cap():
    comb = random_comb(CombDims.from_lists([2] * 4, [2] * 4, [2] * 4), 0)
    with pytest.raises(CombTooLarge):
        choi_of_comb(comb, cap=128)


def test_truncated_comb():
    comb = random_comb(CombDims.from_lists([2, 2], [2, 2], [2, 2]), 1)
    full = truncated_comb(comb, 2)
    assert full.dims == comb.dims and all(np.array_equal(a, b) for a, b in zip(full.isometries, comb.isometries))
    one = truncated_comb(comb, 1)
    assert one.steps == 1 and one.dims.anc_dims == (1, 2)
    assert np.array_equal(one.isometries[0], comb.isometries[0])
    with pytest.raises(BadIndex):
        truncated_comb(comb, 3)


def test_gauge_transform(rng):
    comb = random_comb(CombDims.from_lists([2, 2], [2, 2], [2, 2]), 2)
    same = gauge_transform(comb, 0, np.eye(2))
    assert all(np.allclose(a, b) for a, b in zip(same.isometries, comb.isometries))
    g = gauge_transform(comb, 0, random_unitary(2, rng))
    assert fro(choi_of_comb(g) - choi_of_comb(comb)) <= 1e-10
    with pytest.raises(NotUnitary):
        gauge_transform(comb, 0, 2 * np.eye(2))
    with pytest.raises(BadIndex):
        gauge_transform(comb, 1, np.eye(2))
