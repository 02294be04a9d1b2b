import numpy as np
import pytest

from combtomo.errors import DimensionMismatch, NotCP
from combtomo.instruments import (
    InstrumentSet,
    apply_choi,
    apply_kraus,
    apply_xi,
    choi_of_kraus,
    default_cptp_instruments,
    identity_kraus,
    instrument_xi,
    measure_prepare_instruments,
    measure_prepare_xi,
    random_cptp_kraus,
    reset_kraus,
    xi_effect,
)
from combtomo.linalg import fro, random_density
from combtomo.tomography import default_single_qubit_sets


def test_identity_xi_is_swap():
    xi = instrument_xi(identity_kraus(2))
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[i * 2 + j, j * 2 + i] = 1
    assert np.allclose(xi, swap)


def test_reset_xi():
    xi = instrument_xi(reset_kraus(2))
    assert np.allclose(xi, np.kron(np.diag([1.0, 0.0]), np.eye(2)))


def test_defining_identity_random_cptp(rng):
    for _ in range(10):
        kraus = random_cptp_kraus(3, rng)
        xi = instrument_xi(kraus)
        for _ in range(5):
            rho = random_density(3, rng)
            assert fro(apply_xi(xi, rho) - apply_kraus(kraus, rho)) <= 1e-10


def test_rectangular_maps(rng):
    # a 2 -> 3 map built from an isometry into 3 x 2 Kraus blocks
    g = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
    q, _ = np.linalg.qr(g)
    kraus = [q[:3], q[3:]]
    xi = instrument_xi(kraus)
    assert xi.shape == (6, 6)
    rho = random_density(2, rng)
    assert fro(apply_xi(xi, rho) - apply_kraus(kraus, rho)) <= 1e-10
    assert np.allclose(xi_effect(xi, 2), np.eye(2))


def test_choi_input(rng):
    kraus = random_cptp_kraus(2, rng)
    choi = choi_of_kraus(kraus)
    rho = random_density(2, rng)
    assert np.allclose(apply_choi(choi, rho, 2), apply_kraus(kraus, rho))
    assert np.allclose(instrument_xi(choi), instrument_xi(kraus))
    with pytest.raises(NotCP):
        instrument_xi(-choi)


def test_zero_instrument():
    xi = instrument_xi([np.zeros((2, 2))])
    assert not xi.any()


def test_measure_prepare_xi(rng):
    e, r = random_density(2, rng), random_density(2, rng)
    xi = measure_prepare_xi(e, r)
    rho = random_density(2, rng)
    assert np.allclose(apply_xi(xi, rho), np.trace(e @ rho) * r)
    kraus = [np.outer(r_vec, e_vec.conj()) for r_vec, e_vec in [(np.array([1, 0]), np.array([0, 1]))]]
    assert np.allclose(instrument_xi(kraus), measure_prepare_xi(np.diag([0, 1]), np.diag([1, 0])))


def test_instrument_sets():
    preps, meas = default_single_qubit_sets()
    mp = measure_prepare_instruments(preps, meas)
    assert len(mp) == 16 and mp.rank == 16
    mp.check_physical()
    cptp = default_cptp_instruments(2, seed=0)
    # trace-preserving maps only span d^4 - d^2 + 1 directions
    assert cptp.rank == 13
    cptp.check_physical()
    with pytest.raises(DimensionMismatch):
        InstrumentSet((np.eye(3),), out_dim=2, in_dim=2)


def test_check_physical_rejects():
    bad = InstrumentSet((2 * instrument_xi(identity_kraus(2)),), out_dim=2, in_dim=2)
    with pytest.raises(NotCP, match="increases trace"):
        bad.check_physical()
    neg = InstrumentSet((-instrument_xi(identity_kraus(2)),), out_dim=2, in_dim=2)
    with pytest.raises(NotCP, match="completely positive"):
        neg.check_physical()
