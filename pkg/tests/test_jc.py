import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zeno_drive import (
    FockCutoff,
    InvalidParameterError,
    PhysicalParams,
    conditional_eigenvalue,
    conditional_spectrum,
    effective_unitary,
    jc_unitary,
    mixing_angle,
    rabi_frequency,
)
from zeno_drive.fock import displacement_matrix
from zeno_drive.oracle import build_jc_hamiltonian, propagator

W = 2 * math.pi * 100e6
PERIOD = 2 * math.pi / W


def unit_params(g=0.04, delta=1.1):
    # omega_m = 1 keeps tau in units of 1/omega_m
    return PhysicalParams(1.0, g, delta)


def test_rabi_frequency_and_mixing_angle_at_default_ratios():
    p = unit_params()
    assert rabi_frequency(1, p) == pytest.approx(math.sqrt(0.05**2 + 0.04**2), rel=1e-14)
    assert rabi_frequency(1, p) == pytest.approx(0.06403, abs=1e-5)
    assert math.cos(2 * mixing_angle(1, p)) == pytest.approx(0.7809, abs=1e-4)
    with pytest.raises(InvalidParameterError):
        rabi_frequency(0, p)


def test_resonant_mixing_angle_is_quarter_pi():
    p = unit_params(delta=1.0)
    assert mixing_angle(3, p) == pytest.approx(math.pi / 4)
    assert rabi_frequency(4, p) == pytest.approx(0.04 * 2)


def test_below_resonance_angle_exceeds_quarter_pi():
    assert mixing_angle(1, unit_params(delta=0.9)) > math.pi / 4


def test_resonant_eigenvalue_is_pure_cosine():
    p = unit_params(delta=1.0)
    tau = 3.7
    n = 5
    lam = conditional_eigenvalue(n, tau, p)
    expected = np.exp(-1j * (n - 0.5) * tau) * math.cos(0.04 * math.sqrt(n) * tau)
    assert lam == pytest.approx(expected, abs=1e-15)


def test_vacuum_eigenvalue_is_pure_phase():
    p = PhysicalParams.from_ratios()
    for tau in [0.0, 1e-9, 3.3e-8]:
        lam = conditional_eigenvalue(0, tau, p)
        assert abs(lam) == pytest.approx(1.0, abs=1e-14)
        assert lam == pytest.approx(np.exp(0.5j * p.delta * tau))


def test_zero_coupling_gives_bare_phases():
    p = unit_params(g=0.0)
    spec = conditional_spectrum(2.5, p, FockCutoff(10))
    n = np.arange(10)
    np.testing.assert_allclose(spec.lambdas, np.exp(-1j * (n * 1.0 - 0.55) * 2.5), atol=1e-14)


def test_resonant_zero_coupling_is_finite():
    spec = conditional_spectrum(1.0, unit_params(g=0.0, delta=1.0), FockCutoff(8))
    assert np.all(np.isfinite(spec.lambdas))
    np.testing.assert_allclose(spec.moduli_sq, 1.0)


def test_eigenvalue_modulus_bounded_and_periodic():
    p = unit_params()
    n = np.arange(1, 40)
    moduli = conditional_spectrum(7.3, p, FockCutoff(40)).moduli_sq
    assert np.all(moduli <= 1.0 + 1e-15)
    # |lambda_n|^2 has period pi / Omega_n
    for k in [1, 7, 33]:
        t0 = 2.1
        period = math.pi / rabi_frequency(k, p)
        a = abs(conditional_eigenvalue(k, t0, p))
        b = abs(conditional_eigenvalue(k, t0 + period, p))
        assert a == pytest.approx(b, abs=1e-13)
    assert n.size == moduli.size - 1


def test_modulus_closed_form():
    p = unit_params()
    tau = 11.0
    for n in [1, 4, 9]:
        om = rabi_frequency(n, p)
        c2 = math.cos(2 * mixing_angle(n, p))
        expected = 1.0 - math.sin(om * tau) ** 2 * (1.0 - c2**2)
        assert abs(conditional_eigenvalue(n, tau, p)) ** 2 == pytest.approx(expected, abs=1e-14)


def test_negative_inputs_rejected():
    p = unit_params()
    with pytest.raises(InvalidParameterError):
        conditional_eigenvalue(-1, 1.0, p)
    with pytest.raises(InvalidParameterError):
        conditional_spectrum(-1.0, p, FockCutoff(4))
    with pytest.raises(InvalidParameterError):
        jc_unitary(-1.0, p, FockCutoff(4))


def test_physical_params_validation_and_weak_coupling_warning():
    with pytest.raises(InvalidParameterError):
        PhysicalParams(0.0, 0.1, 1.0)
    with pytest.raises(InvalidParameterError):
        PhysicalParams(1.0, 0.1, 1.0, temperature=0.0)
    with pytest.warns(UserWarning):
        PhysicalParams(1.0, 0.2, 1.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert PhysicalParams.from_ratios().weak_coupling


def test_jc_unitary_matches_dense_exponential():
    p = PhysicalParams.from_ratios()
    cut = FockCutoff(24)
    for tau in [0.3 * PERIOD, 4.1 * PERIOD]:
        u = jc_unitary(tau, p, cut)
        exact = propagator(build_jc_hamiltonian(p, cut), tau)
        np.testing.assert_allclose(u.data, exact, atol=1e-11)


def test_jc_unitary_is_unitary_and_block_diagonal():
    p = PhysicalParams.from_ratios()
    cut = FockCutoff(30)
    u = jc_unitary(2.3 * PERIOD, p, cut).data
    np.testing.assert_allclose(u @ u.conj().T, np.eye(60), atol=1e-13)
    # only |g,n> <-> |e,n-1> couples
    mask = np.zeros((60, 60), dtype=bool)
    for n in range(30):
        mask[n, n] = mask[30 + n, 30 + n] = True
        if n >= 1:
            mask[n, 30 + n - 1] = mask[30 + n - 1, n] = True
    assert np.max(np.abs(u[~mask])) == 0.0


def test_ground_block_diagonal_equals_spectrum_at_large_dim():
    p = PhysicalParams.from_ratios()
    cut = FockCutoff(250)
    tau = 7.7 * PERIOD
    block = jc_unitary(tau, p, cut).ground_block()
    np.testing.assert_allclose(np.diag(block), conditional_spectrum(tau, p, cut).lambdas, atol=1e-13)
    assert np.count_nonzero(block - np.diag(np.diag(block))) == 0


def test_composition_of_propagators():
    p = PhysicalParams.from_ratios()
    cut = FockCutoff(20)
    t1, t2 = 1.3 * PERIOD, 2.9 * PERIOD
    u = jc_unitary(t1, p, cut).data @ jc_unitary(t2, p, cut).data
    np.testing.assert_allclose(u, jc_unitary(t1 + t2, p, cut).data, atol=1e-12)


def test_effective_unitary_ground_block_is_displaced_spectrum():
    p = PhysicalParams.from_ratios()
    cut = FockCutoff(70)
    tau = 3.1 * PERIOD
    alpha = 0.8 + 0.3j
    eff = effective_unitary(tau, alpha, p, cut)
    d = displacement_matrix(alpha, cut)
    rhs = d @ np.diag(conditional_spectrum(tau, p, cut).lambdas) @ d.conj().T
    np.testing.assert_allclose(eff.ground_block(), rhs, atol=1e-13)
    inner = (eff.data @ eff.data.conj().T)[:20, :20]
    np.testing.assert_allclose(inner, np.eye(20), atol=1e-11)


@settings(max_examples=50, deadline=None)
@given(
    g=st.floats(0.0, 0.1),
    delta=st.floats(0.5, 2.0),
    tau=st.floats(0.0, 100.0),
)
def test_property_spectrum_bounds(g, delta, tau):
    spec = conditional_spectrum(tau, unit_params(g=g, delta=delta), FockCutoff(50))
    assert abs(abs(spec.lambdas[0]) - 1.0) < 1e-14
    assert np.all(spec.moduli_sq <= 1.0 + 1e-14)
