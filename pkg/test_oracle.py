"""
Tests for the density-matrix simulation of the protocol
"""

import math

import numpy as np
import pytest

from src.oracle.density_simulator import (
    SIGMA,
    bloch_of,
    density_matrix,
    partial_trace_a,
    pure_state_from_bloch,
    simulate_protocol,
    standard_rsp_demo,
    state_fidelity,
    unitary,
)
from src.protocol.rsp_protocol import average_bloch, linear_fidelity, rotation_matrix
from src.state.bloch_core import new_state, normalize, random_physical_state, singlet, to_density_matrix
from src.strategy.decoding_strategy import DecodingStrategy
from src.utils.errors import InputError

X, Y, Z = np.eye(3)
ZERO = np.zeros(3)


def random_unit(rng):
    return normalize(rng.normal(size=3))


def test_unitary_is_special_unitary():
    rng = np.random.default_rng(41)
    for _ in range(50):
        U = unitary(random_unit(rng), rng.uniform(-math.pi, math.pi))
        assert np.allclose(U @ U.conj().T, np.eye(2), atol=1e-12)
        assert np.linalg.det(U) == pytest.approx(1.0, abs=1e-12)


def test_unitary_rejects_bad_axis():
    with pytest.raises(InputError):
        unitary([1.0, 1.0, 0.0], 0.5)


def test_unitary_conjugation_matches_rotation_matrix():
    rng = np.random.default_rng(42)
    for _ in range(100):
        n, gamma = random_unit(rng), rng.uniform(-math.pi, math.pi)
        v = random_unit(rng) * rng.uniform(0, 1)
        rho = 0.5 * (SIGMA[0] + np.einsum("i,ijk->jk", v, SIGMA[1:]))
        U = unitary(n, gamma)
        assert np.allclose(bloch_of(U @ rho @ U.conj().T), rotation_matrix(n, gamma) @ v, atol=1e-12)


def test_density_matrix_agrees_with_bloch_core():
    rng = np.random.default_rng(43)
    for _ in range(20):
        s = random_physical_state(rng)
        assert np.allclose(density_matrix(s), to_density_matrix(s), atol=1e-12)


def test_partial_trace_of_product():
    rho_a = np.array([[0.7, 0.1], [0.1, 0.3]], dtype=complex)
    rho_b = np.array([[0.4, 0.2j], [-0.2j, 0.6]], dtype=complex)
    assert np.allclose(partial_trace_a(np.kron(rho_a, rho_b)), rho_b)


@pytest.mark.parametrize("s_hat,expected", [
    (Z, [1.0, 0.0]),
    (X, [1 / math.sqrt(2), 1 / math.sqrt(2)]),
    (-Z, [0.0, 1.0]),
])
def test_pure_state_from_bloch_examples(s_hat, expected):
    assert np.allclose(pure_state_from_bloch(s_hat), expected, atol=1e-12)


def test_pure_state_on_equator_matches_phase_form():
    for phi in np.linspace(0, 2 * math.pi, 13):
        psi = pure_state_from_bloch([math.cos(phi), math.sin(phi), 0.0])
        expected = np.array([1.0, np.exp(1j * phi)]) / math.sqrt(2)
        assert abs(np.vdot(expected, psi)) == pytest.approx(1.0, abs=1e-12)
        assert psi[0].real > 0 and abs(psi[0].imag) < 1e-12


def test_pure_state_fidelity_is_linear_fidelity():
    rng = np.random.default_rng(44)
    for _ in range(50):
        s_hat = random_unit(rng)
        r = random_unit(rng) * rng.uniform(0, 1)
        rho = 0.5 * (SIGMA[0] + np.einsum("i,ijk->jk", r, SIGMA[1:]))
        assert state_fidelity(pure_state_from_bloch(s_hat), rho) == pytest.approx(linear_fidelity(r, s_hat), abs=1e-12)


def test_simulate_singlet_teleports_equatorial_signals():
    dec = DecodingStrategy.standard(Z)
    for phi in np.linspace(0, 2 * math.pi, 9):
        s_hat = np.array([math.cos(phi), math.sin(phi), 0.0])
        result = simulate_protocol(singlet(), -s_hat, dec)
        assert state_fidelity(pure_state_from_bloch(s_hat), result.rho_b) == pytest.approx(1.0, abs=1e-12)


def test_simulate_maximally_mixed_resource():
    mixed = new_state(ZERO, ZERO, np.zeros((3, 3)))
    result = simulate_protocol(mixed, X, DecodingStrategy.random(np.random.default_rng(0)))
    assert np.allclose(result.rho_b, np.eye(2) / 2, atol=1e-12)
    assert result.probabilities == pytest.approx((0.5, 0.5))


def test_simulation_matches_bloch_formulas():
    rng = np.random.default_rng(45)
    for _ in range(100):
        s = random_physical_state(rng)
        alpha = random_unit(rng)
        dec = DecodingStrategy.random(rng)
        result = simulate_protocol(s, alpha, dec)

        assert np.allclose(result.bloch, average_bloch(s, alpha, dec), atol=1e-12)
        p1 = 0.5 * (1 + s.a @ alpha)
        assert result.probabilities[0] == pytest.approx(p1, abs=1e-14)
        assert result.probabilities[1] == pytest.approx(1 - p1, abs=1e-14)
        assert np.trace(result.rho_b).real == pytest.approx(1.0, abs=1e-12)


def test_simulation_skips_impossible_branch():
    pure_a = new_state(Z, ZERO, np.zeros((3, 3)))
    result = simulate_protocol(pure_a, Z, DecodingStrategy.random(np.random.default_rng(1)))
    assert result.probabilities[1] == pytest.approx(0.0, abs=1e-15)
    assert np.trace(result.rho_b).real == pytest.approx(1.0, abs=1e-12)


def test_standard_rsp_demo():
    transcript = standard_rsp_demo(64)
    assert len(transcript.runs) == 64
    assert transcript.min_fidelity == pytest.approx(1.0, abs=1e-12)
    for run in transcript.runs:
        assert run.probabilities == pytest.approx((0.5, 0.5), abs=1e-12)
        assert run.fidelities == pytest.approx((1.0, 1.0), abs=1e-12)

    quarter = standard_rsp_demo(4).runs[1]
    assert quarter.phi == pytest.approx(math.pi / 2)
    assert quarter.average_fidelity == pytest.approx(1.0, abs=1e-12)
