"""
Tests for closed-form metrics, fidelity relations, the guessing baseline and state comparison
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.transform import Rotation

from src.metrics.closed_forms import (
    binary_entropy,
    closed_forms,
    compare_states,
    fidelity_from_payoff,
    guessing_protocol_stats,
    metric_C3,
    metric_D,
    metric_d,
    metric_Q,
    optimal_fidelity_exact,
)
from src.state.bloch_core import bell_diagonal, new_state, singlet, werner
from src.utils.errors import InputError

ZERO = np.zeros(3)
DIAG_531 = np.diag([0.5, 0.3, 0.1])


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0])
def test_isotropic_metrics_coincide(lam):
    E = -lam * np.eye(3)
    assert metric_D(E) == pytest.approx(lam ** 2)
    assert metric_d(E) == pytest.approx(lam ** 2)
    assert metric_Q(E) == pytest.approx(lam ** 2)


def test_metric_examples():
    assert metric_D(np.diag([0.6, 0, 0])) == pytest.approx(0.18)
    assert metric_d(np.diag([0.6, 0, 0])) == 0.0

    assert metric_D(DIAG_531) == pytest.approx(0.17)
    assert metric_d(DIAG_531) == pytest.approx(0.05)
    assert metric_Q(DIAG_531) == pytest.approx(0.35 / 3)
    assert metric_Q(np.zeros((3, 3))) == 0.0


def test_metric_orderings_on_random_matrices():
    rng = np.random.default_rng(31)
    for E in rng.uniform(-1, 1, size=(10_000, 3, 3)):
        D, d, Q = metric_D(E), metric_d(E), metric_Q(E)
        total = 3 * Q
        assert d <= D + 1e-12
        assert D <= total + 1e-12
        assert Q <= D + 1e-12
        assert D <= 1.5 * Q + 1e-12


def test_D_of_zero_and_rank_one_matrices():
    assert metric_D(np.zeros((3, 3))) == 0.0
    a, b = np.array([0.0, 0.6, 0.0]), np.array([0.5, 0.0, 0.0])
    # rank one products keep D = |a|^2 |b|^2 / 2
    assert metric_D(np.outer(a, b)) == pytest.approx(0.5 * 0.36 * 0.25)


@settings(max_examples=50, deadline=None)
@given(E=arrays(np.float64, (3, 3), elements=st.floats(-1, 1)), seed=st.integers(0, 2 ** 32 - 1))
def test_metrics_invariant_under_rotations(E, seed):
    o1, o2 = Rotation.random(2, seed).as_matrix()
    rotated = o1 @ E @ o2
    for metric in (metric_D, metric_d, metric_Q):
        assert metric(rotated) == pytest.approx(metric(E), abs=1e-10)


def test_binary_entropy():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0)
    with pytest.raises(InputError):
        binary_entropy(1.5)


def test_metric_C3_examples():
    assert metric_C3(0.0) == pytest.approx(0.0, abs=1e-15)
    assert metric_C3(1.0) == pytest.approx(1.0)
    assert metric_C3(0.25) == pytest.approx(0.188722, abs=1e-6)
    for bad in (-0.1, 1.1):
        with pytest.raises(InputError):
            metric_C3(bad)


def test_metric_C3_strictly_increasing():
    values = [metric_C3(q) for q in np.linspace(0.001, 0.999, 500)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_fidelity_from_payoff():
    assert fidelity_from_payoff(0.0) == 0.5
    assert fidelity_from_payoff(1.0) == 1.0
    assert fidelity_from_payoff(1 / 9) == pytest.approx(2 / 3)
    with pytest.raises(InputError):
        fidelity_from_payoff(-0.01)


def test_optimal_fidelity_exact():
    assert optimal_fidelity_exact(DIAG_531) == pytest.approx(0.7031374, abs=1e-7)
    assert optimal_fidelity_exact(np.zeros((3, 3))) == 0.5
    # equal top singular values reach the closed form
    assert optimal_fidelity_exact(-0.5 * np.eye(3)) == pytest.approx(0.75)

    rng = np.random.default_rng(32)
    for E in rng.uniform(-1, 1, size=(200, 3, 3)):
        assert optimal_fidelity_exact(E) <= fidelity_from_payoff(metric_D(E)) + 1e-12


def test_closed_forms_for_bell_diagonal_state():
    forms = closed_forms(bell_diagonal(0.5, 0.3, 0.1))
    assert forms.D == pytest.approx(0.17)
    assert forms.d == pytest.approx(0.05)
    assert forms.Q == pytest.approx(0.35 / 3)
    assert forms.C3 == pytest.approx(metric_C3(0.35 / 3))
    assert forms.eigs == pytest.approx((0.25, 0.09, 0.01))
    assert forms.fidelity_closed == pytest.approx(0.5 * (1 + math.sqrt(0.17)))
    assert forms.payoff_valid == pytest.approx(0.17)
    assert forms.D_chi == pytest.approx(forms.D)


def test_closed_forms_with_local_vectors():
    s = new_state([0, 0, 0.4], [0, 0, 0.4], -0.2 * np.eye(3))
    forms = closed_forms(s)
    assert forms.C3 is None
    assert forms.D == pytest.approx(0.04)
    # b != 0, so the payoff figure falls back to the sphere average
    assert forms.payoff_valid == pytest.approx(0.04)
    # chi = diag(-.2, -.2, -.36)
    assert forms.D_chi == pytest.approx(0.5 * (0.36 ** 2 + 0.04))

    data = forms.to_dict()
    assert isinstance(data["eigs"], list)
    assert data["C3"] is None


def test_guessing_protocol_exact():
    stats = guessing_protocol_stats(n_samples=1024, method="exact")
    assert stats.avg_payoff == pytest.approx(0.5, abs=1e-12)
    assert stats.avg_fidelity == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_guessing_protocol_exact_on_small_grids(n):
    stats = guessing_protocol_stats(n_samples=n, method="exact")
    assert stats.avg_payoff == pytest.approx(0.5, abs=1e-12)
    assert stats.avg_fidelity == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_guessing_protocol_exact_rejects_degenerate_grids(n):
    with pytest.raises(InputError):
        guessing_protocol_stats(n_samples=n, method="exact")
    # sampling has no such floor
    guessing_protocol_stats(n_samples=n, method="monte_carlo", rng=np.random.default_rng(0))


def test_guessing_protocol_monte_carlo():
    stats = guessing_protocol_stats(n_samples=100_000, method="monte_carlo", rng=np.random.default_rng(33))
    assert stats.avg_payoff == pytest.approx(0.5, abs=0.02)
    assert stats.avg_fidelity == pytest.approx(0.5, abs=0.02)


def test_guessing_protocol_rejects_bad_input():
    with pytest.raises(InputError):
        guessing_protocol_stats(n_samples=0)
    with pytest.raises(InputError):
        guessing_protocol_stats(method="bogus")


def test_compare_separable_beats_entangled():
    separable = new_state(ZERO, ZERO, -np.eye(3) / 3, label="separable")
    entangled = new_state([0, 0, 0.4], [0, 0, 0.4], -np.eye(3) / 5, label="entangled")
    result = compare_states(separable, entangled)

    assert result.winner == 1
    first, second = result.entries
    assert first["payoff_valid"] == pytest.approx(1 / 9)
    assert second["payoff_valid"] == pytest.approx(1 / 25)
    assert first["fidelity_closed"] == pytest.approx(2 / 3)
    assert first["label"] == "separable"


def test_compare_ties_and_werner_ordering():
    assert compare_states(werner(0.5), werner(0.5)).winner == 0

    result = compare_states(werner(0.5), werner(0.8))
    assert result.winner == 2
    assert [entry["D"] for entry in result.entries] == pytest.approx([0.25, 0.64])


def test_compare_attaches_numeric_values():
    result = compare_states(werner(0.5), singlet(), evaluator=lambda s: {"F_num": 1.0})
    assert all(entry["numeric"] == {"F_num": 1.0} for entry in result.entries)
    assert result.to_dict()["states"] == result.entries
