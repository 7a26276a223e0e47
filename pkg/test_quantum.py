"""
Tests for the state and propagator layer.

Test coverage includes:
- Basis states, normalization and parameter validation.
- Two-level rf propagator: unitarity, semigroup law, Rabi transition probability.
- Conditional Hamiltonian structure and its Hermitian/anti-Hermitian split.
- No-jump propagation: norm monotonicity, composition, pure decay, expm fallback.
- Survival curves and jump-time inversion.
"""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from zeno_sim.errors import JumpTimeError
from zeno_sim.quantum import (
    NoJumpPropagator,
    VSystemParams,
    basis,
    conditional_hamiltonian,
    conditional_propagate,
    no_jump_propagator,
    normalize,
    split_hermitian,
    u_two_level,
)

PARAMS = VSystemParams(omega2=1.0, omega3=40.0, a3=20.0)


def random_states(rng, n):
    raw = rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def test_basis_and_normalize():
    assert np.array_equal(basis(2), np.array([0, 1, 0], dtype=complex))
    assert np.linalg.norm(normalize(np.array([3.0, 4.0, 0.0]))) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        basis(4)
    with pytest.raises(ValueError):
        normalize(np.zeros(3))


def test_params_small_parameters():
    assert PARAMS.eps_p == pytest.approx(0.0125)
    assert PARAMS.eps_r == pytest.approx(0.025)
    assert PARAMS.eps_a == pytest.approx(0.05)
    assert PARAMS.eps == pytest.approx(0.05)
    assert PARAMS.t_pi == pytest.approx(math.pi)


@pytest.mark.parametrize(
    "omega2, omega3, a3", [(-1.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0), (math.nan, 1.0, 1.0)]
)
def test_params_validation(omega2, omega3, a3):
    with pytest.raises(ValueError):
        VSystemParams(omega2=omega2, omega3=omega3, a3=a3)


def test_zero_fields_allowed():
    params = VSystemParams(omega2=0.0, omega3=0.0, a3=1.0)
    assert math.isinf(params.eps_p)
    assert math.isinf(params.t_pi)


def test_u_two_level_unitary_and_semigroup():
    rng = np.random.default_rng(1)
    for omega, t1, t2 in rng.uniform(0.0, 5.0, size=(200, 3)):
        u = u_two_level(omega, t1 + t2)
        assert np.max(np.abs(u.conj().T @ u - np.eye(3))) <= 1e-12
        composed = u_two_level(omega, t1) @ u_two_level(omega, t2)
        assert np.max(np.abs(u - composed)) <= 1e-12


def test_u_two_level_rabi_probability():
    rng = np.random.default_rng(2)
    for t in rng.uniform(0.0, 20.0, 100):
        u = u_two_level(1.3, t)
        assert abs(u[1, 0]) ** 2 == pytest.approx(math.sin(0.65 * t) ** 2, abs=1e-12)
    assert abs(u_two_level(1.0, math.pi)[1, 0]) ** 2 == pytest.approx(1.0, abs=1e-12)
    assert u_two_level(1.0, 2.0)[2, 2] == 1.0


def test_u_two_level_rejects_negative_duration():
    with pytest.raises(ValueError):
        u_two_level(1.0, -0.1)


def test_conditional_hamiltonian_structure():
    h = conditional_hamiltonian(PARAMS, True)
    assert h[0, 1] == h[1, 0] == 0.5
    assert h[0, 2] == h[2, 0] == 20.0
    assert h[2, 2] == -10j
    assert conditional_hamiltonian(PARAMS, False)[0, 2] == 0.0

    hermitian, anti = split_hermitian(h)
    assert np.allclose(hermitian + 1j * anti, h)
    assert np.allclose(hermitian, hermitian.conj().T)
    assert np.allclose(anti, anti.conj().T)
    assert anti[2, 2] == pytest.approx(-10.0)


@pytest.mark.parametrize("probe_on", [True, False])
def test_conditional_norm_never_increases(probe_on):
    rng = np.random.default_rng(3)
    propagator = no_jump_propagator(PARAMS, probe_on)
    times = np.linspace(0.0, 3.0, 61)
    for state in random_states(rng, 50):
        norms = propagator.survival(state).values(times)
        assert norms[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(norms) <= 1e-12)


def test_conditional_propagation_composes():
    rng = np.random.default_rng(4)
    propagator = no_jump_propagator(PARAMS, True)
    for state in random_states(rng, 50):
        t1, t2 = rng.uniform(0.0, 2.0, 2)
        direct = propagator.propagate(state, t1 + t2)
        stepped = propagator.propagate(propagator.propagate(state, t1), t2)
        assert np.max(np.abs(direct - stepped)) <= 1e-10


def test_pure_decay_of_level_three():
    params = VSystemParams(omega2=0.0, omega3=0.0, a3=2.0)
    survival = no_jump_propagator(params, True).survival(basis(3))
    times = np.linspace(0.0, 5.0, 21)
    assert np.allclose(survival.values(times), np.exp(-2.0 * times), atol=1e-12)


def test_conditional_propagate_norm_is_survival():
    state = normalize(basis(1) + basis(2))
    h = conditional_hamiltonian(PARAMS, True)
    evolved = conditional_propagate(state, h, 0.4)
    survival = no_jump_propagator(PARAMS, True).survival(state)
    assert np.vdot(evolved, evolved).real == pytest.approx(survival(0.4), abs=1e-12)


def test_eigendecomposition_matches_expm():
    propagator = no_jump_propagator(PARAMS, True)
    assert propagator.diagonal
    h = conditional_hamiltonian(PARAMS, True)
    assert np.allclose(propagator.matrix(0.7), expm(-1j * h * 0.7), atol=1e-10)


def test_defective_matrix_uses_expm_fallback():
    h = np.array([[0, 1, 0], [0, 0, 0], [0, 0, -1j]], dtype=complex)
    propagator = NoJumpPropagator(h)
    assert not propagator.diagonal
    state = normalize(np.array([1.0, 1.0, 1.0], dtype=complex))
    assert np.allclose(propagator.propagate(state, 1.5), expm(-1.5j * h) @ state)


def test_propagator_rejects_bad_matrices():
    with pytest.raises(ValueError):
        NoJumpPropagator(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        NoJumpPropagator(np.full((3, 3), np.nan))
    with pytest.raises(ValueError):
        no_jump_propagator(PARAMS, True).propagate(basis(1), -1.0)


def test_survival_inversion_hits_threshold():
    propagator = no_jump_propagator(PARAMS, True)
    survival = propagator.survival(basis(1))
    t = survival.invert(0.3, 10.0)
    assert survival(t) == pytest.approx(0.3, abs=1e-8)
    assert propagator.reset_survival.invert(0.3, 10.0) == pytest.approx(t, abs=1e-8)


def test_survival_inversion_outside_bracket():
    survival = no_jump_propagator(PARAMS, True).survival(basis(1))
    with pytest.raises(JumpTimeError):
        survival.invert(0.3, 1e-6)
