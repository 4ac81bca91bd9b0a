import numpy as np
import pytest
import scipy.linalg

from nhdyn.dissipative import (
    EXCITED,
    GROUND,
    SIGMA_MINUS,
    SUPERPOSITION,
    BlochVector,
    DissipativeModel,
    closed_form_identity_residual,
    closed_form_model_a,
    evolve_me,
    evolve_nojump,
    evolve_pure_nojump,
    identify_initial_state,
    lindblad_rhs,
    liouvillian,
    nj_expectation,
    nojump_asymptote_model_b,
    nojump_rhs,
    norm_expectation,
    steady_state_model_b,
)
from nhdyn.errors import NotHermitian, NotPTBroken, NormUnderflow, PositivityLost, UnsupportedInitialState
from nhdyn.integrate import TimeGrid
from nhdyn.linalg import PAULI, SIGMA_X, SIGMA_Z


def _dm(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def test_model_conventions():
    m = DissipativeModel.model_a(1.0, 0.5)
    assert np.allclose(SIGMA_MINUS @ EXCITED, GROUND)
    assert np.allclose(m.effective_hamiltonian(), SIGMA_Z - 1j * np.diag([1.0, 0.0]))
    with pytest.raises(NotHermitian):
        DissipativeModel(SIGMA_X + 1j * SIGMA_Z)


def test_liouvillian_matches_rhs():
    rng = np.random.default_rng(0)
    m = DissipativeModel.model_b(1.0, 0.7)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = A @ A.conj().T
    L = liouvillian(m, [0.0])[0]
    assert np.allclose((L @ rho.ravel()).reshape(2, 2), lindblad_rhs(m, 0.0, rho))
    Lnj = liouvillian(m, [0.0], jumps=False)[0]
    assert np.allclose((Lnj @ rho.ravel()).reshape(2, 2), nojump_rhs(m, 0.0, rho))


def test_me_against_matrix_exponential():
    m = DissipativeModel.model_b(1.0, 0.5)
    L = liouvillian(m, [0.0])[0]
    grid = TimeGrid(0.0, 3.0, 1e-3)
    tr = evolve_me(m, _dm(GROUND), grid)
    ref = (scipy.linalg.expm(3.0 * L) @ _dm(GROUND).ravel()).reshape(2, 2)
    assert np.allclose(tr.rho[-1], ref, atol=1e-10)


def test_steady_state_is_stationary():
    m = DissipativeModel.model_b(1.0, 1.5)
    ss = steady_state_model_b(1.0, 1.5)
    assert np.allclose(lindblad_rhs(m, 0.0, ss.density()), 0, atol=1e-14)
    assert ss.length <= 1
    assert np.allclose(ss.as_array(), [0, 6 / 11, -9 / 11])


def test_nojump_asymptote():
    with pytest.raises(NotPTBroken):
        nojump_asymptote_model_b(1.0, 0.5)
    b = nojump_asymptote_model_b(1.0, 1.5)
    assert np.isclose(b.length, 1.0)


@pytest.mark.parametrize("psi", [GROUND, EXCITED, SUPERPOSITION], ids=["ground", "excited", "superposition"])
def test_closed_forms_against_integrators(psi):
    omega, gamma = 1.0, 0.5
    m = DissipativeModel.model_a(omega, gamma)
    grid = TimeGrid(0.0, 5.0, 1e-3)
    me = evolve_me(m, _dm(psi), grid)
    nj = evolve_nojump(m, _dm(psi), grid)
    for O in PAULI:
        assert np.allclose(me.expectation(O), closed_form_model_a("me", O, psi, omega, gamma, grid.times), atol=1e-9)
        assert np.allclose(nj.expectation(O), closed_form_model_a("nj", O, psi, omega, gamma, grid.times), atol=1e-9)
        assert np.max(closed_form_identity_residual(O, omega, gamma, grid.times)) <= 1e-12


def test_pure_nojump_matches_density_nojump():
    m = DissipativeModel.model_b(1.0, 1.5)
    grid = TimeGrid(0.0, 4.0, 1e-3)
    psi = evolve_pure_nojump(m.effective_hamiltonian(), SUPERPOSITION, grid)
    rho = evolve_nojump(m, _dm(SUPERPOSITION), grid)
    for O in PAULI:
        assert np.allclose(norm_expectation(psi, O), rho.expectation(O), atol=1e-10)
    assert np.isclose(nj_expectation(rho, SIGMA_Z, 10), rho.expectation(SIGMA_Z)[10])


def test_identify_initial_state():
    assert identify_initial_state(GROUND * 1j) == "ground"
    assert identify_initial_state(EXCITED) == "excited"
    assert identify_initial_state(-SUPERPOSITION) == "superposition"
    with pytest.raises(UnsupportedInitialState):
        identify_initial_state([0.6, 0.8])


def test_bloch_vector_round_trip():
    psi = np.array([0.6, 0.8j])
    b = BlochVector.from_state(psi)
    assert np.isclose(b.length, 1.0)
    assert np.allclose(b.density(), _dm(psi))
    assert np.allclose(BlochVector.from_density(b.density()).as_array(), b.as_array())


def test_invalid_density_rejected():
    m = DissipativeModel.model_a(1.0, 0.5)
    grid = TimeGrid(0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        evolve_me(m, np.eye(2), grid)
    with pytest.raises(ValueError):
        evolve_me(m, np.diag([1.5, -0.5]), grid)


def test_positivity_loss_detected_for_huge_step():
    m = DissipativeModel.model_a(1.0, 5.0)
    with pytest.raises(PositivityLost):
        evolve_me(m, _dm(EXCITED), TimeGrid(0.0, 10.0, 0.5))


def test_norm_underflow():
    m = DissipativeModel.model_a(1.0, 5.0)
    tr = evolve_nojump(m, _dm(EXCITED), TimeGrid(0.0, 40.0, 1e-2))
    with pytest.raises(NormUnderflow):
        tr.expectation(SIGMA_Z)
