import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhdyn.biorthogonal import (
    associated_state,
    biorth_expectation,
    biorth_matrix,
    build_basis,
    decompose,
    hermitian_counterpart,
    is_biorth_hermitian,
    map_to_hermitian_static,
    operator_from_elements,
    pseudo_S,
)
from nhdyn.errors import DimensionMismatch, NoRealSpectrum, ZeroVector
from nhdyn.linalg import SIGMA_X, SIGMA_Z, is_hermitian

H0 = SIGMA_X - 0.5j * SIGMA_Z


def _pseudo_hermitian(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 3 * np.eye(n)
    D = np.diag(np.arange(n) + rng.uniform(0, 0.5, n))
    return A @ D @ np.linalg.inv(A)


def test_pseudo_S_intertwines_example():
    pair = pseudo_S(build_basis(H0))
    assert np.max(np.abs(pair.S @ H0 @ pair.S_inv - H0.conj().T)) <= 1e-9
    assert np.allclose(pair.S @ pair.S_inv, np.eye(2), atol=1e-12)
    assert is_hermitian(pair.S_sqrt)
    assert np.allclose(pair.S_sqrt @ pair.S_sqrt, pair.S, atol=1e-12)
    h = hermitian_counterpart(H0, pair)
    assert is_hermitian(h, tol=1e-9)
    assert np.allclose(np.linalg.eigvalsh(h), [-np.sqrt(0.75), np.sqrt(0.75)])
    assert np.allclose(map_to_hermitian_static(h, pair), H0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3, 4]))
def test_pseudo_S_random(seed, n):
    H = _pseudo_hermitian(seed, n)
    pair = pseudo_S(build_basis(H))
    scale = np.linalg.norm(H) * np.linalg.cond(pair.S)
    assert np.max(np.abs(pair.S @ H @ pair.S_inv - H.conj().T)) <= 1e-10 * scale
    assert is_hermitian(hermitian_counterpart(H, pair), tol=1e-9 * scale)


def test_pseudo_S_requires_real_spectrum():
    with pytest.raises(NoRealSpectrum):
        pseudo_S(build_basis(SIGMA_X - 1.5j * SIGMA_Z))


def test_associated_state_expectation_equals_metric_form():
    basis = build_basis(H0)
    state = decompose(np.array([0.3, 0.7j]), basis)
    assert np.isclose(np.sum(np.abs(state.coefficients) ** 2), 1.0)
    pair = pseudo_S(basis)
    psi = state.ket
    # ⟨ψ|S|ψ⟩ equals ⟨ψ̃|ψ⟩
    assert np.isclose(np.vdot(psi, pair.S @ psi), np.vdot(associated_state(state), psi))
    # energy is real and equals Σ |c|² E
    E = biorth_expectation(H0, state)
    assert np.isclose(E, np.sum(np.abs(state.coefficients) ** 2 * basis.eigenvalues))


def test_biorth_matrix_round_trip_and_hermiticity():
    basis = build_basis(H0)
    rng = np.random.default_rng(2)
    F = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    assert np.allclose(operator_from_elements(biorth_matrix(F, basis), basis), F)
    assert is_biorth_hermitian(H0, basis)
    f = np.array([[1.0, 2 - 1j], [2 + 1j, -0.5]])
    G = operator_from_elements(f, basis)
    assert is_biorth_hermitian(G, basis)
    assert abs(biorth_expectation(G, decompose([1, 1j], basis)).imag) < 1e-12
    assert not is_biorth_hermitian(np.array([[1.0, 2.0], [0.0, 1j]]), basis)


def test_errors():
    basis = build_basis(H0)
    with pytest.raises(ZeroVector):
        decompose([0, 0], basis)
    with pytest.raises(DimensionMismatch):
        decompose([1, 0, 0], basis)
    with pytest.raises(DimensionMismatch):
        biorth_expectation(np.eye(3), decompose([1, 0], basis))
