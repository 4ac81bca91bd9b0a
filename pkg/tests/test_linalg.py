import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from nhdyn.errors import (
    DimensionMismatch,
    NearDegenerate,
    NotHermitian,
    NotPositiveDefinite,
    SingularMatrix,
    UnsupportedDimension,
)
from nhdyn.linalg import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    PauliCoeffs,
    add,
    adjoint,
    eig,
    expm2,
    fix_phase,
    herm_sqrt,
    inverse,
    is_hermitian,
    mul,
    pauli_compose,
    pauli_decompose,
    polar_decompose,
    scale,
    trace,
)

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


def _rand(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


@given(st.lists(complexes, min_size=4, max_size=4))
def test_pauli_round_trip(entries):
    M = np.array(entries).reshape(2, 2)
    assert np.allclose(pauli_compose(pauli_decompose(M)), M, atol=1e-12)


def test_pauli_coefficients_of_basis():
    assert pauli_decompose(SIGMA_Y).as_tuple() == (0, 0, 1, 0)
    c = pauli_decompose(2 * IDENTITY + 3 * SIGMA_Z)
    assert c == PauliCoeffs(2, 0, 0, 3) and c.is_real()
    assert not pauli_decompose(1j * SIGMA_X).is_real()


def test_constants_are_read_only():
    with pytest.raises(ValueError):
        SIGMA_X[0, 0] = 1


def test_kernel_matches_numpy():
    rng = np.random.default_rng(0)
    A, B = _rand(rng, 3), _rand(rng, 3)
    assert np.allclose(add(A, B), A + B)
    assert np.allclose(scale(2j, A), 2j * A)
    assert np.allclose(mul(A, B), A @ B)
    assert np.allclose(adjoint(A), A.conj().T)
    assert np.isclose(trace(A), np.trace(A))
    with pytest.raises(DimensionMismatch):
        mul(A, np.eye(2))


def test_inverse_and_singular():
    rng = np.random.default_rng(1)
    A = _rand(rng, 3)
    assert np.allclose(inverse(A) @ A, np.eye(3), atol=1e-12)
    with pytest.raises(SingularMatrix):
        inverse(np.array([[1, 2], [2, 4]]))


def test_validation():
    with pytest.raises(DimensionMismatch):
        eig(np.ones((2, 3)))
    with pytest.raises(UnsupportedDimension):
        eig(np.eye(5))
    with pytest.raises(ValueError):
        eig(np.array([[np.nan, 0], [0, 1]]))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_eig_against_scipy(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        H = _rand(rng, n)
        basis = eig(H)
        ref = scipy.linalg.eigvals(H)
        assert np.allclose(np.sort_complex(basis.eigenvalues), np.sort_complex(ref), atol=1e-10)
        assert basis.biorthonormality_residual() < 1e-10
        assert basis.completeness_residual() < 1e-10
        assert np.allclose(basis.reconstruct(), H, atol=1e-10)
        r, l = basis.residuals(H)
        assert r < 1e-10 and l < 1e-10
        assert np.allclose(np.linalg.norm(basis.right, axis=0), 1.0)


def test_eig_examples():
    basis = eig(SIGMA_X - 0.5j * SIGMA_Z)
    assert np.allclose(basis.eigenvalues, [-np.sqrt(0.75), np.sqrt(0.75)])
    basis = eig(SIGMA_X + 0.5j * SIGMA_Y)
    assert np.allclose(basis.eigenvalues, [-np.sqrt(0.75), np.sqrt(0.75)])


def test_eig_ordering_real_then_imag():
    basis = eig(np.diag([2.0, 1j, -1j]))
    assert np.allclose(basis.eigenvalues, [-1j, 1j, 2.0])


def test_exceptional_point_detected():
    with pytest.raises(NearDegenerate) as info:
        eig(SIGMA_X - 1j * SIGMA_Z)
    assert info.value.gap <= info.value.threshold


def test_fix_phase():
    v = fix_phase(np.array([1j, 1.0]))
    assert v[0].real > 0 and abs(v[0].imag) < 1e-15


def test_herm_sqrt_examples():
    P = np.cosh(2) * IDENTITY + np.sinh(2) * SIGMA_Z
    assert np.allclose(herm_sqrt(P), np.cosh(1) * IDENTITY + np.sinh(1) * SIGMA_Z, atol=1e-12)
    assert np.allclose(herm_sqrt(IDENTITY), IDENTITY)


def test_herm_sqrt_against_scipy():
    rng = np.random.default_rng(3)
    for n in (2, 3, 4):
        A = _rand(rng, n)
        P = A @ A.conj().T + 0.1 * np.eye(n)
        eta = herm_sqrt(P)
        assert is_hermitian(eta)
        assert np.allclose(eta @ eta, P, atol=1e-10)
        assert np.allclose(eta, scipy.linalg.sqrtm(P), atol=1e-8)
        assert np.all(np.linalg.eigvalsh(eta) > 0)


def test_herm_sqrt_errors():
    with pytest.raises(NotHermitian):
        herm_sqrt(np.array([[1, 1], [0, 1]]))
    with pytest.raises(NotPositiveDefinite):
        herm_sqrt(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        herm_sqrt(np.diag([1.0, 0.0]))


def test_polar_decompose_batched():
    rng = np.random.default_rng(4)
    M = rng.normal(size=(10, 3, 3)) + 1j * rng.normal(size=(10, 3, 3))
    Q, eta = polar_decompose(M)
    assert np.allclose(Q @ eta, M, atol=1e-10)
    assert np.allclose(Q @ np.swapaxes(Q.conj(), -1, -2), np.eye(3), atol=1e-12)
    for e, m in zip(eta, M):
        assert np.allclose(e, scipy.linalg.sqrtm(m.conj().T @ m), atol=1e-8)


def test_polar_det_phase_fixes_ill_conditioned_factor():
    # nearly rank-one factor with a known determinant phase
    theta = 0.7
    U = scipy.linalg.expm(1j * (0.3 * SIGMA_X + 0.2 * SIGMA_Y + 0.1 * SIGMA_Z)) * np.exp(0.5j * theta)
    eta = np.diag([1e10, 1e-10])
    M = U @ eta
    Q, _ = polar_decompose(M, det_phase=np.exp(1j * theta))
    assert np.allclose(Q, U, atol=1e-9)


@settings(max_examples=50)
@given(st.lists(complexes, min_size=4, max_size=4))
def test_expm2_against_scipy(entries):
    A = np.array(entries).reshape(2, 2) * 0.5
    assert np.allclose(expm2(A), scipy.linalg.expm(A), rtol=1e-9, atol=1e-9)


def test_expm2_nilpotent_and_batch():
    N = np.array([[0, 1], [0, 0]], dtype=complex)
    assert np.allclose(expm2(N), [[1, 1], [0, 1]])
    batch = np.stack([N, SIGMA_Z])
    assert expm2(batch).shape == (2, 2, 2)
