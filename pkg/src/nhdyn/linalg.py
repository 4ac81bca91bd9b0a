"""Dense small complex matrix kernels.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The functions
here validate their inputs (square, finite, conformable) and raise the
exceptions from :mod:`nhdyn.errors`; internal hot loops elsewhere in the
package use numpy directly on batched arrays.

Eigendecomposition is restricted to ``N <= 4``. For ``N = 2`` the eigenvalues
come from the closed-form quadratic, for ``N = 3, 4`` from LAPACK.
Eigenvectors are null vectors of ``H - E`` (right) and ``H^† - E^*`` (left).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key

import numpy as np

from .errors import (
    DimensionMismatch,
    NearDegenerate,
    NotHermitian,
    NotPositiveDefinite,
    SingularMatrix,
    UnsupportedDimension,
)

EPS_EP = 1e-8
EPS_PD = 1e-12
HERMITIAN_TOL = 1e-10
PHASE_TOL = 1e-10
MAX_DIM = 4


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


IDENTITY = _frozen(np.eye(2))
SIGMA_X = _frozen([[0, 1], [1, 0]])
SIGMA_Y = _frozen([[0, -1j], [1j, 0]])
SIGMA_Z = _frozen([[1, 0], [0, -1]])
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_matrix(M, dim: int | None = None) -> np.ndarray:
    """Return ``M`` as a square finite complex matrix, or raise."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if dim is not None and A.shape[0] != dim:
        raise DimensionMismatch(f"expected a {dim}x{dim} matrix, got {A.shape[0]}x{A.shape[0]}")
    if A.shape[0] == 0:
        raise DimensionMismatch("empty matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_vector(v, dim: int | None = None) -> np.ndarray:
    x = np.asarray(v, dtype=complex)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionMismatch(f"expected length {dim}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


# -- algebra kernel -----------------------------------------------------------


def _conformable(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} do not conform")


def add(A, B) -> np.ndarray:
    A, B = as_matrix(A), as_matrix(B)
    _conformable(A, B)
    return A + B


def scale(c: complex, A) -> np.ndarray:
    return complex(c) * as_matrix(A)


def mul(A, B) -> np.ndarray:
    A, B = as_matrix(A), as_matrix(B)
    _conformable(A, B)
    return A @ B


def adjoint(A) -> np.ndarray:
    return as_matrix(A).conj().T


def trace(A) -> complex:
    return complex(np.trace(as_matrix(A)))


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(as_matrix(A)))


def inverse(A) -> np.ndarray:
    """Matrix inverse; raises :class:`SingularMatrix` when ``|det| <= 1e-14 ||A||^N``."""
    A = as_matrix(A)
    n = A.shape[0]
    det = np.linalg.det(A)
    if abs(det) <= 1e-14 * frobenius_norm(A) ** n:
        raise SingularMatrix(f"|det| = {abs(det):.3e} is below the singularity threshold")
    return np.linalg.inv(A)


def is_hermitian(A, tol: float = HERMITIAN_TOL) -> bool:
    A = np.asarray(A, dtype=complex)
    return bool(np.linalg.norm(A - A.conj().T) <= tol * max(1.0, np.linalg.norm(A)))


def hermitian_part(A: np.ndarray) -> np.ndarray:
    """``(A + A^†)/2`` over the last two axes."""
    return 0.5 * (A + np.swapaxes(A, -1, -2).conj())


def dagger(A: np.ndarray) -> np.ndarray:
    """Batched conjugate transpose over the last two axes."""
    return np.swapaxes(A, -1, -2).conj()


# -- Pauli bookkeeping --------------------------------------------------------


@dataclass(frozen=True)
class PauliCoeffs:
    """Coefficients of ``a0·1 + ax·σx + ay·σy + az·σz``."""

    a0: complex
    ax: complex
    ay: complex
    az: complex

    def compose(self) -> np.ndarray:
        return np.array(
            [[self.a0 + self.az, self.ax - 1j * self.ay], [self.ax + 1j * self.ay, self.a0 - self.az]],
            dtype=complex,
        )

    def as_tuple(self) -> tuple[complex, complex, complex, complex]:
        return (self.a0, self.ax, self.ay, self.az)

    def is_real(self, tol: float = HERMITIAN_TOL) -> bool:
        return all(abs(complex(c).imag) <= tol for c in self.as_tuple())


def pauli_decompose(M) -> PauliCoeffs:
    M = as_matrix(M, dim=2)
    m00, m01, m10, m11 = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    return PauliCoeffs(
        a0=complex(0.5 * (m00 + m11)),
        ax=complex(0.5 * (m01 + m10)),
        ay=complex(0.5j * (m01 - m10)),
        az=complex(0.5 * (m00 - m11)),
    )


def pauli_compose(coeffs: PauliCoeffs) -> np.ndarray:
    return coeffs.compose()


# -- eigendecomposition -------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with paired right and left eigenvectors.

    ``right[:, n]`` and ``left[:, n]`` belong to ``eigenvalues[n]``. Right
    vectors have unit 2-norm and a fixed phase; left vectors are scaled so
    that ``left[:, n]^† right[:, n] = 1``.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    gap: float
    scale: float

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])

    def overlaps(self) -> np.ndarray:
        """Matrix ``⟨m_L|n_R⟩``."""
        return self.left.conj().T @ self.right

    def biorthonormality_residual(self) -> float:
        return float(np.max(np.abs(self.overlaps() - np.eye(self.dim))))

    def completeness_residual(self) -> float:
        return float(np.max(np.abs(self.right @ self.left.conj().T - np.eye(self.dim))))

    def reconstruct(self) -> np.ndarray:
        """``Σ_n E_n |n⟩_R⟨n_L|``."""
        return (self.right * self.eigenvalues) @ self.left.conj().T

    def residuals(self, H) -> tuple[float, float]:
        """Largest eigen-equation residuals for right and left vectors."""
        H = as_matrix(H)
        r = H @ self.right - self.right * self.eigenvalues
        l = H.conj().T @ self.left - self.left * self.eigenvalues.conj()
        return float(np.max(np.linalg.norm(r, axis=0))), float(np.max(np.linalg.norm(l, axis=0)))


def _sorted_eigenvalues(vals: np.ndarray, tol: float) -> np.ndarray:
    def cmp(a: complex, b: complex) -> int:
        if abs(a.real - b.real) > tol:
            return -1 if a.real < b.real else 1
        if a.imag != b.imag:
            return -1 if a.imag < b.imag else 1
        return 0

    return np.array(sorted((complex(v) for v in vals), key=cmp_to_key(cmp)), dtype=complex)


def _eigenvalues_2x2(A: np.ndarray) -> np.ndarray:
    half_trace = 0.5 * (A[0, 0] + A[1, 1])
    half_diff = 0.5 * (A[0, 0] - A[1, 1])
    root = np.sqrt(complex(half_diff * half_diff + A[0, 1] * A[1, 0]))
    return np.array([half_trace - root, half_trace + root], dtype=complex)


def _null_vector(B: np.ndarray) -> np.ndarray:
    if B.shape[0] == 2:
        row = B[0] if np.linalg.norm(B[0]) >= np.linalg.norm(B[1]) else B[1]
        return np.array([row[1], -row[0]], dtype=complex)
    _, _, vh = np.linalg.svd(B)
    return vh[-1].conj()


def fix_phase(v: np.ndarray, tol: float = PHASE_TOL) -> np.ndarray:
    """Rotate ``v`` so its first non-negligible component is real and positive."""
    norm = np.linalg.norm(v)
    for c in v:
        if abs(c) > tol * norm:
            return v * (abs(c) / c)
    return v


def eig(H, eps_ep: float = EPS_EP) -> Spectrum:
    """Biorthonormal eigendecomposition of a nondegenerate ``H`` (``N <= 4``).

    Eigenvalues are ordered by real part, then imaginary part. Raises
    :class:`NearDegenerate` when the minimum eigenvalue separation is at or
    below ``eps_ep * ||H||_F``.
    """
    A = as_matrix(H)
    n = A.shape[0]
    if n > MAX_DIM:
        raise UnsupportedDimension(f"eig supports N <= {MAX_DIM}, got N = {n}")
    scale_ = float(np.linalg.norm(A))
    if n == 1:
        E = np.array([A[0, 0]])
        one = np.ones((1, 1), dtype=complex)
        return Spectrum(E, one.copy(), one.copy(), float("inf"), scale_)

    raw = _eigenvalues_2x2(A) if n == 2 else np.linalg.eigvals(A)
    vals = _sorted_eigenvalues(raw, tol=1e-10 * scale_)
    gap = min(abs(vals[i] - vals[j]) for i in range(n) for j in range(i + 1, n))
    threshold = eps_ep * scale_
    if gap <= threshold:
        raise NearDegenerate(gap, threshold)

    eye = np.eye(n)
    right = np.empty((n, n), dtype=complex)
    left = np.empty((n, n), dtype=complex)
    for k, E in enumerate(vals):
        r = _null_vector(A - E * eye)
        r = fix_phase(r / np.linalg.norm(r))
        l = _null_vector(A.conj().T - np.conj(E) * eye)
        l = l / np.conj(np.vdot(l, r))
        right[:, k] = r
        left[:, k] = l
    return Spectrum(vals, right, left, float(gap), scale_)


# -- Hermitian positive-definite square root ----------------------------------


def herm_sqrt(P, eps_pd: float = EPS_PD) -> np.ndarray:
    """Hermitian positive-definite square root of a Hermitian PD matrix.

    The positivity threshold is relative: the smallest eigenvalue must exceed
    ``eps_pd * max(1, λ_max)``.
    """
    P = as_matrix(P)
    if not is_hermitian(P):
        raise NotHermitian("herm_sqrt requires a Hermitian matrix")
    w, V = np.linalg.eigh(hermitian_part(P))
    if w[0] <= eps_pd * max(1.0, w[-1]):
        raise NotPositiveDefinite(w[0])
    eta = (V * np.sqrt(w)) @ V.conj().T
    return hermitian_part(eta)


def polar_decompose(M: np.ndarray, det_phase=None) -> tuple[np.ndarray, np.ndarray]:
    """Batched polar decomposition ``M = Q η`` with ``Q`` unitary, ``η = (M^†M)^{1/2}``.

    When ``M`` is so ill conditioned that its smallest singular value is
    rounding noise, the SVD fixes the phases of the last left and right
    singular vectors independently and ``Q`` is off by a phase in that
    direction. Passing the known phase of ``det M`` (``det_phase``, unit
    modulus) restores it. For ``N = 2`` this makes ``Q`` exact to working
    precision for any conditioning.
    """
    X, s, Yh = np.linalg.svd(M)
    if det_phase is not None:
        current = np.linalg.det(X) * np.linalg.det(Yh)
        X = X.copy()
        X[..., :, -1] *= (np.asarray(det_phase) / current)[..., None]
    Q = X @ Yh
    eta = (dagger(Yh) * s[..., None, :]) @ Yh
    return Q, hermitian_part(eta)


def expm2(A: np.ndarray) -> np.ndarray:
    """Closed-form exponential of (batched) 2x2 matrices.

    With ``A = a0·1 + B`` and ``B² = q·1``: ``exp(A) = e^{a0}(cosh(s)·1 + sinh(s)/s·B)``
    where ``s = sqrt(q)``.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape[-2:] != (2, 2):
        raise DimensionMismatch(f"expm2 needs 2x2 matrices, got {A.shape}")
    a0 = 0.5 * (A[..., 0, 0] + A[..., 1, 1])
    B = A - a0[..., None, None] * np.eye(2)
    q = B[..., 0, 0] ** 2 + B[..., 0, 1] * B[..., 1, 0]
    s = np.sqrt(q)
    small = np.abs(s) < 1e-8
    safe = np.where(small, 1.0, s)
    shc = np.where(small, 1.0 + q / 6.0, np.sinh(safe) / safe)
    out = np.cosh(s)[..., None, None] * np.eye(2) + shc[..., None, None] * B
    return np.exp(a0)[..., None, None] * out
