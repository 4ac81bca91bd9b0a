"""Biorthogonal quantum mechanics on a finite basis.

States are expanded in the right eigenvectors of ``H``; the bra used in
expectation values is the associated state built from the left eigenvectors
with the same coefficients. For a real, nondegenerate spectrum the operator
``S = Σ |n_L⟩⟨n_L|`` intertwines ``H`` and ``H^†`` and its Hermitian square
root maps ``H`` to a Hermitian matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoRealSpectrum, ZeroVector
from .linalg import EPS_EP, Spectrum, as_matrix, as_vector, eig, herm_sqrt, inverse

TOL = 1e-10
TOL_REAL = 1e-8


def build_basis(H, eps_ep: float = EPS_EP) -> Spectrum:
    """Biorthonormal eigenbasis of ``H``.

    Right vectors have unit norm and a fixed phase; the normalization
    ``⟨n_L|n_R⟩ = 1`` is carried entirely by the left vectors.
    """
    return eig(H, eps_ep=eps_ep)


@dataclass(frozen=True, eq=False)
class BiorthState:
    """State ``|ψ⟩ = Σ c_n |n_R⟩`` with ``Σ |c_n|² = 1``."""

    coefficients: np.ndarray
    basis: Spectrum

    @property
    def ket(self) -> np.ndarray:
        return self.basis.right @ self.coefficients

    def associated_state(self) -> np.ndarray:
        """``|ψ̃⟩ = Σ c_n |n_L⟩``."""
        return self.basis.left @ self.coefficients


def decompose(psi, basis: Spectrum) -> BiorthState:
    """Coefficients ``c_n = ⟨n_L|ψ⟩``, rescaled so that ``Σ |c_n|² = 1``."""
    psi = as_vector(psi, dim=basis.dim)
    if not np.any(psi):
        raise ZeroVector("cannot decompose the zero vector")
    c = basis.left.conj().T @ psi
    norm = np.linalg.norm(c)
    if norm == 0.0:
        raise ZeroVector("state has no overlap with the left basis")
    return BiorthState(c / norm, basis)


def associated_state(state: BiorthState) -> np.ndarray:
    return state.associated_state()


def biorth_expectation(F, state: BiorthState) -> complex:
    """``⟨ψ̃|F|ψ⟩``."""
    F = np.asarray(F, dtype=complex)
    if F.shape != (state.basis.dim, state.basis.dim):
        raise DimensionMismatch(f"operator shape {F.shape} does not match basis dimension {state.basis.dim}")
    return complex(np.vdot(state.associated_state(), F @ state.ket))


def biorth_matrix(F, basis: Spectrum) -> np.ndarray:
    """Matrix elements ``f_mn = ⟨m_L|F|n_R⟩``."""
    F = as_matrix(F, dim=basis.dim)
    return basis.left.conj().T @ F @ basis.right


def is_biorth_hermitian(F, basis: Spectrum, tol: float = TOL) -> bool:
    """Whether ``f_mn = f_nm*`` for all pairs, so that ``⟨F⟩`` is always real."""
    f = biorth_matrix(F, basis)
    return bool(np.max(np.abs(f - f.conj().T)) <= tol * max(1.0, np.max(np.abs(f))))


def operator_from_elements(f, basis: Spectrum) -> np.ndarray:
    """``F = Σ f_mn |m_R⟩⟨n_L|``, the inverse of :func:`biorth_matrix`."""
    f = as_matrix(f, dim=basis.dim)
    return basis.right @ f @ basis.left.conj().T


@dataclass(frozen=True, eq=False)
class PseudoHermitianPair:
    """``S``, its inverse and its Hermitian square root."""

    S: np.ndarray
    S_inv: np.ndarray
    S_sqrt: np.ndarray

    @property
    def S_sqrt_inv(self) -> np.ndarray:
        return inverse(self.S_sqrt)


def pseudo_S(basis: Spectrum, tol_real: float = TOL_REAL) -> PseudoHermitianPair:
    """Intertwining operator ``S = Σ |n_L⟩⟨n_L|`` with ``S H S⁻¹ = H^†``.

    Raises
    ------
    NoRealSpectrum
        If some ``|Im E_n|`` exceeds ``tol_real · ‖H‖``.
    """
    max_imag = float(np.max(np.abs(basis.eigenvalues.imag)))
    if max_imag > tol_real * max(basis.scale, 1e-300):
        raise NoRealSpectrum(max_imag)
    L, R = basis.left, basis.right
    S = L @ L.conj().T
    S_inv = R @ R.conj().T
    S = 0.5 * (S + S.conj().T)
    S_inv = 0.5 * (S_inv + S_inv.conj().T)
    return PseudoHermitianPair(S, S_inv, herm_sqrt(S))


def map_to_hermitian_static(F, pair: PseudoHermitianPair) -> np.ndarray:
    """``F̃ = √S⁻¹ F √S``."""
    F = as_matrix(F, dim=pair.S.shape[0])
    return pair.S_sqrt_inv @ F @ pair.S_sqrt


def hermitian_counterpart(H, pair: PseudoHermitianPair) -> np.ndarray:
    """``√S H √S⁻¹``, Hermitian whenever ``S`` intertwines ``H`` and ``H^†``."""
    H = as_matrix(H, dim=pair.S.shape[0])
    return pair.S_sqrt @ H @ pair.S_sqrt_inv
