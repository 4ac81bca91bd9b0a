"""Lindblad master equation, its no-jump limit, and the two-level closed forms.

Basis convention for the two-level models: index 0 is the excited state
``|1⟩`` (``σz = +1``) and index 1 the ground state ``|0⟩`` (``σz = −1``), so
the lowering operator is ``σ− = [[0, 0], [1, 0]]``.

Density matrices are evolved as row-major vectors, for which
``vec(A X B) = (A ⊗ B^T) vec(X)``; the Liouvillian is then a plain
``N² × N²`` matrix and the generic linear RK4 driver applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NormUnderflow, NotHermitian, NotPTBroken, PositivityLost, UnsupportedInitialState
from .integrate import HamiltonianFn, TimeGrid, as_hamiltonian, integrate_on_grid
from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, as_matrix, dagger, hermitian_part, is_hermitian

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS.setflags(write=False)
EXCITED = np.array([1, 0], dtype=complex)
GROUND = np.array([0, 1], dtype=complex)
SUPERPOSITION = (GROUND - EXCITED) / math.sqrt(2.0)
for _v in (EXCITED, GROUND, SUPERPOSITION):
    _v.setflags(write=False)

POSITIVITY_FLOOR = -1e-8
TRACE_FLOOR = 1e-14


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @classmethod
    def from_density(cls, rho) -> "BlochVector":
        rho = as_matrix(rho, dim=2)
        tr = np.trace(rho).real
        return cls(*(float(np.trace(rho @ s).real / tr) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)))

    @classmethod
    def from_state(cls, psi) -> "BlochVector":
        psi = np.asarray(psi, dtype=complex)
        return cls.from_density(np.outer(psi, psi.conj()))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def density(self) -> np.ndarray:
        return 0.5 * (np.eye(2) + self.x * SIGMA_X + self.y * SIGMA_Y + self.z * SIGMA_Z)

    @property
    def length(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


class DissipativeModel:
    """Hermitian Hamiltonian plus time-independent jump operators."""

    def __init__(self, H, jumps: Sequence = (), omega: float | None = None, gamma: float | None = None):
        self.H = as_hamiltonian(H)
        n = self.H.dim
        self.jumps = tuple(as_matrix(G, dim=n) for G in jumps)
        if not is_hermitian(self.H(0.0), tol=1e-12):
            raise NotHermitian("system Hamiltonian must be Hermitian")
        self.omega = omega
        self.gamma = gamma
        self.decay = sum((G.conj().T @ G for G in self.jumps), np.zeros((n, n), dtype=complex))

    @property
    def dim(self) -> int:
        return self.H.dim

    @classmethod
    def model_a(cls, omega: float, gamma: float) -> "DissipativeModel":
        """``H = ωσz`` with decay ``Γ = 2√γ σ−``."""
        return cls(omega * SIGMA_Z, [2 * math.sqrt(gamma) * SIGMA_MINUS], omega, gamma)

    @classmethod
    def model_b(cls, omega: float, gamma: float) -> "DissipativeModel":
        """``H = ωσx`` with decay ``Γ = 2√γ σ−``."""
        return cls(omega * SIGMA_X, [2 * math.sqrt(gamma) * SIGMA_MINUS], omega, gamma)

    def effective_hamiltonian(self, t: float = 0.0) -> np.ndarray:
        """``H − (i/2) Σ Γ^†Γ``, identity part included."""
        return self.H(t) - 0.5j * self.decay

    def effective_fn(self) -> HamiltonianFn:
        return HamiltonianFn(lambda ts: self.H.at(ts) - 0.5j * self.decay, self.dim)


def effective_hamiltonian(model: DissipativeModel, t: float = 0.0) -> np.ndarray:
    return model.effective_hamiltonian(t)


def lindblad_rhs(model: DissipativeModel, t: float, rho) -> np.ndarray:
    """``−i[H, ρ] + Σ (Γ ρ Γ^† − ½{Γ^†Γ, ρ})``."""
    rho = as_matrix(rho, dim=model.dim)
    H = model.H(t)
    out = -1j * (H @ rho - rho @ H)
    for G in model.jumps:
        out += G @ rho @ G.conj().T
    out -= 0.5 * (model.decay @ rho + rho @ model.decay)
    return out


def nojump_rhs(model: DissipativeModel, t: float, rho) -> np.ndarray:
    """``−i(H_eff ρ − ρ H_eff^†)``."""
    rho = as_matrix(rho, dim=model.dim)
    He = model.effective_hamiltonian(t)
    return -1j * (He @ rho - rho @ He.conj().T)


def _commutator_super(H: np.ndarray, Hd: np.ndarray) -> np.ndarray:
    # vec(A ρ − ρ B) for stacked A, B, row-major vec
    n = H.shape[-1]
    eye = np.eye(n)
    left = np.einsum("...ij,kl->...ikjl", H, eye)
    right = np.einsum("ij,...lk->...ikjl", eye, Hd)
    return (left - right).reshape(H.shape[:-2] + (n * n, n * n))


def liouvillian(model: DissipativeModel, times, jumps: bool = True) -> np.ndarray:
    """Superoperator at each time, shape ``(T, *batch, N², N²)``.

    With ``jumps=False`` the recycling terms ``Γ ρ Γ^†`` are dropped, which
    gives the no-jump generator ``−i(H_eff ρ − ρ H_eff^†)``.
    """
    n = model.dim
    Heff = model.H.at(times) - 0.5j * model.decay
    # ρ̇ = Aρ + ρA^† with A = −i H_eff
    L = _commutator_super(-1j * Heff, dagger(1j * Heff))
    if jumps:
        for G in model.jumps:
            L = L + np.einsum("ij,kl->ikjl", G, G.conj()).reshape(n * n, n * n)
    return L


@dataclass(frozen=True, eq=False)
class DensityTrajectory:
    grid: TimeGrid
    kind: str
    rho: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def trace(self) -> np.ndarray:
        return np.trace(self.rho, axis1=-2, axis2=-1).real

    def expectation(self, O) -> np.ndarray:
        """``Tr(ρ O)`` for the master equation, ``Tr(ρ O)/Tr ρ`` in the no-jump case."""
        O = as_matrix(O, dim=self.rho.shape[-1])
        num = np.einsum("...ij,ji->...", self.rho, O).real
        if self.kind == "full_me":
            return num
        tr = self.trace
        bad = tr <= TRACE_FLOOR
        if np.any(bad):
            i = int(np.argmax(bad.reshape(bad.shape[0], -1).any(axis=1)))
            raise NormUnderflow(self.times[i])
        return num / tr

    def bloch(self) -> np.ndarray:
        return np.stack([self.expectation(s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)], axis=-1)


def _check_density(rho0, n: int) -> np.ndarray:
    rho0 = as_matrix(rho0, dim=n)
    if not is_hermitian(rho0):
        raise NotHermitian("initial density matrix must be Hermitian")
    if abs(np.trace(rho0).real - 1.0) > 1e-10:
        raise ValueError("initial density matrix must have unit trace")
    if np.linalg.eigvalsh(hermitian_part(rho0))[0] < -1e-10:
        raise ValueError("initial density matrix must be positive semidefinite")
    return rho0


def _evolve(model: DissipativeModel, rho0: np.ndarray, grid: TimeGrid, jumps: bool) -> np.ndarray:
    n = model.dim
    vec = integrate_on_grid(lambda ts: liouvillian(model, ts, jumps=jumps), rho0.reshape(n * n), grid, vector=True)
    return vec.reshape(vec.shape[:-1] + (n, n))


def evolve_me(model: DissipativeModel, rho0, grid: TimeGrid) -> DensityTrajectory:
    """Full Lindblad evolution with RK4.

    Raises
    ------
    PositivityLost
        If an eigenvalue of a stored ``ρ`` drops below ``−1e-8``.
    """
    rho0 = _check_density(rho0, model.dim)
    rho = _evolve(model, rho0, grid, jumps=True)
    if not np.all(np.isfinite(rho)):
        raise PositivityLost(grid.t1, "density matrix is not finite; reduce dt")
    low = np.linalg.eigvalsh(rho)[..., 0]
    if np.any(low < POSITIVITY_FLOOR):
        i = int(np.argmax(low < POSITIVITY_FLOOR))
        raise PositivityLost(grid.times[i], f"min eigenvalue {low[i]:.3e}")
    return DensityTrajectory(grid, "full_me", rho)


def evolve_nojump(model: DissipativeModel, rho0, grid: TimeGrid) -> DensityTrajectory:
    """Evolution under ``H_eff`` with the recycling term dropped (unnormalized)."""
    rho0 = _check_density(rho0, model.dim)
    return DensityTrajectory(grid, "no_jump", _evolve(model, rho0, grid, jumps=False))


def nj_expectation(traj: DensityTrajectory, O, t_index: int) -> float:
    """``Tr(ρ_nj O)/Tr ρ_nj`` at one stored time."""
    if traj.kind != "no_jump":
        raise ValueError("nj_expectation needs a no-jump trajectory")
    O = as_matrix(O, dim=traj.rho.shape[-1])
    rho = traj.rho[t_index]
    tr = float(np.trace(rho).real)
    if tr <= TRACE_FLOOR:
        raise NormUnderflow(traj.times[t_index])
    return float(np.trace(rho @ O).real / tr)


def evolve_pure_nojump(Heff, psi0, grid: TimeGrid) -> np.ndarray:
    """Unnormalized states under ``i ψ̇ = H_eff ψ``, shape ``(T, *batch, N)``."""
    H = as_hamiltonian(Heff)
    return integrate_on_grid(lambda ts: -1j * H.at(ts), np.asarray(psi0, dtype=complex), grid, vector=True)


def norm_expectation(psi: np.ndarray, O) -> np.ndarray:
    """Division by norm: ``⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`` along a stack of states."""
    O = np.asarray(O, dtype=complex)
    num = np.einsum("...i,ij,...j->...", psi.conj(), O, psi).real
    den = np.sum(np.abs(psi) ** 2, axis=-1)
    if np.any(den <= TRACE_FLOOR):
        raise NormUnderflow(float("nan"))
    return num / den


# -- closed forms for the commuting model ---------------------------------------


def identify_initial_state(psi0) -> str:
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (2,):
        raise UnsupportedInitialState("closed forms are for two-level states")
    psi0 = psi0 / np.linalg.norm(psi0)
    for name, ref in (("ground", GROUND), ("excited", EXCITED), ("superposition", SUPERPOSITION)):
        if abs(abs(np.vdot(ref, psi0)) - 1.0) <= 1e-10:
            return name
    raise UnsupportedInitialState("closed forms cover |0⟩, |1⟩ and (|0⟩ − |1⟩)/√2 only")


def closed_form_model_a(method: str, O, psi0, omega: float, gamma: float, t):
    """Exact ``⟨O⟩`` for ``H = ωσz``, ``Γ = 2√γ σ−``.

    ``method`` is one of ``"me"``, ``"nj"`` or ``"metric"``; ``psi0`` must be
    ``|0⟩``, ``|1⟩`` or ``(|0⟩ − |1⟩)/√2`` up to a global phase.
    """
    if method not in ("me", "nj", "metric"):
        raise ValueError(f"unknown method {method!r}")
    O = as_matrix(O, dim=2)
    kind = identify_initial_state(psi0)
    t = np.asarray(t, dtype=float)
    o00 = O[1, 1].real
    o11 = O[0, 0].real
    o10 = complex(O[0, 1])
    half_tr = 0.5 * np.trace(O).real
    decay2 = np.exp(-2 * gamma * t)
    decay4 = np.exp(-4 * gamma * t)
    if kind == "ground":
        return o00 + 0.0 * t
    if kind == "excited":
        if method == "me":
            return o00 * (1 - decay4) + decay4 * o11
        return o11 + 0.0 * t
    c, s = np.cos(2 * omega * t), np.sin(2 * omega * t)
    osc = -c * o10.real + s * o10.imag
    if method == "metric":
        return half_tr + osc
    if method == "me":
        return half_tr + decay2 * osc + 0.5 * (decay4 - 1) * (o11 - o00)
    w = 1.0 + decay4
    return half_tr + 2 * decay2 / w * osc + (decay4 - 1) / (2 * w) * (o11 - o00)


def closed_form_identity_residual(O, omega: float, gamma: float, t) -> np.ndarray:
    """Residual of the relation between master-equation and metric values for the superposition."""
    O = as_matrix(O, dim=2)
    t = np.asarray(t, dtype=float)
    half_tr = 0.5 * np.trace(O).real
    me = closed_form_model_a("me", O, SUPERPOSITION, omega, gamma, t)
    metric = closed_form_model_a("metric", O, SUPERPOSITION, omega, gamma, t)
    rhs = (metric - half_tr) * np.exp(-2 * gamma * t) + 0.5 * (np.exp(-4 * gamma * t) - 1) * (O[0, 0].real - O[1, 1].real)
    return np.abs(me - half_tr - rhs)


# -- model B reference values -------------------------------------------------


def steady_state_model_b(omega: float, gamma: float) -> BlochVector:
    """Master-equation steady state of ``H = ωσx`` with ``Γ = 2√γ σ−``."""
    d = 2 * gamma**2 + omega**2
    if d == 0:
        return BlochVector(0.0, 0.0, 0.0)
    return BlochVector(0.0, 2 * gamma * omega / d, -2 * gamma**2 / d)


def nojump_asymptote_model_b(omega: float, gamma: float) -> BlochVector:
    """Long-time no-jump spin components for ``γ² > ω²``."""
    if not gamma**2 > omega**2:
        raise NotPTBroken(f"no-jump asymptote needs γ² > ω² (got ω = {omega}, γ = {gamma})")
    return BlochVector(0.0, omega / gamma, -math.sqrt(gamma**2 - omega**2) / gamma)
