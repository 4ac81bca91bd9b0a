"""Left-right momentum maps, their metric counterpart, and spin parity in k.

For a family ``H_k`` whose spectrum is even in ``k`` the operators

    U_R = Σ_n |−k, n⟩_R ⟨k, n|_L,    U_L = Σ_n |−k, n⟩_L ⟨k, n|_R

carry eigenvectors of ``H_k`` onto those of ``H_{−k}`` and conjugate
``H_k`` into ``H_{−k}``. The concrete family studied here is

    H_k(t) = k σx + i γ(t) σy + Δ(t) σz = [[Δ, k + γ], [k − γ, −Δ]].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AtExceptionalPoint, DenominatorUnderflow, NotHermitian, NotPHSymmetric, SpectrumMismatch
from .integrate import HamiltonianFn, TimeGrid
from .linalg import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, Spectrum, as_matrix, eig, fix_phase, inverse, is_hermitian
from .metric import evolve_metric

SPECTRUM_TOL = 1e-8


# -- the model ----------------------------------------------------------------


def _vectorized(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    def g(ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        try:
            out = np.asarray(f(ts), dtype=float)
            if out.shape == ts.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(f(float(t))) for t in ts.ravel()]).reshape(ts.shape)

    return g


@dataclass(frozen=True)
class LZModel:
    """``H_k(t) = kσx + iγ(t)σy + Δ(t)σz`` for one momentum ``k``."""

    k: float
    gamma_fn: Callable = field(compare=False)
    delta_fn: Callable = field(compare=False)
    F: float | None = None

    @classmethod
    def linear_ramp(cls, k: float, gamma: float = 1.0, F: float = 1.0) -> "LZModel":
        """Constant ``γ`` and ``Δ(t) = F t``."""
        return cls(k, lambda t: np.full_like(np.asarray(t, dtype=float), gamma), lambda t: F * np.asarray(t, dtype=float), F)

    def with_k(self, k: float) -> "LZModel":
        return LZModel(k, self.gamma_fn, self.delta_fn, self.F)

    def hamiltonian(self, t: float) -> np.ndarray:
        return lz_hamiltonian(self, t)

    def as_fn(self) -> HamiltonianFn:
        return lz_family(self, [self.k], squeeze=True)


def lz_matrix(k, gamma, delta) -> np.ndarray:
    """``kσx + iγσy + Δσz`` with broadcasting over the scalar arguments."""
    k, gamma, delta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (k, gamma, delta)))
    out = np.empty(k.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = delta
    out[..., 1, 1] = -delta
    out[..., 0, 1] = k + gamma
    out[..., 1, 0] = k - gamma
    return out


def lz_hamiltonian(model: LZModel, t: float) -> np.ndarray:
    g = _vectorized(model.gamma_fn)(np.array([t]))[0]
    d = _vectorized(model.delta_fn)(np.array([t]))[0]
    return lz_matrix(model.k, g, d)


def lz_family(template: LZModel, k_grid: Sequence[float], squeeze: bool = False) -> HamiltonianFn:
    """Batched Hamiltonian over ``k_grid``: ``at(ts)`` has shape ``(T, K, 2, 2)``."""
    ks = np.asarray(k_grid, dtype=float)
    gam = _vectorized(template.gamma_fn)
    dlt = _vectorized(template.delta_fn)

    def evaluator(ts):
        ts = np.asarray(ts, dtype=float)
        H = lz_matrix(ks[None, :], gam(ts)[:, None], dlt(ts)[:, None])
        return H[:, 0] if squeeze else H

    return HamiltonianFn(evaluator, 2)


# -- left-right maps ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentumMaps:
    U_R: np.ndarray
    U_L: np.ndarray
    k: float | None = None
    V: np.ndarray | None = None

    def unitarity_residual(self) -> float:
        """Largest deviation of ``U_L U_R^†`` and ``U_L^† U_R`` from the identity."""
        eye = np.eye(self.U_R.shape[0])
        a = self.U_L @ self.U_R.conj().T - eye
        b = self.U_L.conj().T @ self.U_R - eye
        return float(max(np.max(np.abs(a)), np.max(np.abs(b))))

    def conjugation_residual(self, Hk, Hmk) -> float:
        """Largest residual of ``U_R H_k U_L^† = H_{−k}`` and ``U_L H_k^† U_R^† = H_{−k}^†``."""
        Hk, Hmk = as_matrix(Hk), as_matrix(Hmk)
        a = self.U_R @ Hk @ self.U_L.conj().T - Hmk
        b = self.U_L @ Hk.conj().T @ self.U_R.conj().T - Hmk.conj().T
        return float(max(np.max(np.abs(a)), np.max(np.abs(b))))


def maps_from_bases(bk: Spectrum, bmk: Spectrum, k: float | None = None) -> MomentumMaps:
    if np.max(np.abs(bk.eigenvalues - bmk.eigenvalues)) > SPECTRUM_TOL * max(1.0, bk.scale):
        raise SpectrumMismatch(f"spectra differ: {bk.eigenvalues} vs {bmk.eigenvalues}")
    U_R = bmk.right @ bk.left.conj().T
    U_L = bmk.left @ bk.right.conj().T
    return MomentumMaps(U_R, U_L, k)


def build_momentum_maps(Hk, Hmk, k: float | None = None) -> MomentumMaps:
    """``U_R``, ``U_L`` from the biorthonormal bases of ``H_k`` and ``H_{−k}``.

    Uses the unit-norm, fixed-phase gauge of :func:`nhdyn.linalg.eig`, so
    the matrices agree with other gauges only up to per-eigenvector factors;
    the conjugation relations hold in every gauge.
    """
    return maps_from_bases(eig(Hk), eig(Hmk), k)


def closed_form_maps(k: float, gamma: float) -> MomentumMaps:
    """``U_R = (γ1 − kσz)/(γ + k)`` and ``U_L = (γ1 + kσz)/(γ − k)``."""
    if abs(abs(k) - gamma) <= 1e-12 * max(1.0, gamma):
        raise AtExceptionalPoint("closed-form maps are singular at |k| = γ")
    U_R = (gamma * IDENTITY - k * SIGMA_Z) / (gamma + k)
    U_L = (gamma * IDENTITY + k * SIGMA_Z) / (gamma - k)
    return MomentumMaps(U_R, U_L, k)


def lz_basis(k: float, gamma: float, delta: float) -> Spectrum:
    """Biorthonormal eigenbasis of ``H_k`` in the gauge of the closed-form maps.

    Right vector ``(k + γ, E − Δ)``, left vector ``(k − γ, E* − Δ)`` divided
    by ``conj(2E(E − Δ))``, for ``E = ±sqrt(k² − γ² + Δ²)``. In this gauge
    the constructed maps coincide with :func:`closed_form_maps`.
    """
    E = np.sqrt(complex(k * k - gamma * gamma + delta * delta))
    vals = np.array([-E, E])
    right = np.empty((2, 2), dtype=complex)
    left = np.empty((2, 2), dtype=complex)
    for j, e in enumerate(vals):
        N = 2 * e * (e - delta)
        if abs(N) <= 1e-14:
            raise AtExceptionalPoint("gauge vector vanishes for these parameters")
        right[:, j] = [k + gamma, e - delta]
        left[:, j] = np.array([k - gamma, np.conj(e) - delta]) / np.conj(N)
    H = lz_matrix(k, gamma, delta)
    return Spectrum(vals, right, left, float(abs(2 * E)), float(np.linalg.norm(H)))


# -- metric-side map ----------------------------------------------------------


def _hermitian_basis(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, W = np.linalg.eigh(h)
    for j in range(W.shape[1]):
        W[:, j] = fix_phase(W[:, j])
    return w, W


def build_V(hk, hmk) -> np.ndarray:
    """``V = Σ |−k, n⟩⟨k, n|`` from the eigenbases of two Hermitian matrices."""
    hk, hmk = as_matrix(hk), as_matrix(hmk)
    if not (is_hermitian(hk, tol=1e-9) and is_hermitian(hmk, tol=1e-9)):
        raise NotHermitian("build_V needs Hermitian inputs")
    wk, Wk = _hermitian_basis(0.5 * (hk + hk.conj().T))
    wm, Wm = _hermitian_basis(0.5 * (hmk + hmk.conj().T))
    if np.max(np.abs(wk - wm)) > SPECTRUM_TOL * max(1.0, np.linalg.norm(hk)):
        raise SpectrumMismatch(f"spectra differ: {wk} vs {wm}")
    return Wm @ Wk.conj().T


def equal_up_to_phase(A, B, tol: float) -> bool:
    """Whether ``A = e^{iθ} B`` for some real ``θ``, within ``tol``."""
    A, B = np.asarray(A, dtype=complex), np.asarray(B, dtype=complex)
    inner = np.vdot(B, A)
    if abs(inner) == 0:
        return bool(np.max(np.abs(A - B)) <= tol)
    return bool(np.max(np.abs(A - (inner / abs(inner)) * B)) <= tol)


# -- transfer coefficients ----------------------------------------------------


def phi_coefficients(k: float, gamma: float, bloch) -> tuple[complex, complex]:
    """Coefficients with ``U_L σz Ψ̂ σz U_R = φx σx + φy σy + Ψ̂``.

    ``bloch`` holds ``(⟨σx⟩_k, ⟨σy⟩_k)`` of the pure state ``Ψ̂``.
    """
    d = k * k - gamma * gamma
    if abs(d) <= 1e-12 * max(1.0, gamma * gamma):
        raise AtExceptionalPoint("φ coefficients are singular at |k| = γ")
    sx, sy = float(bloch[0]), float(bloch[1])
    phi_x = gamma * (gamma * sx - 1j * k * sy) / d
    phi_y = gamma * (gamma * sy + 1j * k * sx) / d
    return complex(phi_x), complex(phi_y)


def density_from_bloch(bloch) -> np.ndarray:
    x, y, z = (float(c) for c in bloch)
    return 0.5 * (IDENTITY + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)


def phi_identity_residual(k: float, gamma: float, psi) -> float:
    """Residual of the φ identity for the pure state ``psi``, using the closed-form maps."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    P = np.outer(psi, psi.conj())
    bloch = [np.trace(P @ s).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    maps = closed_form_maps(k, gamma)
    lhs = maps.U_L @ SIGMA_Z @ P @ SIGMA_Z @ maps.U_R
    px, py = phi_coefficients(k, gamma, bloch)
    return float(np.max(np.abs(lhs - (px * SIGMA_X + py * SIGMA_Y + P))))


_OPS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
_SIGN = {"+": 1, "-": 0}  # basis index for each branch: eigenvalues sorted (−E, +E)


_ALIASES = {f"{prefix}{c}": c for c in "xyz" for prefix in ("", "s", "sigma_", "σ", "σ_")}


def _op_name(F) -> str:
    if isinstance(F, str):
        if F.lower() in _ALIASES:
            return _ALIASES[F.lower()]
        raise ValueError(f"unknown operator {F!r}")
    F = np.asarray(F, dtype=complex)
    for name, op in _OPS.items():
        if F.shape == (2, 2) and np.array_equal(F, op):
            return name
    raise ValueError("F must be one of σx, σy, σz")


def table1_coefficients(F, n: str, m: str, k: float, gamma: float, delta: float, tol: float = 1e-14) -> complex:
    """Ratio ``⟨n_L|U_L F U_R|m_R⟩ / ⟨n_L|F|m_R⟩`` in closed form.

    ``n`` and ``m`` are ``"+"`` or ``"−"`` and label the eigenvalues
    ``±E`` with ``E = sqrt(k² − γ² + Δ²)`` (principal branch).

    Raises
    ------
    DenominatorUnderflow
        If the closed-form denominator vanishes.
    """
    name = _op_name(F)
    n, m = n.replace("−", "-"), m.replace("−", "-")
    if n not in _SIGN or m not in _SIGN:
        raise ValueError("branch labels must be '+' or '-'")
    if name == "z":
        return 1.0 + 0j
    if n == m:
        return (-1.0 if name == "x" else 1.0) + 0j
    E = np.sqrt(complex(k * k - gamma * gamma + delta * delta))
    if name == "x":
        a, b = gamma * E + k * delta, gamma * E - k * delta
    else:
        a, b = gamma * delta + k * E, gamma * delta - k * E
    num, den = (a, b) if n == "+" else (b, a)
    if abs(den) <= tol * max(1.0, abs(num)):
        raise DenominatorUnderflow(f"table entry ({n},{m}) for σ{name} has a vanishing denominator")
    return complex(num / den)


def table1_ratio(F, n: str, m: str, k: float, gamma: float, delta: float) -> complex:
    """The defining ratio evaluated with explicit matrices and the closed-form maps."""
    name = _op_name(F)
    Fm = _OPS[name]
    n, m = n.replace("−", "-"), m.replace("−", "-")
    basis = eig(lz_matrix(k, gamma, delta))
    maps = closed_form_maps(k, gamma)
    ln = basis.left[:, _SIGN[n]]
    rm = basis.right[:, _SIGN[m]]
    den = np.vdot(ln, Fm @ rm)
    if abs(den) <= 1e-10:
        raise DenominatorUnderflow(f"⟨{n}_L|σ{name}|{m}_R⟩ vanishes")
    return complex(np.vdot(ln, maps.U_L @ Fm @ maps.U_R @ rm) / den)


def parity_pipeline(F, psi, k: float, gamma: float, delta: float) -> float:
    """``⟨F⟩_{−k}`` rebuilt from the φ coefficients and the table entries.

    Sums ``⟨m_L|φx σx + φy σy + Ψ̂|n_R⟩ ⟨n_L|F|m_R⟩ c^F_nm`` over the
    instantaneous biorthogonal basis of ``H_k``. The result should equal
    ``Tr(σz Ψ̂ σz F)``.
    """
    name = _op_name(F)
    Fm = _OPS[name]
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    P = np.outer(psi, psi.conj())
    bloch = [np.trace(P @ s).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    px, py = phi_coefficients(k, gamma, bloch)
    A = px * SIGMA_X + py * SIGMA_Y + P
    basis = eig(lz_matrix(k, gamma, delta))
    L, R = basis.left, basis.right
    total = 0j
    for n in "+-":
        for m in "+-":
            i, j = _SIGN[n], _SIGN[m]
            total += np.vdot(L[:, j], A @ R[:, i]) * np.vdot(L[:, i], Fm @ R[:, j]) * table1_coefficients(name, n, m, k, gamma, delta)
    return float(total.real)


# -- parity scan --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ParityTable:
    """Spin components per momentum and time for the metric and no-jump methods.

    ``metric`` and ``nj`` have shape ``(K, T, 3)``, with ``k`` ascending;
    ``norm`` holds ``⟨ψ|ψ⟩`` of the unnormalized Schrödinger state, ``(K, T)``.
    """

    k: np.ndarray
    times: np.ndarray
    metric: np.ndarray
    nj: np.ndarray
    norm: np.ndarray

    def partner(self, i: int) -> int:
        j = int(np.argmin(np.abs(self.k + self.k[i])))
        if abs(self.k[j] + self.k[i]) > 1e-9:
            raise ValueError(f"k = {self.k[i]} has no partner −k in the grid")
        return j

    def _pairs(self) -> list[tuple[int, int]]:
        return [(i, self.partner(i)) for i in range(len(self.k)) if self.k[i] > 0]

    def metric_even_residual(self) -> float:
        """``max |⟨σz⟩_k − ⟨σz⟩_{−k}|`` over all times and pairs."""
        return max(float(np.max(np.abs(self.metric[i, :, 2] - self.metric[j, :, 2]))) for i, j in self._pairs())

    def metric_odd_residual(self) -> float:
        """``max |⟨σ_{x,y}⟩_k + ⟨σ_{x,y}⟩_{−k}|`` over all times and pairs."""
        return max(float(np.max(np.abs(self.metric[i, :, :2] + self.metric[j, :, :2]))) for i, j in self._pairs())

    def nj_final(self, k: float) -> tuple[float, float, float]:
        """``(⟨σz⟩_nj(k), ⟨σz⟩_nj(−k), ⟨σz⟩_metric(k))`` at the last time."""
        i = int(np.argmin(np.abs(self.k - k)))
        j = self.partner(i)
        return float(self.nj[i, -1, 2]), float(self.nj[j, -1, 2]), float(self.metric[i, -1, 2])


def parity_scan(template: LZModel, k_grid: Sequence[float], grid: TimeGrid, psi0=(1.0, 0.0), every: int = 1) -> ParityTable:
    """Evolve every momentum mode with the metric and by division by norm.

    All modes are integrated together as one batch, which keeps the result
    independent of any execution order; rows come out in ascending ``k``.
    ``every`` keeps every n-th time sample.
    """
    ks = np.sort(np.asarray(k_grid, dtype=float))
    if len(ks) == 0:
        raise ValueError("empty k grid")
    if not np.allclose(np.sort(-ks), ks, atol=1e-12):
        raise ValueError("k grid must be symmetric about zero")
    H = lz_family(template, ks)
    psi0 = np.asarray(psi0, dtype=complex)
    traj = evolve_metric(H, np.broadcast_to(psi0, (len(ks), 2)), grid).subsample(every)
    metric = np.moveaxis(traj.bloch(), 0, 1)
    psi = traj.psi
    norm = np.sum(np.abs(psi) ** 2, axis=-1)
    nj = np.stack(
        [np.einsum("...i,ij,...j->...", psi.conj(), s, psi).real / norm for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)],
        axis=-1,
    )
    return ParityTable(ks, traj.times, metric, np.moveaxis(nj, 0, 1), norm.T)


def start_time_convergence(template: LZModel, k_grid: Sequence[float], grid: TimeGrid, psi0=(1.0, 0.0)) -> tuple[float, float]:
    """Change in the final ``⟨σz⟩`` when the start time is doubled.

    Returns ``(metric, nj)``: the largest absolute change over all momenta
    between runs started at ``grid.t0`` and at ``2·grid.t0``. The transverse
    components carry a start-dependent dynamical phase and are not compared.
    """
    if not grid.t0 < 0:
        raise ValueError("start-time convergence needs a negative start time")
    longer = TimeGrid(2 * grid.t0, grid.t1, grid.dt)
    a = parity_scan(template, k_grid, grid, psi0, every=grid.n_steps)
    b = parity_scan(template, k_grid, longer, psi0, every=longer.n_steps)
    d_metric = float(np.max(np.abs(a.metric[:, -1, 2] - b.metric[:, -1, 2])))
    d_nj = float(np.max(np.abs(a.nj[:, -1, 2] - b.nj[:, -1, 2])))
    return d_metric, d_nj


# -- particle-hole duality ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class DualityReport:
    kind: str
    right: np.ndarray
    left: np.ndarray
    precondition_residual: float
    left_relation_residual: float
    inverse_relation_residual: float

    @property
    def ok(self) -> bool:
        return max(self.left_relation_residual, self.inverse_relation_residual) <= 1e-9


def verify_phs_duality(H, P_R, kind: str = "P", tol: float = 1e-9) -> DualityReport:
    """Check the left partner of a right particle-hole operator.

    ``kind="P"`` treats ``H = −P_R H^T P_R⁻¹`` and ``kind="Q"`` treats
    ``H = −Q_R H^* Q_R⁻¹``. The left operator ``(P_R^†)⁻¹`` is checked
    against the corresponding relation for ``H^†``.

    Raises
    ------
    NotPHSymmetric
        If ``H`` does not satisfy the right relation within ``tol``.
    """
    H = as_matrix(H)
    R = as_matrix(P_R, dim=H.shape[0])
    R_inv = inverse(R)
    if kind == "P":
        op = lambda A: A.T
    elif kind == "Q":
        op = lambda A: A.conj()
    else:
        raise ValueError("kind must be 'P' or 'Q'")
    scale = max(1.0, float(np.linalg.norm(H)))
    pre = float(np.max(np.abs(H + R @ op(H) @ R_inv))) / scale
    if pre > tol:
        raise NotPHSymmetric(pre)
    L = inverse(R.conj().T)
    Hd = H.conj().T
    left_rel = float(np.max(np.abs(Hd + L @ op(Hd) @ inverse(L)))) / scale
    inv_rel = float(np.max(np.abs(inverse(L) - R.conj().T)))
    return DualityReport(kind, R, L, pre, left_rel, inv_rel)
