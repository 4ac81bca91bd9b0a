"""Fixed-step RK4 for the linear ODEs used throughout the package.

Every equation of motion here is linear in the state, ``ẏ = A(t) y``. One
classical RK4 step is then a linear map ``y ← (1 + D_n) y`` whose increment
``D_n`` depends only on ``A`` at ``t_n``, ``t_n + h/2`` and ``t_n + h``. The
increments for all steps (and for a whole batch of systems) are built in one
vectorized pass and then applied in order, which is algebraically the same
as stage-by-stage RK4 but far cheaper for 2x2 systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import as_matrix


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t0, t0 + dt, ..., t1``."""

    t0: float
    t1: float
    dt: float

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if not self.t1 > self.t0:
            raise ValueError(f"t1 must exceed t0 (got t0={self.t0}, t1={self.t1})")
        steps = (self.t1 - self.t0) / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(f"(t1 - t0) / dt = {steps} is not an integer")

    @property
    def n_steps(self) -> int:
        return int(round((self.t1 - self.t0) / self.dt))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    def index_of(self, t: float) -> int:
        i = int(round((t - self.t0) / self.dt))
        if i < 0 or i > self.n_steps or abs(self.t0 + i * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t} is not a grid point")
        return i


class HamiltonianFn:
    """Time-dependent matrix ``H(t)``, possibly batched.

    ``evaluator`` maps a 1-D array of times of length ``T`` to an array of
    shape ``(T, *batch, N, N)``. Use :meth:`constant` for static matrices and
    :meth:`from_scalar` to wrap a callable that only accepts a single time.
    """

    def __init__(self, evaluator: Callable[[np.ndarray], np.ndarray], dim: int):
        self.evaluator = evaluator
        self.dim = int(dim)

    @classmethod
    def constant(cls, H) -> "HamiltonianFn":
        H = np.array(H, dtype=complex)
        if H.ndim < 2 or H.shape[-1] != H.shape[-2]:
            raise ValueError(f"expected (..., N, N), got {H.shape}")
        H.setflags(write=False)

        def evaluator(times):
            times = np.asarray(times, dtype=float)
            return np.broadcast_to(H, times.shape + H.shape)

        fn = cls(evaluator, H.shape[-1])
        fn.value = H
        return fn

    @classmethod
    def from_scalar(cls, f: Callable[[float], np.ndarray], dim: int) -> "HamiltonianFn":
        def evaluator(times):
            return np.stack([np.asarray(f(float(t)), dtype=complex) for t in np.atleast_1d(times)])

        return cls(evaluator, dim)

    def at(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.asarray(self.evaluator(times), dtype=complex)
        if out.shape[0] != times.shape[0] or out.shape[-2:] != (self.dim, self.dim):
            raise ValueError(f"evaluator returned shape {out.shape} for {times.shape[0]} times")
        return out

    def __call__(self, t: float) -> np.ndarray:
        return self.at([t])[0]

    def shifted(self, c: complex) -> "HamiltonianFn":
        """``H(t) + c·1``."""
        eye = np.eye(self.dim)
        return HamiltonianFn(lambda times: self.at(times) + c * eye, self.dim)


def as_hamiltonian(H) -> HamiltonianFn:
    if isinstance(H, HamiltonianFn):
        return H
    if callable(H):
        raise TypeError("wrap time-dependent callables in HamiltonianFn")
    arr = np.asarray(H, dtype=complex)
    if arr.ndim == 2:
        as_matrix(arr)
    return HamiltonianFn.constant(arr)


def rk4_increments(generator: np.ndarray, h: float) -> np.ndarray:
    """RK4 step increments for ``ẏ = A(t) y``.

    ``generator`` holds ``A`` sampled at ``t0 + j h/2`` for ``j = 0..2n``
    (shape ``(2n+1, ..., d, d)``). Returns ``D`` with shape ``(n, ..., d, d)``
    such that one RK4 step reads ``y ← y + D_n y``.
    """
    A1 = generator[0:-1:2]
    A2 = generator[1::2]
    A4 = generator[2::2]
    k2 = A2 + (0.5 * h) * (A2 @ A1)
    k3 = A2 + (0.5 * h) * (A2 @ k2)
    k4 = A4 + h * (A4 @ k3)
    return (h / 6.0) * (A1 + 2.0 * k2 + 2.0 * k3 + k4)


def _apply_steps(D: np.ndarray, y0: np.ndarray, right: bool) -> np.ndarray:
    shape = (y0 @ D[0] if right else D[0] @ y0).shape
    out = np.empty((D.shape[0] + 1,) + shape, dtype=complex)
    out[0] = y0
    y = out[0]
    for n in range(D.shape[0]):
        nxt = out[n + 1]
        if right:
            np.matmul(y, D[n], out=nxt)
        else:
            np.matmul(D[n], y, out=nxt)
        nxt += y
        y = nxt
    return out


def integrate_linear(
    generator: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_start: float,
    h: float,
    n_steps: int,
    side: str = "left",
    vector: bool = False,
) -> np.ndarray:
    """RK4-integrate a linear system from ``t_start`` for ``n_steps`` of size ``h``.

    ``side="left"`` integrates ``ẏ = A(t) y``; ``side="right"`` integrates the
    matrix equation ``Ẏ = Y B(t)`` where ``generator`` returns ``B``. ``h``
    may be negative. With ``vector=True`` the state is a (batched) vector
    ``(..., d)``, left side only. The state broadcasts against the batch
    shape of the generator. Returns all ``n_steps + 1`` states stacked along
    a new first axis.
    """
    y0 = np.asarray(y0, dtype=complex)
    if n_steps == 0:
        return y0[None].copy()
    if vector and side != "left":
        raise ValueError("vector states only support side='left'")
    half_times = t_start + (0.5 * h) * np.arange(2 * n_steps + 1)
    G = np.asarray(generator(half_times), dtype=complex)
    if side == "right":
        D = np.swapaxes(rk4_increments(np.swapaxes(G, -1, -2), h), -1, -2)
        return _apply_steps(D, y0, right=True)
    if side != "left":
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    D = rk4_increments(G, h)
    if vector:
        return _apply_steps(D, y0[..., None], right=False)[..., 0]
    return _apply_steps(D, y0, right=False)


def integrate_on_grid(generator, y0, grid: TimeGrid, side: str = "left", vector: bool = False) -> np.ndarray:
    return integrate_linear(generator, y0, grid.t0, grid.dt, grid.n_steps, side=side, vector=vector)


def evolve_state(H, psi0, grid: TimeGrid) -> np.ndarray:
    """Schrödinger evolution ``i ψ̇ = H(t) ψ``; returns ``(T, ..., N)`` states."""
    H = as_hamiltonian(H)
    return integrate_on_grid(lambda ts: -1j * H.at(ts), np.asarray(psi0, dtype=complex), grid, vector=True)
