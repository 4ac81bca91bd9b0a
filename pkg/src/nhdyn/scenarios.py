"""Scenario configuration, runners and CSV output.

Three scenarios produce plot-ready spin time series:

* ``model_a`` -- ``H = ωσz`` with decay, integrators plus closed forms;
* ``model_b`` -- ``H = ωσx`` with decay, with steady-state and asymptotic
  reference values written as metadata;
* ``sweep`` -- the momentum family ``kσx + iγσy + tσz`` for a symmetric
  ``k`` grid, evolved with the metric and by division by norm.

Rows are ``t,k,method,sx,sy,sz,norm``. The norm column is ``⟨ψ|ψ⟩`` of the
Schrödinger state for the metric and no-jump state methods and ``Tr ρ`` for
density-matrix methods. Every float is rounded to 12
significant digits when the row is built, so writing and re-reading a CSV
returns identical rows.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .dissipative import (
    DissipativeModel,
    closed_form_model_a,
    evolve_me,
    evolve_nojump,
    identify_initial_state,
    nojump_asymptote_model_b,
    steady_state_model_b,
)
from .errors import ConfigError, UnsupportedInitialState
from .integrate import TimeGrid
from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, polar_decompose
from .metric import evolve_metric, metric_asymptotics_model_b
from .symmetry import LZModel, parity_scan, start_time_convergence

SCENARIOS = ("model_a", "model_b", "sweep", "verify")
METHODS = ("metric", "me", "nj", "closed_form")
DEFAULT_K_GRID = (-2.0, -1.5, -1.25, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.25, 1.5, 2.0)
HEADER = ("t", "k", "method", "sx", "sy", "sz", "norm")
SIG_DIGITS = 12
AMP_TOL = 1e-3


def quantize(x: float) -> float:
    return float(f"{float(x):.{SIG_DIGITS}g}")


# -- initial states -----------------------------------------------------------


@dataclass(frozen=True)
class InitialState:
    """Either a Bloch vector or a pair of complex amplitudes (index 0 is ``σz = +1``)."""

    bloch: tuple[float, float, float]
    amplitudes: tuple[complex, complex] | None

    @property
    def is_pure(self) -> bool:
        return self.amplitudes is not None

    def vector(self) -> np.ndarray:
        if self.amplitudes is None:
            raise ValueError("mixed initial state has no state vector")
        return np.array(self.amplitudes, dtype=complex)

    def density(self) -> np.ndarray:
        x, y, z = self.bloch
        return 0.5 * (np.eye(2) + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)


def _floats(text: str, n: int, field_name: str) -> list[float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ConfigError(field_name, f"expected {n} comma-separated numbers, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(field_name, f"not a number list: {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(field_name, "values must be finite")
    return vals


def parse_initial(text: str, field_name: str = "initial") -> InitialState:
    """Parse ``bloch:x,y,z`` or ``amp:re,im,re,im``.

    Amplitudes within ``1e-3`` of unit norm are renormalized; Bloch vectors
    must have length at most one. A unit-length Bloch vector is also
    converted to amplitudes so pure-state methods can use it.
    """
    kind, _, body = str(text).partition(":")
    kind = kind.strip().lower()
    if kind == "amp":
        a, b, c, d = _floats(body, 4, field_name)
        psi = np.array([a + 1j * b, c + 1j * d])
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1.0) > AMP_TOL:
            raise ConfigError(field_name, f"amplitudes must be normalized (norm {norm:.6g})")
        psi = psi / norm
        rho = np.outer(psi, psi.conj())
        bloch = tuple(float(np.trace(rho @ s).real) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))
        return InitialState(bloch, (complex(psi[0]), complex(psi[1])))
    if kind == "bloch":
        x, y, z = _floats(body, 3, field_name)
        r = math.sqrt(x * x + y * y + z * z)
        if r > 1.0 + 1e-9:
            raise ConfigError(field_name, f"Bloch vector length {r:.6g} exceeds 1")
        amps = None
        if abs(r - 1.0) <= 1e-9:
            theta = math.acos(max(-1.0, min(1.0, z / r)))
            phi = math.atan2(y, x)
            amps = (complex(math.cos(theta / 2)), complex(np.exp(1j * phi) * math.sin(theta / 2)))
        return InitialState((x, y, z), amps)
    raise ConfigError(field_name, f"expected 'bloch:x,y,z' or 'amp:re,im,re,im', got {text!r}")


# -- configuration ------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    omega: float = 1.0
    gamma: float | None = None
    dt: float = 1e-3
    t_max: float | None = None
    initial: str | None = None
    methods: tuple[str, ...] | None = None
    k_grid: tuple[float, ...] = DEFAULT_K_GRID
    t_start: float = -15.0
    F: float = 1.0
    sample_dt: float | None = None
    out_path: str | None = None

    def resolved(self) -> "ScenarioConfig":
        """Fill scenario-dependent defaults and validate; raises :class:`ConfigError`."""
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"must be one of {', '.join(SCENARIOS)}")
        sweep = self.scenario == "sweep"
        cfg = replace(
            self,
            gamma=self.gamma if self.gamma is not None else (1.0 if sweep else 0.5),
            t_max=self.t_max if self.t_max is not None else (15.0 if sweep else 20.0),
            initial=self.initial if self.initial is not None else ("amp:1,0,0,0" if sweep else "bloch:0,0,-1"),
            methods=tuple(self.methods) if self.methods is not None else (("metric", "nj") if sweep else METHODS),
            sample_dt=self.sample_dt if self.sample_dt is not None else (0.1 if sweep else self.dt if self.scenario == "verify" else 0.01),
            k_grid=tuple(float(k) for k in self.k_grid),
        )
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        for name in ("omega", "gamma", "dt", "t_max", "t_start", "F", "sample_dt"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ConfigError(name, f"must be a finite number, got {v!r}")
        if not self.dt > 0:
            raise ConfigError("dt", "must be positive")
        if not self.t_max > 0:
            raise ConfigError("t_max", "must be positive")
        if self.gamma < 0:
            raise ConfigError("gamma", "must be non-negative")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError("methods", f"unknown method(s) {unknown}; choose from {', '.join(METHODS)}")
        if not self.methods:
            raise ConfigError("methods", "at least one method is required")
        span = self.t_max - (self.t_start if self.scenario == "sweep" else 0.0)
        if span <= 0:
            raise ConfigError("t_max", "must exceed t_start")
        for name, step in (("dt", self.dt), ("sample_dt", self.sample_dt)):
            n = span / step
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ConfigError(name, f"does not divide the time window {span}")
        ratio = self.sample_dt / self.dt
        if ratio < 1 - 1e-12 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError("sample_dt", "must be a positive integer multiple of dt")
        init = parse_initial(self.initial)
        if self.scenario == "sweep":
            ks = np.asarray(self.k_grid)
            if ks.size == 0:
                raise ConfigError("k_grid", "must not be empty")
            if np.any(np.abs(np.abs(ks) - self.gamma) <= 1e-9):
                raise ConfigError("k_grid", f"must exclude |k| = γ = {self.gamma}")
            if not np.allclose(np.sort(ks), np.sort(-ks), atol=1e-12):
                raise ConfigError("k_grid", "must be symmetric about zero")
            bad = [m for m in self.methods if m not in ("metric", "nj")]
            if bad:
                raise ConfigError("methods", f"sweep supports metric and nj only, got {bad}")
        if not init.is_pure and any(m in self.methods for m in ("metric", "closed_form")) and self.scenario != "verify":
            raise ConfigError("initial", "metric and closed-form methods need a pure initial state")
        if not init.is_pure and self.scenario == "sweep":
            raise ConfigError("initial", "sweep needs a pure initial state")

    def to_json(self) -> str:
        d = asdict(self)
        d["methods"] = list(self.methods) if self.methods is not None else None
        d["k_grid"] = list(self.k_grid)
        return json.dumps(d, sort_keys=True)


_FIELD_TYPES = {f.name: f for f in fields(ScenarioConfig)}


def load_config(path: str | None = None, overrides: dict | None = None, scenario: str | None = None) -> ScenarioConfig:
    """Merge a JSON file with explicit overrides (overrides win)."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
    data = {**data, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    if scenario is not None:
        data["scenario"] = scenario
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration field")
    if "scenario" not in data:
        raise ConfigError("scenario", "missing")
    for key in ("methods", "k_grid"):
        if key in data and data[key] is not None:
            val = data[key]
            if isinstance(val, str):
                val = [v.strip() for v in val.split(",") if v.strip()]
            if not isinstance(val, (list, tuple)):
                raise ConfigError(key, "must be a list")
            if key == "k_grid":
                try:
                    val = [float(v) for v in val]
                except (TypeError, ValueError):
                    raise ConfigError(key, "entries must be numbers") from None
            data[key] = tuple(val)
    for key in ("omega", "gamma", "dt", "t_max", "t_start", "F", "sample_dt"):
        if key in data and data[key] is not None:
            try:
                data[key] = float(data[key])
            except (TypeError, ValueError):
                raise ConfigError(key, f"must be a number, got {data[key]!r}") from None
    return ScenarioConfig(**data).resolved()


# -- results ------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    t: float
    k: float | None
    method: str
    sx: float
    sy: float
    sz: float
    norm: float

    @classmethod
    def make(cls, t, k, method, sx, sy, sz, norm) -> "ResultRow":
        return cls(quantize(t), None if k is None else quantize(k), method, quantize(sx), quantize(sy), quantize(sz), quantize(norm))

    def sort_key(self):
        return (self.k if self.k is not None else 0.0, self.t, self.method)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    rows: list[ResultRow]
    metadata: list[str] = field(default_factory=list)
    status: int = 0


def _fmt(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def write_csv(rows: Iterable[ResultRow], metadata: Sequence[str] = (), stream=None) -> str:
    """Write metadata comment lines and rows; returns the text if ``stream`` is None."""
    buf = io.StringIO() if stream is None else stream
    for line in metadata:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([_fmt(r.t), "" if r.k is None else _fmt(r.k), r.method, _fmt(r.sx), _fmt(r.sy), _fmt(r.sz), _fmt(r.norm)])
    return buf.getvalue() if stream is None else ""


def read_csv(text: str) -> tuple[list[ResultRow], list[str]]:
    meta, body = [], []
    for line in text.splitlines():
        if line.startswith("#"):
            meta.append(line[1:].strip())
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    if tuple(header) != HEADER:
        raise ValueError(f"unexpected header {header}")
    rows = [
        ResultRow(float(t), None if k == "" else float(k), m, float(x), float(y), float(z), float(n))
        for t, k, m, x, y, z, n in reader
    ]
    return rows, meta


# -- runners ------------------------------------------------------------------


def _grid(cfg: ScenarioConfig) -> tuple[TimeGrid, int]:
    t0 = cfg.t_start if cfg.scenario == "sweep" else 0.0
    return TimeGrid(t0, cfg.t_max, cfg.dt), int(round(cfg.sample_dt / cfg.dt))


def _rows(times, k, method, bloch, norm) -> list[ResultRow]:
    return [ResultRow.make(t, k, method, *b, n) for t, b, n in zip(times, bloch, norm)]


def _metric_closed_form_b(omega: float, gamma: float, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
    # M(t) = exp(iHt) for the traceless H = ωσx − iγσz, so det M = 1
    H = omega * SIGMA_X - 1j * gamma * SIGMA_Z
    s = np.sqrt(complex(omega**2 - gamma**2))
    st = s * times
    M = np.cos(st)[:, None, None] * np.eye(2) + 1j * (np.sin(st) / s)[:, None, None] * H
    Q, _ = polar_decompose(M, det_phase=np.ones(times.shape))
    P = np.einsum("tji,j->ti", Q.conj(), psi0)
    return np.stack([np.einsum("ti,ij,tj->t", P.conj(), s_, P).real for s_ in (SIGMA_X, SIGMA_Y, SIGMA_Z)], axis=-1)


def _run_model(cfg: ScenarioConfig) -> ScenarioResult:
    grid, every = _grid(cfg)
    omega, gamma = cfg.omega, cfg.gamma
    model = DissipativeModel.model_a(omega, gamma) if cfg.scenario == "model_a" else DissipativeModel.model_b(omega, gamma)
    init = parse_initial(cfg.initial)
    times = grid.times[::every]
    rows: list[ResultRow] = []
    meta: list[str] = []
    if "metric" in cfg.methods:
        traj = evolve_metric(model.effective_fn(), init.vector(), grid).subsample(every)
        rows += _rows(times, None, "metric", traj.bloch(), np.sum(np.abs(traj.psi) ** 2, axis=-1))
    if "me" in cfg.methods:
        tr = evolve_me(model, init.density(), grid)
        rows += _rows(times, None, "me", tr.bloch()[::every], tr.trace[::every])
    if "nj" in cfg.methods:
        tr = evolve_nojump(model, init.density(), grid)
        rows += _rows(times, None, "nj", tr.bloch()[::every], tr.trace[::every])
    if "closed_form" in cfg.methods:
        if cfg.scenario == "model_a":
            try:
                identify_initial_state(init.vector())
            except UnsupportedInitialState:
                meta.append("closed_form: no closed form for this initial state, skipped")
            else:
                psi = init.vector()
                p1 = abs(psi[0]) ** 2
                nj_norm = p1 * np.exp(-4 * gamma * times) + (1 - p1)
                for method in ("me", "nj", "metric"):
                    b = np.stack([closed_form_model_a(method, s, psi, omega, gamma, times) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)], axis=-1)
                    norm = nj_norm if method == "nj" else np.ones_like(times)
                    rows += _rows(times, None, f"closed_form_{method}", b, norm)
        else:
            if abs(omega - gamma) < 1e-10:
                meta.append("closed_form: exceptional point, skipped")
            else:
                b = _metric_closed_form_b(omega, gamma, init.vector(), times)
                rows += _rows(times, None, "closed_form_metric", b, np.ones_like(times))
    meta += _reference_lines(cfg, init)
    rows.sort(key=ResultRow.sort_key)
    return ScenarioResult(cfg, rows, meta, 0)


def _reference_lines(cfg: ScenarioConfig, init: InitialState) -> list[str]:
    omega, gamma = cfg.omega, cfg.gamma
    if cfg.scenario == "model_a":
        return ["reference steady_state_me: sx=0 sy=0 sz=-1"]
    ss = steady_state_model_b(omega, gamma)
    out = [f"reference steady_state_me: sx={_fmt(ss.x)} sy={_fmt(ss.y)} sz={_fmt(ss.z)}"]
    if gamma**2 > omega**2:
        nj = nojump_asymptote_model_b(omega, gamma)
        out.append(f"reference asymptote_nj: sx={_fmt(nj.x)} sy={_fmt(nj.y)} sz={_fmt(nj.z)}")
        mx, my, mz = metric_asymptotics_model_b(omega, gamma, init.bloch)
        out.append(f"reference asymptote_metric: sx={_fmt(mx)} sy={_fmt(my)} sz={_fmt(mz)}")
    else:
        out.append("reference asymptotes: none (oscillatory regime)")
    return out


PARITY_TOL_METRIC = 1e-6
PARITY_TOL_NJ = 0.05


def _run_sweep(cfg: ScenarioConfig) -> ScenarioResult:
    grid, every = _grid(cfg)
    template = LZModel.linear_ramp(0.0, cfg.gamma, cfg.F)
    init = parse_initial(cfg.initial)
    table = parity_scan(template, cfg.k_grid, grid, init.vector(), every=every)
    rows: list[ResultRow] = []
    for i, k in enumerate(table.k):
        if "metric" in cfg.methods:
            rows += _rows(table.times, k, "metric", table.metric[i], table.norm[i])
        if "nj" in cfg.methods:
            rows += _rows(table.times, k, "nj", table.nj[i], table.norm[i])
    rows.sort(key=ResultRow.sort_key)
    checks = parity_checks(table, cfg.gamma)
    meta = [f"check {name}: {'PASS' if ok else 'FAIL'} ({detail})" for name, ok, detail in checks]
    if cfg.t_start < 0:
        d_metric, d_nj = start_time_convergence(template, cfg.k_grid, grid, init.vector())
        meta.append(f"convergence t_start {_fmt(cfg.t_start)} -> {_fmt(2 * cfg.t_start)}: max change of final sz metric {d_metric:.3e}, nj {d_nj:.3e}")
    status = 0 if all(ok for _, ok, _ in checks) else 1
    return ScenarioResult(cfg, rows, meta, status)


def parity_checks(table, gamma: float) -> list[tuple[str, bool, str]]:
    """Momentum-parity checks on a parity table, one tuple per check."""
    even = table.metric_even_residual()
    out = [("metric_sz_even", even <= PARITY_TOL_METRIC, f"max residual {even:.3e}")]
    ks = [k for k in table.k if k > 0]
    odd, even_nj, diff = [], [], []
    for k in ks:
        a, b, m = table.nj_final(k)
        if k < gamma:
            odd.append((k, abs(a + b)))
        else:
            even_nj.append((k, abs(a - b)))
            diff.append((k, abs(a - m)))
    for name, vals in (("nj_sz_odd_inside", odd), ("nj_sz_even_outside", even_nj), ("nj_matches_metric_outside", diff)):
        if vals:
            worst = max(vals, key=lambda kv: kv[1])
            detail = ", ".join(f"k={k:g}: {v:.3g}" for k, v in vals)
            out.append((name, worst[1] <= PARITY_TOL_NJ, detail))
    return out


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Run a resolved model or sweep scenario. Output rows are sorted by ``(k, t, method)``."""
    cfg = cfg.resolved()
    if cfg.scenario in ("model_a", "model_b"):
        result = _run_model(cfg)
    elif cfg.scenario == "sweep":
        result = _run_sweep(cfg)
    else:
        raise ConfigError("scenario", "use verify_all for the verification suite")
    result.metadata = [f"nhdyn {__version__}", f"config {cfg.to_json()}"] + result.metadata
    return result
