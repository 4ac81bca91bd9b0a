import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from nhdyn.errors import AtExceptionalPoint, NotHermitianObservable, NotPTBroken
from nhdyn.integrate import HamiltonianFn, TimeGrid
from nhdyn.linalg import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, herm_sqrt, is_hermitian
from nhdyn.metric import (
    evolve_metric,
    hermitian_map,
    hermitian_map_discrepancy,
    hermitian_map_tabulated,
    metric_asymptotics_model_b,
    metric_expectation,
    metric_model_a_analytic,
    metric_model_b_analytic,
    metric_model_b_components,
    metric_rhs,
)

GROUND = np.array([0.0, 1.0], dtype=complex)


def _hb(omega, gamma):
    return omega * SIGMA_X - 1j * gamma * SIGMA_Z


def test_rhs_formula():
    H = _hb(1.0, 0.5)
    rho = np.diag([2.0, 0.5])
    assert np.allclose(metric_rhs(H, rho), -1j * (H.conj().T @ rho - rho @ H))


def test_model_a_oracle():
    grid = TimeGrid(0.0, 5.0, 1e-3)
    traj = evolve_metric((1 - 0.5j) * SIGMA_Z, GROUND, grid)
    assert np.max(np.abs(traj.rho - metric_model_a_analytic(0.5, grid.times))) < 1e-9


@pytest.mark.parametrize("gamma", [0.5, 1.5])
def test_model_b_oracle_against_expm(gamma):
    # independent oracle: ρ(t) = e^{−iH†t} e^{iHt}
    H = _hb(1.0, gamma)
    t = np.linspace(0, 3, 7)
    ref = np.array([scipy.linalg.expm(-1j * H.conj().T * s) @ scipy.linalg.expm(1j * H * s) for s in t])
    assert np.allclose(metric_model_b_analytic(1.0, gamma, t), ref, atol=1e-10)


def test_model_b_at_exceptional_point():
    with pytest.raises(AtExceptionalPoint):
        metric_model_b_components(1.0, 1.0, 1.0)
    r0, ry, rz = metric_model_b_components(1.0, 1.0, 2.0, at_ep="limit")
    ref = [metric_model_b_components(1.0, 1.0 + d, 2.0) for d in (1e-6, -1e-6)]
    for got, a, b in zip((r0, ry, rz), *ref):
        assert abs(got - 0.5 * (a + b)) < 1e-5


def test_model_b_continuity_through_regimes():
    below = metric_model_b_analytic(1.0, 1.0 - 1e-7, 3.0)
    above = metric_model_b_analytic(1.0, 1.0 + 1e-7, 3.0)
    assert np.allclose(below, above, atol=1e-5)


def test_metric_with_initial_rho0():
    H = _hb(1.0, 0.3)
    rho0 = np.array([[2.0, 0.5j], [-0.5j, 1.0]])
    grid = TimeGrid(0.0, 2.0, 1e-3)
    traj = evolve_metric(H, GROUND, grid, rho0=rho0)
    U = scipy.linalg.expm(2j * H)
    assert np.allclose(traj.rho[-1], U.conj().T @ rho0 @ U, atol=1e-9)
    assert np.allclose(traj.rho[0], rho0)


def test_time_dependent_metric_against_solve_ivp():
    fn = HamiltonianFn.from_scalar(lambda t: 0.4 * SIGMA_X + 1j * 0.3 * SIGMA_Y + t * SIGMA_Z, 2)
    grid = TimeGrid(-1.0, 1.0, 1e-3)
    traj = evolve_metric(fn, GROUND, grid)

    def rhs(t, y):
        return metric_rhs(fn(t), y.reshape(2, 2)).ravel()

    ref = scipy.integrate.solve_ivp(rhs, (-1, 1), np.eye(2, dtype=complex).ravel(), rtol=1e-11, atol=1e-12)
    assert np.allclose(traj.rho[-1], ref.y[:, -1].reshape(2, 2), atol=1e-8)


def test_invariants_along_trajectory():
    grid = TimeGrid(0.0, 10.0, 1e-3)
    traj = evolve_metric(_hb(1.0, 0.5), GROUND, grid)
    rho = traj.rho
    assert np.all(np.linalg.eigvalsh(rho) > 0)
    assert np.max(np.abs(rho - np.swapaxes(rho.conj(), -1, -2))) < 1e-14
    assert np.max(np.abs(traj.norm - 1)) < 1e-8
    # η² = ρ and Ψ = η ψ
    i = 4321
    assert np.allclose(traj.eta[i] @ traj.eta[i], rho[i], atol=1e-10)
    assert np.allclose(traj.eta[i], herm_sqrt(rho[i]), atol=1e-10)
    assert np.allclose(traj.big_psi[i], traj.eta[i] @ traj.psi[i], atol=1e-10)


def test_pt_broken_long_time_is_stable():
    grid = TimeGrid(0.0, 20.0, 1e-3)
    traj = evolve_metric(_hb(1.0, 1.5), GROUND, grid)
    b = traj.bloch()
    assert np.all(np.abs(np.linalg.norm(b, axis=-1) - 1) < 1e-8)
    ref = metric_asymptotics_model_b(1.0, 1.5, (0, 0, -1))
    assert np.allclose(b[-1], ref, atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
    st.floats(-2, 2), st.floats(-2, 2),
)
def test_trace_shift_invariance(a, b, c, d, cr, ci):
    H = np.array([[a, b + 0.3j], [c, d - 0.2j]])
    psi = np.array([0.6, 0.8j])
    grid = TimeGrid(0.0, 1.0, 1e-3)
    x = evolve_metric(H, psi, grid).bloch()
    y = evolve_metric(H + complex(cr, ci) * IDENTITY, psi, grid).bloch()
    assert np.max(np.abs(x - y)) < 1e-9


def test_expectation_helpers_and_errors():
    grid = TimeGrid(0.0, 1.0, 1e-2)
    traj = evolve_metric(_hb(1.0, 0.5), GROUND, grid)
    assert np.isclose(metric_expectation(traj, SIGMA_Z, 0), -1.0)
    with pytest.raises(NotHermitianObservable):
        traj.expectation(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        evolve_metric(_hb(1.0, 0.5), [1.0, 1.0], grid)
    with pytest.raises(ValueError):
        evolve_metric(_hb(1.0, 0.5), [1.0, 0.0, 0.0], grid)


def test_subsample_matches_full():
    grid = TimeGrid(0.0, 1.0, 1e-2)
    traj = evolve_metric(_hb(1.0, 1.5), GROUND, grid)
    sub = traj.subsample(10)
    assert np.allclose(sub.bloch(), traj.bloch()[::10])
    assert sub.times.shape == (11,)
    with pytest.raises(ValueError):
        traj.subsample(7)


def test_batched_matches_individual():
    grid = TimeGrid(0.0, 2.0, 1e-2)
    Hs = np.stack([_hb(1.0, 0.5), _hb(1.0, 1.5), (1 - 0.5j) * SIGMA_Z])
    batch = evolve_metric(Hs, GROUND, grid)
    for i, H in enumerate(Hs):
        single = evolve_metric(H, GROUND, grid)
        assert np.allclose(batch.bloch()[:, i], single.bloch(), atol=1e-13)


def test_hermitian_map_model_a():
    H = (1 - 0.5j) * SIGMA_Z
    traj = evolve_metric(H, GROUND, TimeGrid(0.0, 2.0, 1e-3))
    for method in ("central", "exact"):
        h = hermitian_map(traj, H, 1.0, method=method)
        assert np.allclose(h, SIGMA_Z, atol=1e-6)


def test_hermitian_map_model_b_is_hermitian_and_methods_agree():
    H = _hb(1.0, 0.5)
    traj = evolve_metric(H, GROUND, TimeGrid(0.0, 5.0, 1e-3))
    for t in (0.7, 2.3456):
        hc = hermitian_map(traj, H, t)
        he = hermitian_map(traj, H, t, method="exact")
        assert is_hermitian(he, tol=1e-9)
        assert np.allclose(hc, he, atol=1e-5)
    with pytest.raises(ValueError):
        hermitian_map(traj, H, 1.0, method="nope")


def test_hermitian_map_discrepancy_report():
    rep = hermitian_map_discrepancy()
    assert rep.numeric_ok and rep.mismatch
    assert np.allclose(rep.numeric, SIGMA_X, atol=1e-4)
    assert np.allclose(hermitian_map_tabulated(1.0, 0.5, 0.0), 2 * SIGMA_X)
    assert "informational" in rep.summary()


def test_asymptotics_requires_broken_regime():
    with pytest.raises(NotPTBroken):
        metric_asymptotics_model_b(1.0, 0.5, (0, 0, -1))
    sx, sy, sz = metric_asymptotics_model_b(1.0, 1.5, (0, 0, -1))
    assert np.isclose(sz, -1 / 9) and sx == 0
