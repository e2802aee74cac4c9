import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadopo.errors import DomainError, Diverged
from quadopo.meanfield import steady_state
from quadopo.model import SystemParams
from quadopo.spectra import linearize, lyapunov_covariance
from quadopo.stochastic import (
    TrajectoryState,
    _step_split,
    alpha_index,
    drift,
    noise_matrix,
    plus_index,
    run_ensemble,
    step_ito,
    to_phase_space,
)


def state_of(alpha):
    alpha = np.asarray(alpha, dtype=complex)
    return TrajectoryState(alpha, alpha.conj())


def test_zero_noise_fixed_point(base):
    st0 = state_of(steady_state(base).alpha)
    out = step_ito(st0, base, 0.001, np.zeros(16))
    assert np.array_equal(out.vector(), st0.vector())


def test_linear_decay_without_coupling():
    p = SystemParams(chi=0.0, eps=0.0, gamma=1.0, kappa=1.0)
    start = np.full(8, 2 + 1j)
    out = step_ito(state_of(start), p, 0.01, np.ones(16))
    assert np.allclose(out.alpha, start * 0.99, rtol=1e-15)


def test_unit_noise_increment(base):
    alpha = steady_state(base).alpha
    dw = np.zeros(16)
    dw[0] = 1.0
    out = step_ito(state_of(alpha), base, 1e-9, dw)
    # sqrt(chi * 40 / 2) = sqrt(0.2); the first noise pair drives (a7, a8)
    assert out.alpha[6] == pytest.approx(np.sqrt(0.2), rel=1e-9)
    assert out.alpha[7] == pytest.approx(np.sqrt(0.2), rel=1e-9)
    assert np.allclose(out.alpha[4:6], 0)
    assert np.allclose(out.alpha_plus[4:], 0)
    dw = np.zeros(16)
    dw[3] = 1.0
    out = step_ito(state_of(alpha), base, 1e-9, dw)
    assert out.alpha_plus[6] == pytest.approx(1j * np.sqrt(0.2), rel=1e-9)
    assert out.alpha_plus[7] == pytest.approx(-1j * np.sqrt(0.2), rel=1e-9)
    assert np.allclose(out.alpha[4:], 0)


def test_divergence_detected(base):
    start = np.full(8, 1e8, dtype=complex)
    with pytest.raises(Diverged):
        step_ito(state_of(start), base, 1e-3, np.zeros(16))


def test_step_rejects_bad_dt(base):
    with pytest.raises(DomainError):
        step_ito(state_of(np.zeros(8)), base, 0.0, np.zeros(16))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_fast_kernel_matches_reference_step(seed):
    rng = np.random.default_rng(seed)
    p = SystemParams(chi=rng.uniform(0.01, 0.5, 4), eps=rng.uniform(0, 5, 4),
                     gamma=rng.uniform(1, 3, 4), kappa=rng.uniform(0.5, 2, 4))
    x = rng.normal(size=16) + 1j * rng.normal(size=16)
    dw = rng.normal(size=16) * 0.03
    ref = step_ito(TrajectoryState.from_vector(x), p, 1e-3, dw).vector()
    a = x[0::2, None].copy()
    ap = x[1::2, None].copy()
    _step_split(a, ap, p, 1e-3, dw[:, None])
    got = np.empty(16, dtype=complex)
    got[0::2], got[1::2] = a[:, 0], ap[:, 0]
    assert np.allclose(got, ref, rtol=1e-12, atol=1e-12)


def test_noise_matrix_drives_only_low_modes(base):
    x = to_phase_space(steady_state(base).alpha)
    b = noise_matrix(x, base)
    for k in range(4):
        assert not np.any(b[alpha_index(k)]) and not np.any(b[plus_index(k)])
    assert np.array_equal(drift(x, base), np.zeros(16))


def test_ensemble_deterministic_and_batch_independent(base):
    p = base.with_pump_ratio(0.5)
    kw = dict(n_traj=12, t_final=2.0, dt=0.005, seed=7)
    a = run_ensemble(p, batch_size=12, **kw)
    b = run_ensemble(p, batch_size=5, **kw)
    c = run_ensemble(p, batch_size=12, chunk=37, **kw)
    for other in (b, c):
        assert np.array_equal(a.mean, other.mean)
        assert np.array_equal(a.second, other.second)
    d = run_ensemble(p, n_traj=12, t_final=2.0, dt=0.005, seed=8)
    assert not np.array_equal(a.mean, d.mean)


def test_noise_free_ensemble_is_exact():
    p = SystemParams(chi=0.0, eps=3.0, gamma=2.0, kappa=1.0)
    res = run_ensemble(p, n_traj=4, t_final=1.0, dt=0.01)
    assert np.allclose(res.mean[0::2], [1.5] * 4 + [0] * 4, atol=1e-14)
    assert np.allclose(res.covariance, 0, atol=1e-12)
    assert res.n_diverged == 0


def test_ensemble_argument_checks(base):
    with pytest.raises(DomainError):
        run_ensemble(base, n_traj=1, t_final=1.0, dt=0.001)
    with pytest.raises(DomainError):
        run_ensemble(base, n_traj=4, t_final=1.0, dt=0.01)
    with pytest.raises(DomainError):
        run_ensemble(base, n_traj=4, t_final=-1.0, dt=0.001)


@pytest.mark.slow
def test_low_mode_moments_match_linearization(base):
    p = base.with_pump_ratio(0.5)
    res = run_ensemble(p, n_traj=1000, t_final=20.0, dt=0.005, seed=11)
    c = lyapunov_covariance(linearize(p, steady_state(p)))
    for i, j in [(4, 5), (5, 6), (6, 7), (4, 7)]:
        ia, jp = alpha_index(i), plus_index(j)
        z = abs(res.covariance[ia, jp] - c[ia, jp]) / res.second_stderr[ia, jp]
        assert z < 4
    for j in range(4, 8):
        ia, ip = alpha_index(j), plus_index(j)
        assert abs(res.covariance[ia, ip] - c[ia, ip]) / res.second_stderr[ia, ip] < 4


@pytest.mark.slow
def test_conjugate_partners_agree(base):
    res = run_ensemble(base, n_traj=500, t_final=10.0, dt=0.005, seed=5)
    for k in range(8):
        diff = res.mean[plus_index(k)] - np.conj(res.mean[alpha_index(k)])
        assert abs(diff) <= 3 * np.hypot(res.mean_stderr[plus_index(k)], res.mean_stderr[alpha_index(k)])


def _coupled_means(params, x0, n_traj, n_coarse, dt, seed):
    """Time-averaged means at dt and dt/2 driven by the same Brownian paths."""
    rng = np.random.default_rng(seed)
    coarse = TrajectoryState.from_vector(np.tile(x0, (n_traj, 1)))
    fine = coarse
    keep = n_coarse // 2
    acc_c = np.zeros((n_traj, 16), dtype=complex)
    acc_f = np.zeros((n_traj, 16), dtype=complex)
    for step in range(n_coarse):
        half = rng.standard_normal((2, n_traj, 16)) * np.sqrt(dt / 2)
        coarse = step_ito(coarse, params, dt, half[0] + half[1])
        fine = step_ito(fine, params, dt / 2, half[0])
        fine = step_ito(fine, params, dt / 2, half[1])
        if step >= keep:
            acc_c += coarse.vector()
            acc_f += fine.vector()
    return acc_c / (n_coarse - keep), acc_f / (n_coarse - keep)


@pytest.mark.slow
def test_dt_halving(base):
    p = base.with_pump_ratio(0.5)
    x0 = to_phase_space(steady_state(p).alpha)
    coarse, fine = _coupled_means(p, x0, n_traj=400, n_coarse=2000, dt=0.005, seed=9)
    n = coarse.shape[0]
    se = np.sqrt((coarse.real.var(axis=0, ddof=1) + coarse.imag.var(axis=0, ddof=1)) / n)
    assert np.all(np.abs(coarse.mean(axis=0) - fine.mean(axis=0)) < se)
