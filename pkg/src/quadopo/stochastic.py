"""Positive-P Ito equations for the eight modes and trajectory ensembles.

Phase-space vector layout (used everywhere in this package)::

    x = [a1, a1+, a2, a2+, ..., a8, a8+]      index 2*j is a_{j+1}, 2*j+1 its partner

``a`` and ``a+`` are independent complex fields; trajectory averages give
normally ordered moments.

Sixteen real Wiener increments drive each step. With 0-based noise index
``n`` (eta_{n+1} in 1-based labels), the alpha family uses pairs
(0,1)->pump 3, (4,5)->pump 1, (8,9)->pump 2, (12,13)->pump 4, and the ``+``
family uses the same pairs shifted by two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._util import ordered_map
from .errors import Diverged, DomainError, TooManyDivergences
from .model import PUMP_TO_PAIR, SystemParams, validate

N_VARS = 16
N_NOISE = 16
DIVERGENCE_LIMIT = 1e8
MAX_DIVERGED_FRACTION = 0.01

# pump k -> (first noise index, low mode taking +i, low mode taking -i)
NOISE_TABLE = {
    0: (4, 0, 1),    # eta5/eta6:   a5 (+i), a6 (-i)
    1: (8, 1, 2),    # eta9/eta10:  a6 (+i), a7 (-i)
    2: (0, 2, 3),    # eta1/eta2:   a7 (+i), a8 (-i)
    3: (12, 0, 3),   # eta13/eta14: a5 (+i), a8 (-i)
}


def alpha_index(mode: int) -> int:
    """Index of a_{mode+1} in the phase-space vector (mode is 0-based, 0..7)."""
    return 2 * mode


def plus_index(mode: int) -> int:
    return 2 * mode + 1


def to_phase_space(alpha, alpha_plus=None) -> np.ndarray:
    """Interleave eight amplitudes with their partners (default: conjugates)."""
    alpha = np.asarray(alpha, dtype=complex)
    alpha_plus = np.conj(alpha) if alpha_plus is None else np.asarray(alpha_plus, dtype=complex)
    x = np.empty(alpha.shape[:-1] + (N_VARS,), dtype=complex)
    x[..., 0::2] = alpha
    x[..., 1::2] = alpha_plus
    return x


def drift(x, params: SystemParams) -> np.ndarray:
    """Deterministic part of the Ito equations; ``x`` may carry leading batch axes."""
    x = np.asarray(x, dtype=complex)
    a, ap = x[..., 0::2], x[..., 1::2]
    da = np.empty_like(a)
    dap = np.empty_like(ap)
    da[..., :4] = params.eps - params.gamma * a[..., :4]
    dap[..., :4] = params.eps - params.gamma * ap[..., :4]
    da[..., 4:] = -params.kappa * a[..., 4:]
    dap[..., 4:] = -params.kappa * ap[..., 4:]
    for k, (i, j) in PUMP_TO_PAIR.items():
        chi = params.chi[k]
        li, lj = 4 + i, 4 + j
        da[..., k] -= chi * a[..., li] * a[..., lj]
        dap[..., k] -= chi * ap[..., li] * ap[..., lj]
        da[..., li] += chi * a[..., k] * ap[..., lj]
        da[..., lj] += chi * a[..., k] * ap[..., li]
        dap[..., li] += chi * ap[..., k] * a[..., lj]
        dap[..., lj] += chi * ap[..., k] * a[..., li]
    out = np.empty_like(x)
    out[..., 0::2] = da
    out[..., 1::2] = dap
    return out


def noise_matrix(x, params: SystemParams) -> np.ndarray:
    """Noise coefficients B (shape ``batch + (16, 16)``) so that dx = drift dt + B dW.

    Coefficients are ``sqrt(chi_k a_k / 2)`` on the principal branch.
    """
    x = np.asarray(x, dtype=complex)
    b = np.zeros(x.shape[:-1] + (N_VARS, N_NOISE), dtype=complex)
    for k, (n0, plus_i, minus_i) in NOISE_TABLE.items():
        s = np.sqrt(params.chi[k] * x[..., alpha_index(k)] / 2)
        sp = np.sqrt(params.chi[k] * x[..., plus_index(k)] / 2)
        for coeff, n, idx in ((s, n0, alpha_index), (sp, n0 + 2, plus_index)):
            p, m = idx(4 + plus_i), idx(4 + minus_i)
            b[..., p, n] += coeff
            b[..., p, n + 1] += 1j * coeff
            b[..., m, n] += coeff
            b[..., m, n + 1] += -1j * coeff
    return b


def _noise_increment(x, params: SystemParams, dw) -> np.ndarray:
    # B @ dW without materializing B for the batch
    out = np.zeros_like(x)
    for k, (n0, plus_i, minus_i) in NOISE_TABLE.items():
        s = np.sqrt(params.chi[k] * x[..., alpha_index(k)] / 2)
        sp = np.sqrt(params.chi[k] * x[..., plus_index(k)] / 2)
        for coeff, n, idx in ((s, n0, alpha_index), (sp, n0 + 2, plus_index)):
            out[..., idx(4 + plus_i)] += coeff * (dw[..., n] + 1j * dw[..., n + 1])
            out[..., idx(4 + minus_i)] += coeff * (dw[..., n] - 1j * dw[..., n + 1])
    return out


@dataclass
class TrajectoryState:
    alpha: np.ndarray
    alpha_plus: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=complex)
        self.alpha_plus = np.asarray(self.alpha_plus, dtype=complex)

    @classmethod
    def from_vector(cls, x) -> "TrajectoryState":
        x = np.asarray(x, dtype=complex)
        return cls(x[..., 0::2], x[..., 1::2])

    def vector(self) -> np.ndarray:
        return to_phase_space(self.alpha, self.alpha_plus)


def step_ito(state: TrajectoryState, params: SystemParams, dt: float, noises) -> TrajectoryState:
    """One Euler-Maruyama step; ``noises`` are the 16 Wiener increments (variance dt)."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    x = state.vector()
    x = x + drift(x, params) * dt + _noise_increment(x, params, np.asarray(noises, dtype=float))
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) >= DIVERGENCE_LIMIT:
        raise Diverged("trajectory amplitude exceeded the divergence limit")
    return TrajectoryState.from_vector(x)


class EnsembleMoments(NamedTuple):
    """Trajectory- and time-averaged moments.

    ``mean`` is over the 16 phase-space variables. ``second`` is the 16x16 matrix
    of ``<x_i x_j>`` averages; ``covariance`` subtracts the mean products, so
    its low-mode block estimates normally ordered fluctuation moments such as
    ``<da6+ da5>`` (entry [alpha_index(4), plus_index(5)]). Standard errors come
    from the spread of per-trajectory time averages.
    """

    mean: np.ndarray
    mean_stderr: np.ndarray
    second: np.ndarray
    second_stderr: np.ndarray
    covariance: np.ndarray
    n_traj: int
    n_diverged: int
    n_samples: int


def trajectory_generator(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory: Philox keyed by (seed, index)."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(index)]))


def _step_split(a, ap, params, dt, dw):
    """Euler-Maruyama step on mode-major arrays: ``a``, ``ap`` are (8, n), ``dw`` (16, n)."""
    eps, gamma, kappa, chi = params.eps, params.gamma, params.kappa, params.chi
    da = np.empty_like(a)
    dap = np.empty_like(ap)
    for k, (i, j) in PUMP_TO_PAIR.items():
        li, lj = 4 + i, 4 + j
        da[k] = eps[k] - gamma[k] * a[k] - chi[k] * a[li] * a[lj]
        dap[k] = eps[k] - gamma[k] * ap[k] - chi[k] * ap[li] * ap[lj]
    for low in range(4):
        da[4 + low] = -kappa[low] * a[4 + low]
        dap[4 + low] = -kappa[low] * ap[4 + low]
    for k, (i, j) in PUMP_TO_PAIR.items():
        li, lj = 4 + i, 4 + j
        ck = chi[k] * a[k]
        cpk = chi[k] * ap[k]
        da[li] += ck * ap[lj]
        da[lj] += ck * ap[li]
        dap[li] += cpk * a[lj]
        dap[lj] += cpk * a[li]
    da *= dt
    dap *= dt
    for k, (n0, plus_i, minus_i) in NOISE_TABLE.items():
        if chi[k] == 0:
            continue
        s = np.sqrt(0.5 * chi[k] * a[k])
        sp = np.sqrt(0.5 * chi[k] * ap[k])
        zp = dw[n0] + 1j * dw[n0 + 1]
        zpp = dw[n0 + 2] + 1j * dw[n0 + 3]
        da[4 + plus_i] += s * zp
        da[4 + minus_i] += s * zp.conj()
        dap[4 + plus_i] += sp * zpp
        dap[4 + minus_i] += sp * zpp.conj()
    a += da
    ap += dap


def _bad_columns(a, ap):
    bad = ~(np.isfinite(a).all(axis=0) & np.isfinite(ap).all(axis=0))
    bad |= (np.abs(a) >= DIVERGENCE_LIMIT).any(axis=0) | (np.abs(ap) >= DIVERGENCE_LIMIT).any(axis=0)
    return bad


def _run_batch(indices, params, x0, n_steps, dt, keep_from, seed, chunk, sample_every):
    n = len(indices)
    gens = [trajectory_generator(seed, i) for i in indices]
    a = np.repeat(x0[0::2, None], n, axis=1)
    ap = np.repeat(x0[1::2, None], n, axis=1)
    acc_x = np.zeros((N_VARS, n), dtype=complex)
    acc_xx = np.zeros((N_VARS, N_VARS, n), dtype=complex)
    alive = np.ones(n, dtype=bool)
    x = np.empty((N_VARS, n), dtype=complex)
    n_samples = 0
    sqdt = np.sqrt(dt)
    step = 0
    while step < n_steps:
        m = min(chunk, n_steps - step)
        # (m, 16, n): every trajectory draws its own consecutive block
        dws = np.stack([g.standard_normal((m, N_NOISE)) for g in gens], axis=2) * sqdt
        for s in range(m):
            _step_split(a, ap, params, dt, dws[s])
            step += 1
            if step > keep_from and (n_steps - step) % sample_every == 0:
                x[0::2] = a
                x[1::2] = ap
                acc_x += x
                acc_xx += x[:, None, :] * x[None, :, :]
                n_samples += 1
        bad = _bad_columns(a, ap)
        if bad.any():
            alive &= ~bad
            a[:, bad] = 0.0
            ap[:, bad] = 0.0
    return (acc_x / n_samples).T, np.moveaxis(acc_xx / n_samples, 2, 0), alive, n_samples


def run_ensemble(params: SystemParams, n_traj: int, t_final: float, dt: float,
                 seed: int = 0, initial=None, batch_size: int = 2500,
                 chunk: int = 100, sample_every: int = 10) -> EnsembleMoments:
    """Integrate independent trajectories and average over the second half.

    ``initial`` is an 8-vector of mean amplitudes (partners set to conjugates)
    or a full 16-vector; by default the classical steady state is used for
    symmetric parameters. Moments are sampled every ``sample_every`` steps of
    the retained window. Results depend only on ``seed``, never on batching
    or thread scheduling.
    """
    validate(params)
    if n_traj < 2:
        raise DomainError("n_traj must be at least 2")
    if t_final <= 0:
        raise DomainError("t_final must be positive")
    if dt <= 0 or dt > 0.05 / float(np.max(params.losses)):
        raise DomainError(f"dt={dt} must be positive and at most 0.05 / max loss rate")
    if initial is None:
        from .meanfield import steady_state
        initial = steady_state(params).alpha
    x0 = np.asarray(initial, dtype=complex)
    if x0.shape == (8,):
        x0 = to_phase_space(x0)
    if x0.shape != (N_VARS,):
        raise DomainError(f"initial state must have 8 or 16 entries, got {x0.shape}")

    n_steps = int(round(t_final / dt))
    keep_from = n_steps // 2
    if sample_every < 1 or n_steps - keep_from < sample_every:
        raise DomainError("sample_every must be >= 1 and fit in the retained window")
    batches = [range(i, min(i + batch_size, n_traj)) for i in range(0, n_traj, batch_size)]
    results = ordered_map(
        lambda idx: _run_batch(idx, params, x0, n_steps, dt, keep_from, seed, chunk, sample_every),
        batches)
    traj_x = np.concatenate([r[0] for r in results])
    traj_xx = np.concatenate([r[1] for r in results])
    alive = np.concatenate([r[2] for r in results])
    n_div = int(np.count_nonzero(~alive))
    if n_div > MAX_DIVERGED_FRACTION * n_traj:
        raise TooManyDivergences(f"{n_div} of {n_traj} trajectories diverged")
    traj_x, traj_xx = traj_x[alive], traj_xx[alive]
    n_ok = traj_x.shape[0]
    mean = traj_x.mean(axis=0)
    second = traj_xx.mean(axis=0)
    mean_se = _stderr(traj_x)
    second_se = _stderr(traj_xx)
    cov = second - mean[:, None] * mean[None, :]
    return EnsembleMoments(mean, mean_se, second, second_se, cov, n_ok, n_div,
                           results[0][3])


def _stderr(samples: np.ndarray) -> np.ndarray:
    # complex samples: standard error of real and imaginary parts combined
    n = samples.shape[0]
    var = samples.real.var(axis=0, ddof=1) + samples.imag.var(axis=0, ddof=1)
    return np.sqrt(var / n)
