"""Classical mean-value dynamics of the eight cavity modes."""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NoConvergence
from .model import PUMP_TO_PAIR, SystemParams, require_symmetric, threshold_pump, validate

THRESHOLD_BAND = 1e-9


class Regime(str, Enum):
    BELOW = "below"
    AT_THRESHOLD = "at_threshold"
    ABOVE = "above"


class SteadyState(NamedTuple):
    alpha: np.ndarray
    regime: Regime


def classical_drift(alpha, params: SystemParams) -> np.ndarray:
    """Time derivative of the eight mean amplitudes (pumps first)."""
    alpha = np.asarray(alpha, dtype=complex)
    pump, low = alpha[:4], alpha[4:]
    dp = params.eps - params.gamma * pump
    dl = -params.kappa * low
    for k, (a, b) in PUMP_TO_PAIR.items():
        chi = params.chi[k]
        dp[k] -= chi * low[a] * low[b]
        dl[a] += chi * pump[k] * np.conj(low[b])
        dl[b] += chi * pump[k] * np.conj(low[a])
    return np.concatenate([dp, dl])


def residual(alpha, params: SystemParams) -> float:
    return float(np.max(np.abs(classical_drift(alpha, params))))


def steady_state(params: SystemParams) -> SteadyState:
    """Closed-form stationary amplitudes of the symmetric system.

    Above threshold the low modes take the real, positive branch
    ``sqrt((eps - eps_c) / chi)``; any branch related by the ring's phase
    symmetry is equally stationary.
    """
    validate(params)
    require_symmetric(params, "the closed-form steady state")
    eps, gamma, kappa, chi = (float(getattr(params, n)[0]) for n in ("eps", "gamma", "kappa", "chi"))
    alpha = np.zeros(8, dtype=complex)
    if chi == 0 or eps == 0:
        alpha[:4] = eps / gamma
        return SteadyState(alpha, Regime.BELOW)
    eps_c = threshold_pump(params)
    if abs(eps - eps_c) / eps_c < THRESHOLD_BAND:
        regime = Regime.AT_THRESHOLD
    elif eps < eps_c:
        regime = Regime.BELOW
    else:
        regime = Regime.ABOVE
    if regime is Regime.ABOVE:
        alpha[:4] = kappa / (2 * chi)
        alpha[4:] = np.sqrt((eps - eps_c) / chi)
    else:
        alpha[:4] = eps / gamma
    return SteadyState(alpha, regime)


POLISH_START = 1e-4


def _pack(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def _unpack(y: np.ndarray) -> np.ndarray:
    return y[:8] + 1j * y[8:]


def relax(params: SystemParams, init, t_max: float = 1e4, tol: float = 1e-10,
          rtol: float = 1e-10, chunk: float | None = None) -> np.ndarray:
    """Integrate the mean equations until ``max |d alpha / dt| < tol``.

    Integration proceeds in chunks of ``chunk`` time units (default: ten of the
    slowest loss times) with an adaptive RK45 pair, checking the residual after
    each chunk. Once the residual is below ``POLISH_START`` a Newton polish is
    attempted, since the integrator error floor can sit above ``tol``.

    Raises
    ------
    NoConvergence
        If ``t_max`` elapses with the residual still at or above ``tol``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    validate(params)
    z = np.asarray(init, dtype=complex).copy()
    if z.shape != (8,):
        raise DomainError(f"initial state must have 8 amplitudes, got {z.shape}")
    if residual(z, params) < tol:
        return z
    if chunk is None:
        chunk = 10.0 / float(np.min(params.losses))

    def rhs(_t, y):
        return _pack(classical_drift(_unpack(y), params))

    t = 0.0
    while t < t_max:
        span = min(chunk, t_max - t)
        sol = solve_ivp(rhs, (0.0, span), _pack(z), method="RK45", rtol=rtol,
                        atol=rtol * max(1.0, float(np.max(np.abs(z)))))
        if not sol.success:
            raise NoConvergence(sol.message)
        z = _unpack(sol.y[:, -1])
        t += span
        if not np.all(np.isfinite(z)):
            raise NoConvergence(f"mean amplitudes diverged at t={t:g}")
        res = residual(z, params)
        if res < tol:
            return _polish(z, params)
        if res < POLISH_START:
            polished = _polish(z, params)
            if residual(polished, params) < tol:
                return polished
    raise NoConvergence(f"residual {residual(z, params):.3e} >= tol {tol:g} after t_max={t_max:g}")


def _polish(z: np.ndarray, params: SystemParams) -> np.ndarray:
    """A few Newton steps on the real-packed drift; the integrator tolerance
    alone leaves errors near the residual divided by the slowest rate."""
    y = _pack(z)
    for _ in range(8):
        f = _pack(classical_drift(_unpack(y), params))
        jac = _real_jacobian(y, params)
        try:
            step = np.linalg.lstsq(jac, -f, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        y = y + step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(y))):
            break
    out = _unpack(y)
    return out if residual(out, params) <= residual(z, params) else z


def _real_jacobian(y: np.ndarray, params: SystemParams, h: float = 1e-7) -> np.ndarray:
    n = y.size
    jac = np.empty((n, n))
    for i in range(n):
        step = h * max(1.0, abs(y[i]))
        yp, ym = y.copy(), y.copy()
        yp[i] += step
        ym[i] -= step
        jac[:, i] = (_pack(classical_drift(_unpack(yp), params))
                     - _pack(classical_drift(_unpack(ym), params))) / (2 * step)
    return jac
