"""Undepleted-pump solutions for the low-mode quadratures.

With the pumps frozen to real amplitudes the couplings become
``xi_k = chi_k * <a_k(0)>`` and the quadratures obey linear equations::

    dX/dt = K X,    dY/dt = -K Y

where ``K`` is the weighted adjacency matrix of the ring 5-6-7-8-5. Hence
``X(t) = exp(K t) X(0)`` and ``Y(t) = exp(-K t) Y(0)``. Two closed forms are
provided (all couplings equal; couplings ``(a, a, b, b)``) alongside the
general eigendecomposition route.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .entanglement import QuadCovariance, vlf_optimized
from .errors import DomainError, MethodMismatch

FIGURE_XI_T_MAX = 3.0
FIGURE_POINTS = 300


class Method(str, Enum):
    GENERAL = "general"
    CLOSED_EQUAL = "closed_equal"
    CLOSED_PAIRED = "closed_paired"


@dataclass(frozen=True)
class PropagatorPair:
    """Linear maps taking (X5..X8)(0) and (Y5..Y8)(0) to time t."""

    mX: np.ndarray
    mY: np.ndarray


def effective_couplings(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = np.full(4, float(xi))
    if xi.shape != (4,):
        raise DomainError(f"need four effective couplings, got shape {xi.shape}")
    if np.any(xi < 0) or not np.all(np.isfinite(xi)):
        raise DomainError("effective couplings must be finite and non-negative")
    return xi


def coupling_matrix(xi) -> np.ndarray:
    """Symmetric 4x4 ring matrix over modes (5, 6, 7, 8)."""
    xi = effective_couplings(xi)
    k = np.zeros((4, 4))
    for p in range(4):
        a, b = p, (p + 1) % 4
        k[a, b] = k[b, a] = xi[p]
    return k


def _expm_symmetric(k: np.ndarray, t: float) -> np.ndarray:
    if t == 0:
        return np.eye(len(k))
    lam, vecs = np.linalg.eigh(k)
    return (vecs * np.exp(lam * t)) @ vecs.T


def _closed_equal(xi: float, t: float) -> np.ndarray:
    a = np.cosh(xi * t) ** 2
    b = 0.5 * np.sinh(2 * xi * t)
    c = np.sinh(xi * t) ** 2
    return np.array([
        [a, b, c, b],
        [b, a, b, c],
        [c, b, a, b],
        [b, c, b, a],
    ])


def _closed_paired(a: float, b: float, t: float) -> np.ndarray:
    # ring weights (a, a, b, b): mode 6 couples only through a, mode 8 only through b
    omega = np.hypot(a, b)
    if omega == 0.0:
        return np.eye(4)
    s = np.sqrt(2.0) * omega * t
    d = np.cosh(s / 2) ** 2
    f = np.sinh(s / 2) ** 2
    e = a * np.sinh(s) / (np.sqrt(2.0) * omega)
    g = b * np.sinh(s) / (np.sqrt(2.0) * omega)
    h = (b**2 + a**2 * np.cosh(s)) / omega**2
    i = a * b * (np.cosh(s) - 1.0) / omega**2
    j = (a**2 + b**2 * np.cosh(s)) / omega**2
    return np.array([
        [d, e, f, g],
        [e, h, e, i],
        [f, e, d, g],
        [g, i, g, j],
    ])


def propagator(xi, t: float, method: Method | str = Method.GENERAL) -> PropagatorPair:
    """Quadrature propagators at time ``t``.

    ``closed_equal`` needs all four couplings equal; ``closed_paired`` needs
    ``xi == (a, a, b, b)``. Otherwise MethodMismatch is raised.
    """
    xi = effective_couplings(xi)
    method = Method(method)
    if method is Method.GENERAL:
        k = coupling_matrix(xi)
        return PropagatorPair(_expm_symmetric(k, t), _expm_symmetric(k, -t))
    if method is Method.CLOSED_EQUAL:
        if not np.all(xi == xi[0]):
            raise MethodMismatch(f"closed_equal needs equal couplings, got {xi}")
        return PropagatorPair(_closed_equal(xi[0], t), _closed_equal(xi[0], -t))
    if not (xi[0] == xi[1] and xi[2] == xi[3]):
        raise MethodMismatch(f"closed_paired needs couplings (a, a, b, b), got {xi}")
    return PropagatorPair(_closed_paired(xi[0], xi[2], t), _closed_paired(xi[0], xi[2], -t))


def quad_covariance(prop: PropagatorPair) -> QuadCovariance:
    """Second moments at time t for vacuum inputs (unit initial covariance)."""
    m = np.zeros((8, 8))
    m[:4, :4] = prop.mX @ prop.mX.T
    m[4:, 4:] = prop.mY @ prop.mY.T
    return QuadCovariance(0.5 * (m + m.T))


def v3_closed_form(xi: float, t: float) -> float:
    """Term-by-term closed-form expression for the equal-coupling VLF correlation.

    The expression mixes sqrt(B) terms with quadratic ones and does not agree
    with the moment pipeline away from t = 0; it is kept only so that the
    discrepancy can be reported. Use :func:`vlf_series` for actual values.
    """
    a = np.cosh(xi * t) ** 2
    b = 0.5 * np.sinh(2 * xi * t)
    c = np.sinh(xi * t) ** 2
    r2b = np.sqrt(2 * b)
    num = 2 * (b**2 - 4 * b**1.5 * c * np.sqrt(2) + 12 * b * c**2 - 8 * c**3 * r2b + 4 * c**4)
    den = a**2 - 2 * a * np.sqrt(b) + b - c * r2b + c**2
    return float(4 * a**2 - 4 * a * r2b + 4 * (r2b - c) * c + num / den)


def vlf_series(xi, times, method: Method | str = Method.GENERAL) -> list[dict]:
    """Optimized VLF correlations and gains along a time grid."""
    rows = []
    for t in np.asarray(times, dtype=float):
        res = vlf_optimized(quad_covariance(propagator(xi, t, method)))
        rows.append({
            "t": float(t),
            "V56": res.v56,
            "V67": res.v67,
            "V78": res.v78,
            "g5": res.gains.g5,
            "g6": res.gains.g6,
            "g7": res.gains.g7,
            "g8": res.gains.g8,
        })
    return rows


def figure_grid(xi_ref: float = 1.0, points: int = FIGURE_POINTS,
                xi_t_max: float = FIGURE_XI_T_MAX) -> np.ndarray:
    """Times covering xi_ref * t in (0, xi_t_max], ``points`` samples."""
    return np.linspace(xi_t_max / points, xi_t_max, points) / xi_ref
