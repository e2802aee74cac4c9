"""Optimized van Loock-Furusawa criteria for the four low-frequency modes.

All functions take an 8x8 quadrature covariance over the basis
``(X5, X6, X7, X8, Y5, Y6, Y7, Y8)``; its origin (time-domain moments or an
output spectral covariance at one frequency) does not matter.

The three correlations are::

    V56 = V(X5 - X6) + V(Y5 + Y6 + g7 Y7 + g8 Y8)
    V67 = V(X6 - X7) + V(g5 Y5 + Y6 + Y7 + g8 Y8)
    V78 = V(X7 - X8) + V(g5 Y5 + g6 Y6 + Y7 + Y8)

``(g7, g8)`` minimize V56 and ``(g5, g6)`` minimize V78; V67 reuses them.
Simultaneous violation (all three below 4) signals quadripartite entanglement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateCovariance

BOUND = 4.0
DEGENERACY_TOL = 1e-12

QUADRATURE_LABELS = ("X5", "X6", "X7", "X8", "Y5", "Y6", "Y7", "Y8")


@dataclass(frozen=True)
class QuadCovariance:
    """Symmetrized second moments of the low-mode quadratures."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (8, 8):
            raise ValueError(f"quadrature covariance must be 8x8, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def x_block(self) -> np.ndarray:
        return self.m[:4, :4]

    @property
    def y_block(self) -> np.ndarray:
        return self.m[4:, 4:]

    @classmethod
    def vacuum(cls) -> "QuadCovariance":
        return cls(np.eye(8))


class GainVector(NamedTuple):
    g5: float
    g6: float
    g7: float
    g8: float


class VLFResult(NamedTuple):
    v56: float
    v67: float
    v78: float
    gains: GainVector

    @property
    def values(self) -> tuple[float, float, float]:
        return (self.v56, self.v67, self.v78)

    @property
    def entangled(self) -> bool:
        return all(v < BOUND for v in self.values)


def _matrix(cov) -> np.ndarray:
    return cov.m if isinstance(cov, QuadCovariance) else np.asarray(cov, dtype=float)


def optimal_gains(cov) -> GainVector:
    """Closed-form gains minimizing V56 over (g7, g8) and V78 over (g5, g6).

    Raises
    ------
    DegenerateCovariance
        If ``V56**2 - V5*V6`` or ``V78**2 - V7*V8`` is below 1e-12 in magnitude.
    """
    y = _matrix(cov)[4:, 4:]
    v5, v6, v7, v8 = np.diag(y)
    v56, v57, v58 = y[0, 1], y[0, 2], y[0, 3]
    v67, v68, v78 = y[1, 2], y[1, 3], y[2, 3]

    den_56 = v56**2 - v5 * v6
    den_78 = v78**2 - v7 * v8
    if abs(den_56) < DEGENERACY_TOL:
        raise DegenerateCovariance(f"V56^2 - V5 V6 = {den_56:.3e}")
    if abs(den_78) < DEGENERACY_TOL:
        raise DegenerateCovariance(f"V78^2 - V7 V8 = {den_78:.3e}")

    g5 = (v6 * (v57 + v58) - v56 * (v67 + v68)) / den_56
    g6 = (v5 * (v67 + v68) - v56 * (v57 + v58)) / den_56
    g7 = (v8 * (v57 + v67) - v78 * (v58 + v68)) / den_78
    g8 = (v7 * (v58 + v68) - v78 * (v57 + v67)) / den_78
    return GainVector(float(g5), float(g6), float(g7), float(g8))


def _weights(gains: GainVector) -> np.ndarray:
    g5, g6, g7, g8 = gains
    w = np.zeros((3, 8))
    w[0, [0, 1]] = 1.0, -1.0
    w[0, 4:] = 1.0, 1.0, g7, g8
    w[1, [1, 2]] = 1.0, -1.0
    w[1, 4:] = g5, 1.0, 1.0, g8
    w[2, [2, 3]] = 1.0, -1.0
    w[2, 4:] = g5, g6, 1.0, 1.0
    return w


def vlf_correlations(cov, gains) -> tuple[float, float, float]:
    """Evaluate the three left-hand sides for fixed gains."""
    m = _matrix(cov)
    out = []
    for row in _weights(GainVector(*gains)):
        wx, wy = row[:4], row[4:]
        out.append(float(wx @ m[:4, :4] @ wx + wy @ m[4:, 4:] @ wy))
    return tuple(out)


def vlf_optimized(cov) -> VLFResult:
    gains = optimal_gains(cov)
    return VLFResult(*vlf_correlations(cov, gains), gains)


def _constrained_pair(y, fixed, free, u):
    """Minimize w^T y w over w[free] with w[fixed] = 1 and u.w = 0."""
    c = np.zeros(4)
    c[list(fixed)] = 1.0
    e = np.zeros((4, 2))
    e[free[0], 0] = e[free[1], 1] = 1.0
    kkt = np.zeros((3, 3))
    kkt[:2, :2] = e.T @ y @ e
    kkt[:2, 2] = kkt[2, :2] = e.T @ u
    rhs = np.concatenate([-e.T @ y @ c, [-u @ c]])
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    return sol[:2]


def vlf_optimized_singular(cov, direction, tol: float = 1e-9) -> VLFResult:
    """Limit of :func:`vlf_optimized` for ``cov + s * [0 0; 0 u u^T]`` as s -> inf.

    Used when the Y-quadrature spectrum carries an undamped (phase-diffusion)
    direction ``u`` whose weight diverges. The gain formulas then converge to
    the constrained minimizers with ``u . w = 0``; any correlation whose Y
    combination keeps a component along ``u`` is infinite.
    """
    m = _matrix(cov)
    y = m[4:, 4:]
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    g7, g8 = _constrained_pair(y, (0, 1), (2, 3), u)
    g5, g6 = _constrained_pair(y, (2, 3), (0, 1), u)
    gains = GainVector(float(g5), float(g6), float(g7), float(g8))
    values = list(vlf_correlations(m, gains))
    for k, row in enumerate(_weights(gains)):
        wy = row[4:]
        if abs(wy @ u) > tol * max(1.0, np.linalg.norm(wy)):
            values[k] = float("inf")
    return VLFResult(*values, gains)


def minimize_v67(cov) -> tuple[float, tuple[float, float]]:
    """Exploratory: minimize V67 over its own (g5, g8), independently of the
    gains used by :func:`vlf_optimized`. Not part of the reported criteria."""
    y = _matrix(cov)[4:, 4:]
    free = [0, 3]
    sub = y[np.ix_(free, free)]
    rhs = -(y[free][:, 1] + y[free][:, 2])
    g5, g8 = np.linalg.solve(sub, rhs)
    m = _matrix(cov)
    wx = np.array([0.0, 1.0, -1.0, 0.0])
    wy = np.array([g5, 1.0, 1.0, g8])
    return float(wx @ m[:4, :4] @ wx + wy @ y @ wy), (float(g5), float(g8))
