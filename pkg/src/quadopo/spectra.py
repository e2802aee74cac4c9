"""Linearized fluctuations about a steady state and output VLF spectra.

Fluctuations obey ``d dx = A dx dt + B dW`` with ``A`` the Jacobian of the
positive-P drift (phase-space layout of :mod:`quadopo.stochastic`) and
``D = B B^T``. For a stable ``A`` the stationary spectrum is::

    S(w) = (i w - A)^-1 D (-i w - A^T)^-1,     int S(w) dw / 2pi = C,
    A C + C A^T + D = 0.

Output quadrature spectra follow from input-output relations for a one-sided
cavity with amplitude loss ``kappa``::

    Vout_ij(w) = delta_ij + 2 sqrt(kappa_i kappa_j) Re Sq_ij(w)

with ``Sq`` the normally ordered low-mode quadrature spectrum, so a field with
no intracavity correlations gives the vacuum level 1.

Above threshold the ring has a continuous phase symmetry; the drift then has
one exactly neutral mode (phase diffusion). It is tracked explicitly: the
system still counts as stable, and the zero-frequency output limit is taken
with gains that cancel the diverging phase quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad_vec

from ._util import ordered_map
from .entanglement import GainVector, QuadCovariance, vlf_optimized, vlf_optimized_singular
from .errors import DegenerateCovariance, DomainError, NotAFixedPoint, Unstable
from .meanfield import classical_drift, steady_state
from .model import PUMP_TO_PAIR, SystemParams, validate
from .stochastic import N_VARS, alpha_index, plus_index, to_phase_space

STABILITY_TOL = 1e-10
FIXED_POINT_TOL = 1e-8
THRESHOLD_EXCLUSION = 0.02
ZERO_FREQUENCY = 1e-9


@dataclass(frozen=True)
class LinearizedSystem:
    drift: np.ndarray
    diffusion: np.ndarray
    params: SystemParams
    steady: np.ndarray
    neutral_modes: np.ndarray = field(default_factory=lambda: np.zeros((N_VARS, 0), complex))

    @property
    def low_block(self) -> slice:
        return slice(8, 16)


class StabilityReport(NamedTuple):
    eigenvalues: np.ndarray
    is_stable: bool
    max_real: float
    n_neutral: int


def drift_matrix(params: SystemParams, alpha) -> np.ndarray:
    """Exact Jacobian of the positive-P drift at ``alpha`` (partners = conjugates)."""
    x = to_phase_space(alpha)
    a, ap = x[0::2], x[1::2]
    jac = np.zeros((N_VARS, N_VARS), dtype=complex)
    for mode in range(8):
        loss = params.gamma[mode] if mode < 4 else params.kappa[mode - 4]
        jac[alpha_index(mode), alpha_index(mode)] = -loss
        jac[plus_index(mode), plus_index(mode)] = -loss
    for k, (i, j) in PUMP_TO_PAIR.items():
        chi = params.chi[k]
        li, lj = 4 + i, 4 + j
        # pump: -chi a_i a_j
        jac[alpha_index(k), alpha_index(li)] -= chi * a[lj]
        jac[alpha_index(k), alpha_index(lj)] -= chi * a[li]
        jac[plus_index(k), plus_index(li)] -= chi * ap[lj]
        jac[plus_index(k), plus_index(lj)] -= chi * ap[li]
        # low modes: chi a_k a_j+ and chi a_k a_i+
        for tgt, other in ((li, lj), (lj, li)):
            jac[alpha_index(tgt), alpha_index(k)] += chi * ap[other]
            jac[alpha_index(tgt), plus_index(other)] += chi * a[k]
            jac[plus_index(tgt), plus_index(k)] += chi * a[other]
            jac[plus_index(tgt), alpha_index(other)] += chi * ap[k]
    return jac


def diffusion_matrix(params: SystemParams, alpha) -> np.ndarray:
    """Diffusion D: ``chi_k a_k`` between the two low modes of pair k, and
    ``chi_k a_k+`` between their partners; zero elsewhere."""
    x = to_phase_space(alpha)
    d = np.zeros((N_VARS, N_VARS), dtype=complex)
    for k, (i, j) in PUMP_TO_PAIR.items():
        li, lj = 4 + i, 4 + j
        for idx, amp in ((alpha_index, x[alpha_index(k)]), (plus_index, x[plus_index(k)])):
            d[idx(li), idx(lj)] += params.chi[k] * amp
            d[idx(lj), idx(li)] += params.chi[k] * amp
    return d


def phase_generator(alpha) -> np.ndarray:
    """Tangent of the ring's phase symmetry a_m -> exp(+-i phi) a_m at ``alpha``.

    Low modes 5 and 7 rotate with +phi, 6 and 8 with -phi; pumps are fixed.
    """
    alpha = np.asarray(alpha, dtype=complex)
    sign = np.array([0, 0, 0, 0, 1, -1, 1, -1], dtype=float)
    return to_phase_space(1j * sign * alpha, -1j * sign * np.conj(alpha))


def linearize(params: SystemParams, steady) -> LinearizedSystem:
    validate(params)
    alpha = np.asarray(getattr(steady, "alpha", steady), dtype=complex)
    res = float(np.max(np.abs(classical_drift(alpha, params))))
    if res >= FIXED_POINT_TOL:
        raise NotAFixedPoint(f"drift residual {res:.3e} at the supplied state")
    a = drift_matrix(params, alpha)
    d = diffusion_matrix(params, alpha)
    gen = phase_generator(alpha)
    norm = np.linalg.norm(gen)
    neutral = np.zeros((N_VARS, 0), complex)
    if norm > 0 and np.linalg.norm(a @ gen) <= 1e-9 * np.linalg.norm(a) * norm:
        neutral = (gen / norm)[:, None]
    return LinearizedSystem(a, d, params, alpha, neutral)


def stability(sys: LinearizedSystem, tol: float = STABILITY_TOL) -> StabilityReport:
    """Eigenvalues of the drift; stable iff every non-symmetry eigenvalue has
    real part below ``-tol``."""
    eig = np.linalg.eigvals(sys.drift)
    order = np.argsort(-eig.real)
    eig = eig[order]
    n_neutral = sys.neutral_modes.shape[1]
    rest = eig[n_neutral:]
    neutral_ok = np.all(np.abs(eig[:n_neutral]) < 1e-8 * max(1.0, np.max(np.abs(eig))))
    stable = bool(neutral_ok and (rest.size == 0 or rest[0].real < -tol))
    return StabilityReport(eig, stable, float(eig[0].real), n_neutral)


def _require_stable(sys: LinearizedSystem) -> StabilityReport:
    rep = stability(sys)
    if not rep.is_stable:
        raise Unstable(f"drift eigenvalue with real part {rep.max_real:.3e}")
    return rep


def _spectrum(a: np.ndarray, d: np.ndarray, omega: float) -> np.ndarray:
    n = a.shape[0]
    eye = np.eye(n)
    left = np.linalg.solve(1j * omega * eye - a, d)
    # right factor (-i w - A^T)^-1 applied from the right: X M = left  <=>  M^T X^T = left^T
    return np.linalg.solve((-1j * omega * eye - a), left.T).T


def intracavity_spectrum(sys: LinearizedSystem, omega: float) -> np.ndarray:
    """16x16 spectral matrix S(omega) in phase-space layout."""
    _require_stable(sys)
    if sys.neutral_modes.shape[1] and abs(omega) < ZERO_FREQUENCY:
        raise Unstable("spectrum diverges at zero frequency along the phase-diffusion mode")
    return _spectrum(sys.drift, sys.diffusion, float(omega))


def spectrum_1d(lam: float, d: float, omega: float) -> complex:
    """Scalar OU fixture: drift -lam, diffusion d."""
    return complex(_spectrum(np.array([[-lam]]), np.array([[d]]), omega)[0, 0])


def lyapunov_covariance(sys: LinearizedSystem) -> np.ndarray:
    """Solve ``A C + C A^T + D = 0`` by Kronecker vectorization."""
    _require_stable(sys)
    if sys.neutral_modes.shape[1]:
        raise Unstable("stationary covariance does not exist with a phase-diffusion mode")
    a = sys.drift
    n = a.shape[0]
    eye = np.eye(n)
    op = np.kron(eye, a) + np.kron(a, eye)
    c = np.linalg.solve(op, -sys.diffusion.reshape(-1, order="F")).reshape((n, n), order="F")
    return 0.5 * (c + c.T)


def integrate_spectrum(sys: LinearizedSystem, omega_max: float = 200.0,
                       tail_correction: bool = True, epsabs: float = 1e-11) -> np.ndarray:
    """``int_{-W}^{W} S dw / 2pi`` by adaptive quadrature.

    With ``tail_correction`` the |w| > W contribution is added from the
    asymptotic series ``S ~ D/w^2 + (A D A^T - A^2 D - D A^T^2)/w^4``.
    """
    _require_stable(sys)
    a, d = sys.drift, sys.diffusion

    def sym(w):
        return _spectrum(a, d, w) + _spectrum(a, d, -w)

    width = max(float(np.min(np.abs(np.linalg.eigvals(a)))), 1e-3)
    points = [width, 10 * width] if 10 * width < omega_max else None
    val, _ = quad_vec(sym, 0.0, omega_max, epsabs=epsabs, epsrel=1e-12, points=points, limit=2000)
    total = val / (2 * np.pi)
    if tail_correction:
        w = omega_max
        c4 = a @ d @ a.T - a @ a @ d - d @ a.T @ a.T
        total = total + (d / w + c4 / (3 * w**3)) / np.pi
    return total


def quadrature_transform() -> np.ndarray:
    """8x16 map from phase space to (X5..X8, Y5..Y8): X = a + a+, Y = -i(a - a+)."""
    t = np.zeros((8, N_VARS), dtype=complex)
    for j in range(4):
        mode = 4 + j
        t[j, alpha_index(mode)] = 1.0
        t[j, plus_index(mode)] = 1.0
        t[4 + j, alpha_index(mode)] = -1j
        t[4 + j, plus_index(mode)] = 1j
    return t


def _output_covariance(s: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    t = quadrature_transform()
    sq = t @ s @ t.T
    sq = 0.5 * (sq + sq.T).real
    k = np.concatenate([kappa, kappa])
    return np.eye(8) + 2.0 * np.sqrt(np.outer(k, k)) * sq


def _drazin_regular_part(sys: LinearizedSystem) -> np.ndarray:
    """Zero-frequency spectrum with the neutral mode removed: A^D D A^D^T."""
    a = sys.drift
    r = sys.neutral_modes[:, 0]
    _, _, vh = np.linalg.svd(a.T)
    left = vh[-1].conj()
    left = left / (left @ r)
    proj = np.outer(r, left)
    drazin = np.linalg.inv(a + proj) - proj
    return drazin @ sys.diffusion @ drazin.T


@dataclass(frozen=True)
class SpectrumRow:
    omega: float
    vout: np.ndarray
    i56: float
    i67: float
    i78: float
    gains: GainVector

    @property
    def values(self) -> tuple[float, float, float]:
        return (self.i56, self.i67, self.i78)


@dataclass
class SpectrumTable:
    rows: list[SpectrumRow]

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def omega(self) -> np.ndarray:
        return np.array([r.omega for r in self.rows])

    @property
    def correlations(self) -> np.ndarray:
        """Shape (n, 3): I56, I67, I78 per row."""
        return np.array([r.values for r in self.rows]).reshape(-1, 3)


def output_covariance(sys: LinearizedSystem, omega: float) -> QuadCovariance:
    return QuadCovariance(_output_covariance(intracavity_spectrum(sys, omega), sys.params.kappa))


def output_vlf_spectrum(sys: LinearizedSystem, omega: float) -> SpectrumRow:
    """Optimized VLF correlations of the output fields at one frequency."""
    _require_stable(sys)
    omega = float(omega)
    if sys.neutral_modes.shape[1] and abs(omega) < ZERO_FREQUENCY:
        vout = _output_covariance(_drazin_regular_part(sys), sys.params.kappa)
        u = quadrature_transform() @ sys.neutral_modes[:, 0]
        u = u.real if np.linalg.norm(u.imag) <= 1e-9 * np.linalg.norm(u) else u.imag
        if np.linalg.norm(u[:4]) > 1e-9 * np.linalg.norm(u):
            raise DegenerateCovariance("phase-diffusion mode has an amplitude-quadrature part")
        res = vlf_optimized_singular(vout, u[4:])
    else:
        vout = _output_covariance(_spectrum(sys.drift, sys.diffusion, omega), sys.params.kappa)
        res = vlf_optimized(vout)
    return SpectrumRow(omega, vout, res.v56, res.v67, res.v78, res.gains)


def scan_frequency(sys: LinearizedSystem, omega_grid) -> SpectrumTable:
    omegas = [float(w) for w in np.asarray(omega_grid, dtype=float).ravel()]
    if not omegas:
        return SpectrumTable([])
    _require_stable(sys)
    return SpectrumTable(ordered_map(lambda w: output_vlf_spectrum(sys, w), omegas))


def below_branch_state(params: SystemParams) -> np.ndarray:
    """Pumps at eps/gamma, low modes empty; stationary for any drive."""
    alpha = np.zeros(8, dtype=complex)
    alpha[:4] = params.eps / params.gamma
    return alpha


def max_growth_rate(params: SystemParams) -> float:
    """Largest real part of the drift eigenvalues on the below-threshold branch."""
    a = drift_matrix(params, below_branch_state(params))
    return float(np.max(np.linalg.eigvals(a).real))


def locate_threshold(params: SystemParams, lo: float, hi: float, rtol: float = 1e-12) -> float:
    """Bisect the drive (applied to all pumps) where the growth rate crosses zero."""
    f_lo = max_growth_rate(params.replace(eps=lo))
    f_hi = max_growth_rate(params.replace(eps=hi))
    if f_lo >= 0 or f_hi <= 0:
        raise DomainError("bracket does not straddle the threshold")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if max_growth_rate(params.replace(eps=mid)) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class PumpScanRow(NamedTuple):
    ratio: float
    i56: float
    i67: float
    i78: float
    omega_at_min: tuple[float, float, float]
    gains: GainVector
    stable: bool
    error: str


def check_pump_ratios(ratios) -> list[float]:
    ratios = [float(r) for r in ratios]
    for r in ratios:
        if r < 0:
            raise DomainError(f"pump ratio {r} must be non-negative")
        if abs(r - 1.0) < THRESHOLD_EXCLUSION:
            raise DomainError(
                f"pump ratio {r} lies within {THRESHOLD_EXCLUSION} of threshold, "
                "where the linearized treatment does not apply")
    return ratios


def scan_pump(params: SystemParams, ratios, omega_grid) -> list[PumpScanRow]:
    """Minimum over the frequency grid of each output correlation, per pump ratio.

    ``gains`` are those at the frequency minimizing I56. Rows whose
    linearization is unstable carry NaNs and the error text instead of raising.
    """
    ratios = check_pump_ratios(ratios)
    grid = np.asarray(omega_grid, dtype=float)

    def one(r):
        p = params.with_pump_ratio(r)
        try:
            sys = linearize(p, steady_state(p))
            table = scan_frequency(sys, grid)
        except Unstable as exc:
            nan = float("nan")
            return PumpScanRow(r, nan, nan, nan, (nan, nan, nan), GainVector(nan, nan, nan, nan),
                               False, f"Unstable: {exc}")
        corr = table.correlations
        idx = np.argmin(corr, axis=0)
        return PumpScanRow(r, *(float(corr[idx[c], c]) for c in range(3)),
                           tuple(float(grid[i]) for i in idx), table.rows[idx[0]].gains, True, "")

    return ordered_map(one, ratios)
