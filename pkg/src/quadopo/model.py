"""Physical parameters and coupling topology of the four-pump ring.

Mode numbering follows the physical labels: pumps are 1..4, low-frequency
modes are 5..8. Internally arrays are zero-based, so pump ``k`` (0..3) drives
the low-mode pair ``PUMP_TO_PAIR[k]`` given as zero-based low-mode indices
(0..3 meaning modes 5..8).

Every quantity is in rate units relative to the low-mode loss ``kappa``.

Threshold convention
--------------------
Each pump drives *two* downconversion processes (the ring closes on itself),
so the symmetric oscillation threshold is ``eps_c = gamma * kappa / (2 * chi)``.
This is half the familiar non-degenerate OPO value; do not "fix" it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np

from .errors import DomainError, SymmetryError

#: pump index -> (low mode a, low mode b), both zero-based within the low block
PUMP_TO_PAIR = MappingProxyType({0: (0, 1), 1: (1, 2), 2: (2, 3), 3: (3, 0)})

#: same map in the physical 1-based labels
PUMP_TO_PAIR_LABELS = MappingProxyType({1: (5, 6), 2: (6, 7), 3: (7, 8), 4: (8, 5)})

PARAM_KEYS = ("chi", "eps", "gamma", "kappa")


def _as4(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(4, float(arr))
    if arr.shape != (4,):
        raise DomainError(f"{name} must be a scalar or have four entries, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemParams:
    """Couplings, drives and losses for the four concurrent processes.

    Scalars are broadcast to all four entries. Arrays are stored read-only.

    Parameters
    ----------
    chi : float or array_like of 4
        Nonlinear couplings; ``chi[k]`` couples pump ``k+1`` to its pair.
    eps : float or array_like of 4
        Real, non-negative pump drive amplitudes.
    gamma : float or array_like of 4
        Pump-mode amplitude loss rates.
    kappa : float or array_like of 4
        Low-mode amplitude loss rates.
    """

    chi: np.ndarray
    eps: np.ndarray
    gamma: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        for name in PARAM_KEYS:
            object.__setattr__(self, name, _as4(getattr(self, name), name))

    @property
    def is_symmetric(self) -> bool:
        return all(np.all(getattr(self, n) == getattr(self, n)[0]) for n in PARAM_KEYS)

    @property
    def losses(self) -> np.ndarray:
        """All eight amplitude loss rates, pumps first."""
        return np.concatenate([self.gamma, self.kappa])

    def replace(self, **changes) -> "SystemParams":
        values = {n: getattr(self, n) for n in PARAM_KEYS}
        values.update(changes)
        return SystemParams(**values)

    def with_pump_ratio(self, ratio: float) -> "SystemParams":
        """Symmetric copy with every drive set to ``ratio * eps_c``."""
        return self.replace(eps=ratio * threshold_pump(self))

    def as_dict(self) -> dict[str, float]:
        out = {}
        for name in PARAM_KEYS:
            for k, v in enumerate(getattr(self, name), start=1):
                out[f"{name}{k}"] = float(v)
        return out

    def __eq__(self, other):
        if not isinstance(other, SystemParams):
            return NotImplemented
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in PARAM_KEYS)

    def __hash__(self):
        return hash(tuple(tuple(getattr(self, n)) for n in PARAM_KEYS))


@dataclass(frozen=True)
class CouplingTopology:
    """The fixed 4-cycle over the low modes: 5-6-7-8-5."""

    pump_to_pair: MappingProxyType = field(default=PUMP_TO_PAIR)

    def low_mode_degree(self) -> np.ndarray:
        deg = np.zeros(4, dtype=int)
        for a, b in self.pump_to_pair.values():
            deg[a] += 1
            deg[b] += 1
        return deg

    def pumps_touching(self, low: int) -> tuple[int, ...]:
        return tuple(k for k, pair in self.pump_to_pair.items() if low in pair)


TOPOLOGY = CouplingTopology()


def validate(params: SystemParams) -> SystemParams:
    """Return ``params`` unchanged, or raise DomainError on the first violation."""
    for name in PARAM_KEYS:
        arr = getattr(params, name)
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"{name}: entries must be finite")
    for name in ("gamma", "kappa"):
        arr = getattr(params, name)
        if np.any(arr <= 0):
            k = int(np.argmax(arr <= 0)) + 1
            raise DomainError(f"loss rate {name}{k}={arr[k - 1]} must be strictly positive")
    if np.any(params.chi < 0):
        k = int(np.argmax(params.chi < 0)) + 1
        raise DomainError(f"coupling sign: chi{k}={params.chi[k - 1]} must be non-negative")
    if np.any(params.eps < 0):
        k = int(np.argmax(params.eps < 0)) + 1
        raise DomainError(f"drive sign: eps{k}={params.eps[k - 1]} must be non-negative")
    return params


def require_symmetric(params: SystemParams, what: str = "this closed form") -> None:
    if not params.is_symmetric:
        raise SymmetryError(f"{what} is only defined for the fully symmetric system")


def threshold_pump(params: SystemParams) -> float:
    """Critical drive ``gamma * kappa / (2 * chi)`` of the symmetric system."""
    validate(params)
    require_symmetric(params, "the threshold formula")
    chi = params.chi[0]
    if chi == 0:
        return float("inf")
    return float(params.gamma[0] * params.kappa[0] / (2.0 * chi))


def load_config(path) -> dict[str, float]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, float] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            values[key] = float(val)
        except ValueError:
            raise DomainError(f"{path}:{lineno}: {key!r} is not a number: {val!r}") from None
    return values


def params_from_mapping(values: dict[str, float], base: SystemParams | None = None) -> SystemParams:
    """Build parameters from shorthand (``chi``) and per-mode (``chi3``) keys.

    Per-mode keys override the shorthand. Keys missing from ``values`` are taken
    from ``base`` when given.
    """
    known = set(PARAM_KEYS) | {f"{n}{k}" for n in PARAM_KEYS for k in range(1, 5)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise DomainError(f"unknown parameter keys: {', '.join(unknown)}")
    fields = {}
    for name in PARAM_KEYS:
        if base is not None:
            arr = np.array(getattr(base, name), dtype=float)
        elif name in values or all(f"{name}{k}" in values for k in range(1, 5)):
            arr = np.full(4, np.nan)
        else:
            raise DomainError(f"missing parameter {name!r} (or {name}1..{name}4)")
        if name in values:
            arr[:] = values[name]
        for k in range(1, 5):
            if f"{name}{k}" in values:
                arr[k - 1] = values[f"{name}{k}"]
        if np.any(np.isnan(arr)):
            raise DomainError(f"parameter {name!r} is only partially specified")
        fields[name] = arr
    return validate(SystemParams(**fields))
