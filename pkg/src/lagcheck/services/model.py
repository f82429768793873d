from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import (
    InvalidHistory,
    InvalidLags,
    NotPositiveDefinite,
    NotSymmetric,
    OrderOutOfRange,
)

THERMO_MAX_ORDER = 4
STABILITY_MAX_ORDER = 50
SYMMETRY_RTOL = 1e-12


class Mode(str, Enum):
    STRICT = "strict"
    WEAK = "weak"


class VerdictKind(str, Enum):
    CONSISTENT_STRICT = "ConsistentStrict"
    CONSISTENT_WEAK = "ConsistentWeak"
    INCONSISTENT = "Inconsistent"


def _is_exact_int(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, (bool, np.bool_))


def check_order(name: str, value, maximum: int, minimum: int = 0) -> int:
    if not _is_exact_int(value):
        raise OrderOutOfRange(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum or value > maximum:
        raise OrderOutOfRange(f"{name}={value} outside {minimum}..{maximum}")
    return value


@dataclass(frozen=True)
class ModelOrder:
    """Taylor truncation orders: n on the heat-flux side, m on the gradient side."""
    n: int
    m: int

    def __post_init__(self):
        object.__setattr__(self, "n", check_order("n", self.n, STABILITY_MAX_ORDER))
        object.__setattr__(self, "m", check_order("m", self.m, STABILITY_MAX_ORDER))

    def require_thermo(self) -> "ModelOrder":
        check_order("n", self.n, THERMO_MAX_ORDER)
        check_order("m", self.m, THERMO_MAX_ORDER)
        return self

    def swapped(self) -> "ModelOrder":
        return ModelOrder(self.m, self.n)


@dataclass(frozen=True)
class LagPair:
    """Phase lags in seconds. A lag paired with order 0 is kept but never used."""
    tau_q: float
    tau_T: float

    def __post_init__(self):
        for name in ("tau_q", "tau_T"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise InvalidLags(f"{name} must be a number, got {value!r}") from None
            if not math.isfinite(value) or value <= 0.0:
                raise InvalidLags(f"{name} must be finite and > 0, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def ratio(self) -> float:
        return self.tau_T / self.tau_q

    def scaled(self, c: float) -> "LagPair":
        return LagPair(self.tau_q * c, self.tau_T * c)

    def swapped(self) -> "LagPair":
        return LagPair(self.tau_T, self.tau_q)

    @classmethod
    def from_ratio(cls, r: float, tau_q: float = 1.0) -> "LagPair":
        return cls(tau_q, r * tau_q)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ConductivityTensor:
    k: np.ndarray
    K: np.ndarray


def validate_tensor(k) -> ConductivityTensor:
    """
    Check symmetry and positive-definiteness of a 3x3 conductivity matrix
    and attach its inverse.
    """
    a = np.asarray(k, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"conductivity must be a 3x3 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("conductivity entries must be finite")

    scale = float(np.max(np.abs(a)))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > SYMMETRY_RTOL * scale:
        raise NotSymmetric(f"max|k_ij - k_ji| = {asym:.3e} exceeds {SYMMETRY_RTOL:g} * max|k_ij|")

    a = 0.5 * (a + a.T)
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        lowest = float(np.linalg.eigvalsh(a)[0])
        raise NotPositiveDefinite(f"smallest eigenvalue {lowest:.6g} is not positive") from None

    inv = np.linalg.inv(a)
    inv = 0.5 * (inv + inv.T)
    return ConductivityTensor(k=_frozen(a), K=_frozen(inv))


def identity_tensor() -> ConductivityTensor:
    return validate_tensor(np.eye(3))


@dataclass(frozen=True, eq=False)
class CyclicHistory:
    """
    Sinusoidal program f cos(wt) + g sin(wt). Used for temperature gradients
    and, in the flux-prescribed form, for heat-flux amplitudes (h, l).
    """
    f: np.ndarray
    g: np.ndarray
    omega: float

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float).reshape(-1)
        g = np.asarray(self.g, dtype=float).reshape(-1)
        if f.shape != (3,) or g.shape != (3,):
            raise InvalidHistory("amplitudes f and g must be 3-vectors")
        if not (math.isfinite(self.omega) and self.omega > 0.0):
            raise InvalidHistory(f"omega must be finite and > 0, got {self.omega!r}")
        if float(f @ f + g @ g) <= 0.0:
            raise InvalidHistory("null cycle: f.f + g.g must be positive")
        object.__setattr__(self, "f", _frozen(f))
        object.__setattr__(self, "g", _frozen(g))
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def phasor(self) -> np.ndarray:
        # value(t) = Re(phasor * exp(i w t))
        return self.f - 1j * self.g

    def value(self, t: float) -> np.ndarray:
        return self.derivative(0, t)

    def derivative(self, order: int, t: float) -> np.ndarray:
        c = math.cos(self.omega * t)
        s = math.sin(self.omega * t)
        # quarter-turn table keeps the sign pattern exact
        quarter = order % 4
        if quarter == 0:
            out = self.f * c + self.g * s
        elif quarter == 1:
            out = -self.f * s + self.g * c
        elif quarter == 2:
            out = -self.f * c - self.g * s
        else:
            out = self.f * s - self.g * c
        return out * self.omega ** order


def canonical_history(omega: float) -> CyclicHistory:
    return CyclicHistory(f=np.array([1.0, 0.0, 0.0]), g=np.zeros(3), omega=omega)


def quadratic_form(t: ConductivityTensor, h: CyclicHistory) -> float:
    """k_ij f_i f_j + k_ij g_i g_j, the amplitude factor of every cycle integral."""
    return float(h.f @ t.k @ h.f + h.g @ t.k @ h.g)


def dual_quadratic_form(t: ConductivityTensor, h: CyclicHistory) -> float:
    """K_ij h_i h_j + K_ij l_i l_j for a flux-valued cycle."""
    return float(h.f @ t.K @ h.f + h.g @ t.K @ h.g)


@dataclass(frozen=True)
class ConsistencyVerdict:
    kind: VerdictKind
    witness_omega: Optional[float] = field(default=None, compare=False)
    witness_u: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        strict = self.kind is VerdictKind.CONSISTENT_STRICT
        if strict and self.witness_omega is not None:
            raise ValueError("a strict verdict carries no witness")
        if not strict:
            if self.witness_omega is None or not self.witness_omega > 0.0:
                raise ValueError(f"{self.kind.value} needs a positive witness frequency")

    def is_consistent(self, mode: Mode = Mode.WEAK) -> bool:
        if self.kind is VerdictKind.CONSISTENT_STRICT:
            return True
        return Mode(mode) is Mode.WEAK and self.kind is VerdictKind.CONSISTENT_WEAK
