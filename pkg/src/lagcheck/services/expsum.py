"""
Partial sums of the exponential series e_n(z) = sum_{k<=n} z^k / k!.

Roots are reported in x = tau_q * lambda units. The characteristic
polynomial of an order-n flux law is exactly e_n(x).
"""
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .errors import ConvergenceFailure
from .model import STABILITY_MAX_ORDER, check_order
from .settings import _dbg

MARGIN = 1e-9
RESIDUAL_TOL = 1e-10
REAL_TOL = 1e-9
EK_RADIUS = 1.0
MIN_CURVE_POINTS = 64
DEFAULT_CURVE_POINTS = 2048

_NEWTON_MAX_ITER = 200
_DUPLICATE_TOL = 1e-8
# past this order double-precision eigenvalues only seed a multiprecision pass
DOUBLE_SEED_MAX_ORDER = 20


class StabilityClass(str, Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class StabilityReport:
    n: int
    roots: Tuple[complex, ...]
    spectral_abscissa: float
    ek_satisfied: bool
    real_root_count: int
    classification: StabilityClass
    max_residual: float

    def roots_lambda(self, tau_q: float) -> Tuple[complex, ...]:
        return tuple(x / tau_q for x in self.roots)


@dataclass(frozen=True, eq=False)
class SzegoSample:
    n: int
    scaled_roots: Tuple[complex, ...]
    curve_points: np.ndarray
    distances: Tuple[float, ...]
    max_distance: float


# ---------------- Evaluation ----------------

def eval_partial_sum(n: int, z):
    """
    Horner form 1 + z/1 (1 + z/2 (1 + ... (1 + z/n))). Works for Python
    scalars, numpy arrays and mpmath numbers alike.
    """
    n = check_order("n", n, maximum=10_000)
    s = 1
    for k in range(n, 0, -1):
        s = 1 + s * z / k
    return s


def partial_sum_coefficients(n: int) -> List[int]:
    """Monic integer coefficients of n! * e_n, highest power first."""
    n = check_order("n", n, maximum=10_000)
    out = []
    c = 1
    for k in range(n, -1, -1):
        out.append(c)
        c *= max(k, 1)
    # out[j] = n!/(n-j)!  is the coefficient of x^(n-j)
    return out


def _scaled_monic_exact(n: int) -> List[Fraction]:
    # e_n(n y) made monic in y; keeps the companion matrix well balanced
    return [Fraction(c, n ** j) for j, c in enumerate(partial_sum_coefficients(n))]


def _scaled_monic(n: int) -> np.ndarray:
    return np.array([float(c) for c in _scaled_monic_exact(n)], dtype=float)


def _work_dps(n: int) -> int:
    return max(30, 2 * n)


def _outside_unit_disk(roots: Sequence[complex]) -> bool:
    return all(abs(x) >= EK_RADIUS - MARGIN for x in roots)


def _count_real(roots: Sequence[complex]) -> int:
    return sum(1 for x in roots if abs(x.imag) <= REAL_TOL)


# ---------------- Root finding ----------------

def _companion_roots(n: int) -> np.ndarray:
    a = _scaled_monic(n)
    comp = np.zeros((n, n), dtype=float)
    comp[0, :] = -a[1:]
    if n > 1:
        comp[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(comp) * n


def _newton_polish(n: int, guesses: Sequence[complex]) -> List[complex]:
    # e_n' = e_{n-1}
    dps = _work_dps(n)
    polished = []
    with mpmath.workdps(dps):
        eps = mpmath.mpf(10) ** (-(dps // 2))
        for x0 in guesses:
            z = mpmath.mpc(x0)
            for _ in range(_NEWTON_MAX_ITER):
                step = eval_partial_sum(n, z) / eval_partial_sum(n - 1, z)
                z -= step
                if abs(step) <= eps * max(1, abs(z)):
                    break
            else:
                raise ConvergenceFailure(f"Newton polishing did not settle for n={n} near {x0}")
            polished.append(complex(z))
    return polished


def _symmetrize(roots: List[complex]) -> List[complex]:
    reals = []
    upper = []
    lower = []
    for x in roots:
        if abs(x.imag) <= REAL_TOL * max(1.0, abs(x)):
            reals.append(complex(x.real, 0.0))
        elif x.imag > 0:
            upper.append(x)
        else:
            lower.append(x)
    if len(upper) != len(lower):
        raise ConvergenceFailure(f"roots are not closed under conjugation ({len(upper)} vs {len(lower)})")

    out = list(reals)
    remaining = list(lower)
    for x in upper:
        j = min(range(len(remaining)), key=lambda i: abs(remaining[i] - x.conjugate()))
        y = remaining.pop(j)
        mu = 0.5 * (x + y.conjugate())
        out.extend([mu, mu.conjugate()])
    return out


def _residual(n: int, x: complex) -> float:
    with mpmath.workdps(_work_dps(n)):
        value = abs(eval_partial_sum(n, mpmath.mpc(x)))
        return float(value / eval_partial_sum(n, mpmath.mpf(abs(x))))


@lru_cache(maxsize=None)
def _roots_for(n: int) -> Tuple[complex, ...]:
    guesses = _companion_roots(n)
    if n > DOUBLE_SEED_MAX_ORDER:
        start = guesses / n
        if _min_separation(start) <= _DUPLICATE_TOL:
            start = None
        guesses = aberth_roots(_scaled_monic_exact(n), start=start, dps=_work_dps(n)) * n
        _dbg(f"[debug] e_{n}: seeds refined at {_work_dps(n)} digits", level=2)
    roots = _symmetrize(_newton_polish(n, guesses))
    roots.sort(key=lambda x: (x.real, x.imag))

    for i in range(len(roots) - 1):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) <= _DUPLICATE_TOL * max(1.0, abs(roots[i])):
                raise ConvergenceFailure(f"polishing collapsed two roots of e_{n} onto {roots[i]}")
    return tuple(roots)


def characteristic_roots(n: int) -> StabilityReport:
    """
    All n roots of e_n(x) = 0 with stability summary.

    The residual is |e_n(x)| relative to sum |x|^k/k!, the size of the terms
    being cancelled. For n near 50 the roots reach |x| ~ 20 and an absolute
    bound cannot be met in double precision.
    """
    n = check_order("n", n, STABILITY_MAX_ORDER, minimum=1)
    roots = _roots_for(n)

    max_residual = max(_residual(n, x) for x in roots)
    if max_residual > RESIDUAL_TOL:
        raise ConvergenceFailure(f"residual {max_residual:.3e} exceeds {RESIDUAL_TOL:g} for n={n}")

    abscissa = max(x.real for x in roots)
    if abscissa < -MARGIN:
        cls = StabilityClass.ASYMPTOTICALLY_STABLE
    elif abscissa > MARGIN:
        cls = StabilityClass.UNSTABLE
    else:
        cls = StabilityClass.MARGINAL

    report = StabilityReport(
        n=n,
        roots=roots,
        spectral_abscissa=float(abscissa),
        ek_satisfied=_outside_unit_disk(roots),
        real_root_count=_count_real(roots),
        classification=cls,
        max_residual=max_residual,
    )
    _dbg(f"[debug] e_{n}: abscissa={abscissa:.6g} class={cls.value} residual={max_residual:.2e}", level=2)
    return report


def _min_separation(z: np.ndarray) -> float:
    diff = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(diff, np.inf)
    return float(diff.min()) if z.size > 1 else math.inf


def _cauchy_start(deg: int, radius: float) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(deg) / deg + 0.4
    return radius * np.exp(1j * angles)


def aberth_roots(coefficients: Sequence, tol: float = 1e-13, max_iter: int = 500,
                 start: Optional[Sequence[complex]] = None, dps: Optional[int] = None) -> np.ndarray:
    """
    Simultaneous Aberth-Ehrlich iteration. Coefficients are highest power
    first. Starting points sit on a circle of Cauchy-bound radius unless
    `start` is given.

    With `dps` the sweeps run in mpmath at that many digits and settle at
    10**-(dps // 2); coefficients may then be exact Fractions.
    """
    if dps is not None:
        return _aberth_mp(coefficients, start, int(dps), max_iter)

    c = np.asarray(coefficients, dtype=complex)
    if c.ndim != 1 or c.size < 2 or c[0] == 0:
        raise ValueError("need a polynomial of degree >= 1 with non-zero leading coefficient")
    c = c / c[0]
    deg = c.size - 1
    dc = np.polyder(c)
    z = _start_points(deg, 1.0 + float(np.max(np.abs(c[1:]))), start)

    for it in range(max_iter):
        ratio = np.polyval(c, z) / np.polyval(dc, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        w = ratio / (1.0 - ratio * inv.sum(axis=1))
        z = z - w
        if np.max(np.abs(w)) <= tol * max(1.0, float(np.max(np.abs(z)))):
            _dbg(f"[debug] aberth: degree {deg} settled after {it + 1} sweeps", level=2)
            break
    else:
        _dbg(f"[debug] aberth: degree {deg} hit max_iter={max_iter}")

    if not np.all(np.isfinite(z)):
        raise ConvergenceFailure(f"Aberth iteration diverged for degree {deg}")
    return z


def _start_points(deg: int, radius: float, start) -> np.ndarray:
    if start is None:
        return _cauchy_start(deg, radius)
    z = np.array(start, dtype=complex)
    if z.shape != (deg,):
        raise ValueError(f"need {deg} starting points, got {z.size}")
    return z


def _to_mp(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpmathify(x)


def _aberth_mp(coefficients: Sequence, start, dps: int, max_iter: int) -> np.ndarray:
    with mpmath.workdps(dps):
        c = [_to_mp(x) for x in coefficients]
        if len(c) < 2 or c[0] == 0:
            raise ValueError("need a polynomial of degree >= 1 with non-zero leading coefficient")
        c = [x / c[0] for x in c]
        deg = len(c) - 1
        dc = [x * (deg - i) for i, x in enumerate(c[:-1])]
        radius = 1.0 + float(max(abs(x) for x in c[1:]))
        z = [mpmath.mpc(complex(x)) for x in _start_points(deg, radius, start)]
        eps = mpmath.mpf(10) ** (-(dps // 2))

        # Gauss-Seidel sweeps: each update sees the ones before it
        for it in range(max_iter):
            biggest = mpmath.mpf(0)
            for i in range(deg):
                ratio = mpmath.polyval(c, z[i]) / mpmath.polyval(dc, z[i])
                pull = mpmath.fsum(1 / (z[i] - z[j]) for j in range(deg) if j != i)
                w = ratio / (1 - ratio * pull)
                z[i] -= w
                biggest = max(biggest, abs(w))
            if biggest <= eps * max(1, max(abs(x) for x in z)):
                _dbg(f"[debug] aberth: degree {deg} settled after {it + 1} sweeps at {dps} digits", level=2)
                break
        else:
            raise ConvergenceFailure(f"Aberth iteration did not settle for degree {deg} at {dps} digits")
        return np.array([complex(x) for x in z])


def cross_check(n: int) -> float:
    """
    Largest distance between companion/Newton roots and Aberth roots
    started from the Cauchy circle, relative to max(1, |x|).
    """
    report = characteristic_roots(n)
    ours = np.array(report.roots)
    if n > DOUBLE_SEED_MAX_ORDER:
        theirs = aberth_roots(_scaled_monic_exact(n), dps=_work_dps(n)) * n
    else:
        theirs = aberth_roots(_scaled_monic(n)) * n

    cost = np.abs(ours[:, None] - theirs[None, :])
    rows, cols = linear_sum_assignment(cost)
    rel = cost[rows, cols] / np.maximum(1.0, np.abs(ours[rows]))
    return float(np.max(rel))


def enestrom_kakeya_certificate(report: StabilityReport) -> bool:
    return _outside_unit_disk(report.roots)


def real_root_parity(report: StabilityReport) -> int:
    return _count_real(report.roots)


# ---------------- Szego curve ----------------

def _szego_radius(theta: float) -> float:
    # ln(rho) + 1 - rho cos(theta) increases on (0, 1]; it is <= -1.2 at 0.1 and >= 0 at 1
    cos_t = math.cos(theta)
    if 1.0 - cos_t == 0.0:
        return 1.0
    return brentq(lambda rho: math.log(rho) + 1.0 - rho * cos_t, 0.1, 1.0, xtol=1e-12, rtol=4 * np.finfo(float).eps)


@lru_cache(maxsize=8)
def _curve(num_points: int) -> Tuple[complex, ...]:
    thetas = -math.pi + 2.0 * math.pi * np.arange(1, num_points + 1) / num_points
    radii = np.array([_szego_radius(float(t)) for t in thetas])
    return tuple(complex(z) for z in radii * np.exp(1j * thetas))


def szego_curve(num_points: int = DEFAULT_CURVE_POINTS) -> np.ndarray:
    """Points of |z exp(1 - z)| = 1 inside the closed unit disk, angles uniform in (-pi, pi]."""
    if int(num_points) < MIN_CURVE_POINTS:
        raise ValueError(f"num_points must be >= {MIN_CURVE_POINTS}, got {num_points}")
    return np.array(_curve(int(num_points)))


def szego_sample(n: int, num_curve_points: int = DEFAULT_CURVE_POINTS) -> SzegoSample:
    report = characteristic_roots(n)
    curve = szego_curve(num_curve_points)
    scaled = np.array(report.roots) / report.n
    distances = np.min(np.abs(scaled[:, None] - curve[None, :]), axis=1)
    return SzegoSample(
        n=report.n,
        scaled_roots=tuple(complex(z) for z in scaled),
        curve_points=curve,
        distances=tuple(float(d) for d in distances),
        max_distance=float(np.max(distances)),
    )
