"""
Cycle integrals computed two more ways, to check the closed form in
spectral.cycle_integral: by quadrature of the fading-memory kernel, and by
integrating the flux law directly with Runge-Kutta.
"""
import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InstabilityDetected
from .expsum import characteristic_roots
from .kernels import KERNEL_MAX_ORDER, flux_at_times, gradient_operator
from .model import (
    THERMO_MAX_ORDER,
    ConductivityTensor,
    CyclicHistory,
    LagPair,
    canonical_history,
    check_order,
    identity_tensor,
)
from .settings import _dbg
from .spectral import cycle_integral

TRAPEZOID_NODES = 8
BURN_IN_EFOLDS = 24.0
DEFAULT_STEPS_PER_PERIOD = 512
MIN_STEPS_PER_PERIOD = 256
BLOW_UP_FACTOR = 1e6
DISAGREEMENT_FLOOR = 1e-12
ODE_MAX_ORDER = 10


@dataclass(frozen=True)
class OracleComparison:
    n: int
    m: int
    lags: LagPair
    omega: float
    value_spectral: float
    value_kernel: float
    value_ode: float
    max_rel_disagreement: float


def max_rel_disagreement(*values: float) -> float:
    worst = 0.0
    for a, b in itertools.combinations(values, 2):
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), DISAGREEMENT_FLOOR))
    return worst


def kernel_cycle_integral(n: int, m: int, lags: LagPair, t: ConductivityTensor, h: CyclicHistory) -> float:
    """
    Integral of q . grad T over one period, q from the convolution form.
    The integrand is a trigonometric polynomial of degree 2, so the
    periodic trapezoid on 8 nodes is exact.
    """
    n = check_order("n", n, KERNEL_MAX_ORDER, minimum=1)
    times = [h.period * j / TRAPEZOID_NODES for j in range(TRAPEZOID_NODES)]
    fluxes = flux_at_times(n, m, lags, t, h, times)
    total = math.fsum(float(q @ h.value(tt)) for q, tt in zip(fluxes, times))
    return h.period / TRAPEZOID_NODES * total


def _default_burn_in(n: int, tau_q: float, omega: float) -> int:
    abscissa = abs(characteristic_roots(n).spectral_abscissa)
    period = 2.0 * math.pi / omega
    return max(1, math.ceil(BURN_IN_EFOLDS * tau_q / abscissa / period))


def burn_in_periods(n: int, tau_q: float, omega: float) -> int:
    """Whole periods after which a zero-start transient has lost 24 e-folds."""
    return _default_burn_in(n, tau_q, omega)


def _companion(n: int, tau_q: float) -> np.ndarray:
    # state rows are q, q', ..., q^(n-1); last row solves the flux law for q^(n)
    a = np.zeros((n, n))
    if n > 1:
        a[:-1, 1:] = np.eye(n - 1)
    lead = math.factorial(n) / tau_q ** n
    for j in range(n):
        a[-1, j] = -lead * tau_q ** j / math.factorial(j)
    return a


def ode_cycle_integral(n: int, m: int, lags: LagPair, t: ConductivityTensor, h: CyclicHistory,
                       burn_in_periods: Optional[int] = None,
                       steps_per_period: int = DEFAULT_STEPS_PER_PERIOD) -> float:
    """
    Classical RK4 on the order-n flux law from rest, forced by -k G_m[grad T].
    Returns the trapezoid integral of q . grad T over the period that follows
    the burn-in.
    """
    n = check_order("n", n, ODE_MAX_ORDER, minimum=1)
    m = check_order("m", m, THERMO_MAX_ORDER)
    if burn_in_periods is None:
        burn_in_periods = _default_burn_in(n, lags.tau_q, h.omega)
    if int(steps_per_period) != steps_per_period or steps_per_period < MIN_STEPS_PER_PERIOD:
        raise ValueError(f"steps_per_period must be an integer >= {MIN_STEPS_PER_PERIOD}, got {steps_per_period!r}")
    if int(burn_in_periods) != burn_in_periods or burn_in_periods < 1:
        raise ValueError(f"burn_in_periods must be an integer >= 1, got {burn_in_periods!r}")
    steps_per_period, burn_in_periods = int(steps_per_period), int(burn_in_periods)

    dt = h.period / steps_per_period
    a = _companion(n, lags.tau_q)
    lead = math.factorial(n) / lags.tau_q ** n

    # forcing on the half-step grid of one period; it repeats every period
    half_grid = [0.5 * dt * j for j in range(2 * steps_per_period + 1)]
    forcing = np.array([-t.k @ gradient_operator(h, m, lags.tau_T, tt) for tt in half_grid])
    scale = float(np.max(np.abs(forcing)))
    limit = BLOW_UP_FACTOR * max(scale, DISAGREEMENT_FLOOR)

    def rhs(y, f):
        dy = a @ y
        dy[-1] += lead * f
        return dy

    y = np.zeros((n, 3))
    total = 0.0
    for period in range(burn_in_periods + 1):
        last = period == burn_in_periods
        samples = []
        for i in range(steps_per_period):
            if last:
                samples.append(float(y[0] @ h.value(i * dt)))
            f0, f1, f2 = forcing[2 * i], forcing[2 * i + 1], forcing[2 * i + 2]
            k1 = rhs(y, f0)
            k2 = rhs(y + 0.5 * dt * k1, f1)
            k3 = rhs(y + 0.5 * dt * k2, f1)
            k4 = rhs(y + dt * k3, f2)
            y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        peak = float(np.max(np.abs(y[0])))
        if not math.isfinite(peak) or peak > limit:
            raise InstabilityDetected(
                f"|q| reached {peak:.3e} after {period + 1} period(s), forcing scale {scale:.3e} (n={n})"
            )
        if last:
            total = math.fsum(samples)
    _dbg(f"[debug] ode n={n} m={m}: {burn_in_periods} burn-in periods x {steps_per_period} steps", level=2)
    return dt * total


def compare_all(n: int, m: int, lags: LagPair, omega: float) -> OracleComparison:
    """Closed form, kernel quadrature and RK4 on the canonical history."""
    n = check_order("n", n, KERNEL_MAX_ORDER, minimum=1)
    m = check_order("m", m, THERMO_MAX_ORDER)
    t = identity_tensor()
    h = canonical_history(omega)

    spectral = cycle_integral(n, m, lags, t, h)
    kernel = kernel_cycle_integral(n, m, lags, t, h)
    ode = ode_cycle_integral(n, m, lags, t, h)
    worst = max_rel_disagreement(spectral, kernel, ode)
    _dbg(f"[debug] oracle ({n},{m}) r={lags.ratio:.6g} omega={omega:.6g}: "
         f"{spectral:.10g} / {kernel:.10g} / {ode:.10g} (rel {worst:.2e})")
    return OracleComparison(
        n=n,
        m=m,
        lags=lags,
        omega=float(omega),
        value_spectral=spectral,
        value_kernel=kernel,
        value_ode=ode,
        max_rel_disagreement=worst,
    )
