"""
Free relaxation of the flux law sum (tau_q^j / j!) q^(j) = 0 from arbitrary
initial data. Orders 1..4 relax; from order 5 on the solution grows.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from .errors import InvalidLags, StepTooLarge
from .model import check_order
from .settings import _dbg

SIMULATION_MAX_ORDER = 10
DEFAULT_HORIZON = 120.0
STEP_DIVISOR = 50.0
DECAY_THRESHOLD = 1e-9
BLOW_UP_FACTOR = 1e6
MIN_PEAKS = 3


class DecayOutcome(str, Enum):
    DECAYED = "Decayed"
    BLEW_UP = "BlewUp"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class Trajectory:
    n: int
    tau_q: float
    times: np.ndarray
    values: np.ndarray
    fitted_rate: float
    outcome: DecayOutcome


def _propagator(n: int, step: float) -> np.ndarray:
    # classical RK4 applied to y' = A y collapses to a fixed matrix, state z_j = tau_q^j d^j q / dt^j
    a = np.zeros((n, n))
    if n > 1:
        a[:-1, 1:] = np.eye(n - 1)
    for j in range(n):
        a[-1, j] = -math.factorial(n) / math.factorial(j)
    ha = step * a
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    return np.eye(n) + ha + ha2 / 2.0 + ha3 / 6.0 + ha3 @ ha / 24.0


def _fit_rate(times: np.ndarray, values: np.ndarray) -> float:
    """Slope of log|q| over the final third; through the peaks when there are enough."""
    start = (2 * len(times)) // 3
    t = times[start:]
    mag = np.abs(values[start:])
    peaks, _ = find_peaks(mag)
    if len(peaks) >= MIN_PEAKS:
        t, mag = t[peaks], mag[peaks]
    keep = mag > 0.0
    if np.count_nonzero(keep) < 2:
        return float("nan")
    slope, _ = np.polyfit(t[keep], np.log(mag[keep]), 1)
    return float(slope)


def free_decay(n: int, tau_q: float, initial_conditions: Sequence[float],
               horizon: Optional[float] = None, step: Optional[float] = None) -> Trajectory:
    """
    Integrate from initial_conditions = (q, q', ..., q^(n-1)) at t = 0.
    Horizon defaults to 120 tau_q and step to tau_q / 50; a larger step is
    refused.
    """
    n = check_order("n", n, SIMULATION_MAX_ORDER, minimum=1)
    tau_q = float(tau_q)
    if not (math.isfinite(tau_q) and tau_q > 0.0):
        raise InvalidLags(f"tau_q must be finite and > 0, got {tau_q!r}")
    horizon = DEFAULT_HORIZON * tau_q if horizon is None else float(horizon)
    step = tau_q / STEP_DIVISOR if step is None else float(step)
    if not (math.isfinite(horizon) and horizon > 0.0):
        raise ValueError(f"horizon must be finite and > 0, got {horizon!r}")
    if not step > 0.0:
        raise ValueError(f"step must be > 0, got {step!r}")
    if step > tau_q / STEP_DIVISOR * (1.0 + 1e-12):
        raise StepTooLarge(f"step {step:.6g} exceeds tau_q/{STEP_DIVISOR:g} = {tau_q / STEP_DIVISOR:.6g}")

    ic = np.asarray(initial_conditions, dtype=float).reshape(-1)
    if ic.shape != (n,):
        raise ValueError(f"need {n} initial values (q and its first {n - 1} derivatives), got {ic.size}")
    # work in x = t / tau_q
    z = ic * tau_q ** np.arange(n)
    initial_scale = float(np.max(np.abs(z)))
    if initial_scale == 0.0 or not math.isfinite(initial_scale):
        raise ValueError("initial conditions must be finite and not all zero")

    prop = _propagator(n, step / tau_q)
    count = int(math.ceil(horizon / step - 1e-9))
    values = np.empty(count + 1)
    values[0] = z[0]
    outcome = DecayOutcome.INCONCLUSIVE
    last = count
    for i in range(1, count + 1):
        z = prop @ z
        values[i] = z[0]
        if not math.isfinite(z[0]) or abs(z[0]) > BLOW_UP_FACTOR * initial_scale:
            outcome = DecayOutcome.BLEW_UP
            last = i
            break
    else:
        if float(np.max(np.abs(z))) < DECAY_THRESHOLD * initial_scale:
            outcome = DecayOutcome.DECAYED

    times = step * np.arange(last + 1)
    values = values[: last + 1]
    rate = _fit_rate(times, values)
    _dbg(f"[debug] free decay n={n}: {outcome.value} after {last} steps, fitted rate {rate:.6g}", level=2)
    return Trajectory(n=n, tau_q=tau_q, times=times, values=values, fitted_rate=rate, outcome=outcome)


def random_initial_conditions(n: int, rng: np.random.Generator, tau_q: float = 1.0) -> np.ndarray:
    """Standard normal state in x = t / tau_q units, returned in physical derivatives."""
    n = check_order("n", n, SIMULATION_MAX_ORDER, minimum=1)
    return rng.standard_normal(n) / float(tau_q) ** np.arange(n)
