"""
Fading-memory kernels of the flux laws n = 1..4.

An order-n flux law sum (tau_q^j / j!) d^j q = -k G_m[grad T] inverts to
q(t) = -int_0^inf kernel(s) k G_m[grad T](t - s) ds, where the kernel is the
resolvent of e_n and G_m is the gradient-side operator of order m.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, quad_vec

from .errors import InvalidHistory, InvalidLags, QuadratureFailure, TruncationFailure
from .expsum import characteristic_roots, eval_partial_sum
from .model import (
    THERMO_MAX_ORDER,
    ConductivityTensor,
    CyclicHistory,
    LagPair,
    check_order,
)
from .settings import _dbg

KERNEL_MAX_ORDER = 4
TRANSFORM_FLOOR = 1e-16
FLUX_FLOOR = 1e-12
MAX_TRUNCATION = 200.0
QUAD_LIMIT = 2000

# Rounded constants as they appear in the literature; arithmetic uses the
# values recomputed from the roots.
PUBLISHED_PARAMETERS: Dict[int, Dict[str, float]] = {
    3: {"alpha": 1.5961, "gamma": 0.70196, "delta": 1.8073},
    4: {"alpha": 0.27056, "beta": 2.5048, "gamma": 1.7294, "delta": 0.88897, "Delta": -22.165},
}


class GradientHistory(Protocol):
    def derivative(self, order: int, t: float) -> np.ndarray: ...


@dataclass(frozen=True)
class CallableHistory:
    """
    Temperature-gradient program given by callables: derivatives[j](t) is
    the j-th time derivative, as a 3-vector.
    """
    derivatives: Tuple[Callable[[float], Sequence[float]], ...]

    def derivative(self, order: int, t: float) -> np.ndarray:
        if order >= len(self.derivatives):
            raise InvalidHistory(f"derivative of order {order} requested, only {len(self.derivatives)} supplied")
        out = np.asarray(self.derivatives[order](t), dtype=float).reshape(-1)
        if out.shape != (3,):
            raise InvalidHistory(f"derivative {order} must return a 3-vector")
        return out


@dataclass(frozen=True, eq=False)
class MemoryKernel:
    n: int
    tau_q: float
    parameters: Dict[str, float] = field(default_factory=dict)
    normalization: float = 1.0

    @property
    def decay_rate(self) -> float:
        """Slowest decay among the exponentials, in 1/tau_q units."""
        p = self.parameters
        if self.n <= 2:
            return p["alpha"]
        return min(p["alpha"], p["gamma"])

    def truncation_point(self, floor: float = TRANSFORM_FLOOR) -> float:
        return self.tau_q * math.log(1.0 / floor) / self.decay_rate

    def drift_from_published(self) -> float:
        published = PUBLISHED_PARAMETERS.get(self.n)
        if not published:
            return 0.0
        return max(abs(self.parameters[k] - v) for k, v in published.items())


def delta_from_parameters(alpha: float, beta: float, gamma: float, delta: float) -> float:
    """The n = 4 normalization denominator written in the root parameters."""
    g_a = gamma - alpha
    bracket = (
        g_a ** 2 * (3 * alpha ** 2 + 3 * gamma ** 2 - beta ** 2 - delta ** 2)
        + (beta ** 2 - delta ** 2) * (3 * gamma ** 2 - 3 * alpha ** 2 + beta ** 2 - delta ** 2)
    )
    return 3 * alpha * beta ** 2 - 3 * gamma * delta ** 2 + gamma ** 3 - alpha ** 3 - bracket / (2.0 * g_a)


def _parameters_from_roots(n: int) -> Dict[str, float]:
    roots = characteristic_roots(n).roots
    upper = sorted((x for x in roots if x.imag > 0), key=lambda x: -x.real)
    reals = [x for x in roots if x.imag == 0.0]
    if n == 1:
        return {"alpha": -reals[0].real}
    if n == 2:
        return {"alpha": -upper[0].real, "beta": upper[0].imag}
    if n == 3:
        return {"alpha": -reals[0].real, "gamma": -upper[0].real, "delta": upper[0].imag}
    # slow pair first: alpha +- i beta, then gamma +- i delta
    p = {
        "alpha": -upper[0].real,
        "beta": upper[0].imag,
        "gamma": -upper[1].real,
        "delta": upper[1].imag,
    }
    p["Delta"] = delta_from_parameters(p["alpha"], p["beta"], p["gamma"], p["delta"])
    return p


def build_kernel(n: int, tau_q: float) -> MemoryKernel:
    n = check_order("n", n, KERNEL_MAX_ORDER, minimum=1)
    tau_q = float(tau_q)
    if not (math.isfinite(tau_q) and tau_q > 0.0):
        raise InvalidLags(f"tau_q must be finite and > 0, got {tau_q!r}")
    p = _parameters_from_roots(n)
    if n == 1:
        c = 1.0 / tau_q
    elif n == 2:
        c = 2.0 / (tau_q * p["beta"])
    elif n == 3:
        c = 6.0 / (tau_q * ((p["alpha"] - p["gamma"]) ** 2 + p["delta"] ** 2))
    else:
        c = 24.0 / (tau_q * p["Delta"])
    return MemoryKernel(n=n, tau_q=tau_q, parameters=p, normalization=c)


def _kappa(s, p):
    a, g, d = p["alpha"], p["gamma"], p["delta"]
    return np.exp(-a * s) + np.exp(-g * s) * ((a - g) / d * np.sin(d * s) - np.cos(d * s))


def _big_k(s, p):
    a, b, g, d = p["alpha"], p["beta"], p["gamma"], p["delta"]
    ga = g - a
    first = (a - g) ** 2 + d ** 2 - b ** 2
    second = (a - g) ** 2 + b ** 2 - d ** 2
    return (
        np.exp(-a * s) * (np.cos(b * s) - first / (2 * b * ga) * np.sin(b * s))
        - np.exp(-g * s) * (np.cos(d * s) + second / (2 * d * ga) * np.sin(d * s))
    )


def kernel_core(kern: MemoryKernel, s):
    """Unnormalized kernel shape at time lag s (seconds)."""
    x = np.asarray(s, dtype=float) / kern.tau_q
    p = kern.parameters
    if kern.n == 1:
        out = np.exp(-p["alpha"] * x)
    elif kern.n == 2:
        out = np.exp(-p["alpha"] * x) * np.sin(p["beta"] * x)
    elif kern.n == 3:
        out = _kappa(x, p)
    else:
        out = _big_k(x, p)
    return float(out) if out.ndim == 0 else out


def kernel_eval(kern: MemoryKernel, s):
    if np.any(np.asarray(s) < 0):
        raise ValueError("kernel is defined for s >= 0 only")
    return kern.normalization * kernel_core(kern, s)


# ---------------- Transforms ----------------

def _quad_checked(f, a, b, label, give_up, **kw):
    # QUADPACK warnings are tolerated while the error estimate stays under give_up
    out = quad(f, a, b, limit=QUAD_LIMIT, full_output=1, **kw)
    value, abserr = out[0], out[1]
    if len(out) > 3 and abserr > give_up:
        raise QuadratureFailure(f"{label}: error estimate {abserr:.3e} above {give_up:.3e} ({out[3]})")
    return value


def kernel_transform(kern: MemoryKernel, omega: float) -> complex:
    """
    int_0^inf kernel(s) exp(-i omega s) ds on [0, s_max], s_max where the
    envelope drops to 1e-16. Oscillatory weights keep high frequencies cheap.
    """
    omega = float(omega)
    if not (math.isfinite(omega) and omega >= 0.0):
        raise ValueError(f"omega must be finite and >= 0, got {omega!r}")
    s_max = kern.truncation_point(TRANSFORM_FLOOR)
    scale = min(1.0, 1.0 / abs(eval_partial_sum(kern.n, 1j * omega * kern.tau_q)))
    # the core integrates to O(tau_q / |e_n|); ask for 1e-12 of that
    tol = dict(epsabs=1e-12 * scale * kern.tau_q, epsrel=1e-11, give_up=1e-7 * scale * kern.tau_q)

    def f(s):
        return kernel_core(kern, s)

    if omega == 0.0:
        c = _quad_checked(f, 0.0, s_max, "transform(cos)", **tol)
        s = 0.0
    else:
        c = _quad_checked(f, 0.0, s_max, "transform(cos)", weight="cos", wvar=omega, **tol)
        s = _quad_checked(f, 0.0, s_max, "transform(sin)", weight="sin", wvar=omega, **tol)
    _dbg(f"[debug] transform n={kern.n} omega={omega:.6g}: c={c:.6e} s={s:.6e}", level=2)
    return kern.normalization * complex(c, -s)


def _resolve_parameters(n: int, parameters: Optional[Dict[str, float]]) -> Dict[str, float]:
    if parameters is not None:
        return dict(parameters)
    return build_kernel(n, 1.0).parameters


def kappa_cs_closed_form(tau_q: float, omega: float, parameters: Optional[Dict[str, float]] = None) -> Tuple[float, float]:
    """Cosine and sine transforms of the n = 3 kernel shape."""
    p = _resolve_parameters(3, parameters)
    a, g, d = p["alpha"], p["gamma"], p["delta"]
    w2 = (tau_q * omega) ** 2
    den = (g ** 2 + d ** 2 + w2) ** 2 - 4 * d ** 2 * w2
    kc = tau_q * (a / (a ** 2 + w2) + ((a - 2 * g) * (g ** 2 + d ** 2) - a * w2) / den)
    ks = tau_q ** 2 * omega * (1.0 / (a ** 2 + w2) + (d ** 2 - 3 * g ** 2 + 2 * g * a - w2) / den)
    return kc, ks


def big_K_cs_closed_form(tau_q: float, omega: float, parameters: Optional[Dict[str, float]] = None) -> Tuple[float, float]:
    """Cosine and sine transforms of the n = 4 kernel shape."""
    p = _resolve_parameters(4, parameters)
    a, b, g, d = p["alpha"], p["beta"], p["gamma"], p["delta"]
    ga = g - a
    w2 = (tau_q * omega) ** 2
    den_a = w2 ** 2 + 2 * (a ** 2 - b ** 2) * w2 + (a ** 2 + b ** 2) ** 2
    den_g = w2 ** 2 + 2 * (g ** 2 - d ** 2) * w2 + (g ** 2 + d ** 2) ** 2
    lift = g ** 2 + d ** 2 - a ** 2 - b ** 2

    kc = tau_q / (2 * ga) * (
        (lift * w2 - (a ** 2 + b ** 2) * (3 * a ** 2 - b ** 2 + g ** 2 + d ** 2 - 4 * a * g)) / den_a
        - (lift * w2 + (g ** 2 + d ** 2) * (3 * g ** 2 - d ** 2 + a ** 2 + b ** 2 - 4 * a * g)) / den_g
    )
    first = (a - g) ** 2 + d ** 2 - b ** 2
    second = (a - g) ** 2 + b ** 2 - d ** 2
    ks = tau_q ** 2 * omega * (
        (w2 + a ** 2 - b ** 2 - a / ga * first) / den_a
        - (w2 + g ** 2 - d ** 2 + g / ga * second) / den_g
    )
    return kc, ks


def transfer_function(n: int, m: int, lags: LagPair, omega: float) -> complex:
    """Steady response H with q = -k Re(H G exp(i omega t)) for a gradient phasor G."""
    n = check_order("n", n, THERMO_MAX_ORDER)
    m = check_order("m", m, THERMO_MAX_ORDER)
    return complex(eval_partial_sum(m, 1j * omega * lags.tau_T) / eval_partial_sum(n, 1j * omega * lags.tau_q))


def steady_periodic_flux(n: int, m: int, lags: LagPair, t: ConductivityTensor, h: CyclicHistory, time: float) -> np.ndarray:
    """Flux driven by the cycle h once transients have died out."""
    hh = transfer_function(n, m, lags, h.omega)
    return -t.k @ np.real(hh * h.phasor() * np.exp(1j * h.omega * time))


# ---------------- Flux from history ----------------

def gradient_operator(history: GradientHistory, m: int, tau_T: float, at: float) -> np.ndarray:
    """sum_j tau_T^j / j! d^j grad T / dt^j at one instant."""
    total = np.zeros(3)
    for j in range(m + 1):
        total = total + tau_T ** j / math.factorial(j) * np.asarray(history.derivative(j, at), dtype=float)
    return total


def flux_at_times(n: int, m: int, lags: LagPair, t: ConductivityTensor, history: GradientHistory,
                  times: Sequence[float]) -> np.ndarray:
    """Flux at several instants from one vector quadrature; rows follow `times`."""
    n = check_order("n", n, KERNEL_MAX_ORDER, minimum=1)
    m = check_order("m", m, THERMO_MAX_ORDER)
    kern = build_kernel(n, lags.tau_q)
    s_max = kern.truncation_point(FLUX_FLOOR)
    if s_max > MAX_TRUNCATION * lags.tau_q:
        raise TruncationFailure(f"kernel needs s_max={s_max:.4g} > {MAX_TRUNCATION:g} tau_q")
    times = [float(x) for x in times]

    def integrand(s):
        w = kernel_eval(kern, s)
        return np.concatenate([w * gradient_operator(history, m, lags.tau_T, tt - s) for tt in times])

    res, err, info = quad_vec(integrand, 0.0, s_max, epsabs=1e-11, epsrel=1e-10, limit=QUAD_LIMIT,
                              norm="max", full_output=True)
    if not info.success:
        raise QuadratureFailure(f"flux quadrature stopped with status {info.status}: {info.message}")
    _dbg(f"[debug] flux n={n} m={m}: {len(times)} time(s), err={err:.2e}, intervals={info.intervals.shape[0]}", level=2)
    stacked = np.asarray(res, dtype=float).reshape(len(times), 3)
    return -(stacked @ t.k.T)


def flux_from_history(n: int, m: int, lags: LagPair, t: ConductivityTensor, history: GradientHistory,
                      time: float) -> np.ndarray:
    """Heat flux at one instant from the convolution form."""
    return flux_at_times(n, m, lags, t, history, [time])[0]
