"""
Second-Law analysis on sinusoidal cycles.

Every (n, m) law reduces to one polynomial P in u' = (tau_q omega)^2:
the cycle integral is -(pi/omega) Q P(u') / |e_n(i tau_q omega)|^2, so the
sign of P on u' > 0 decides consistency. P is built from the double sum
Re[e_m(i r s) conj(e_n(i s))], s = tau_q omega, r = tau_T / tau_q.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from numpy.polynomial.polynomial import polyval
from sympy.polys.domains import QQ
from sympy.polys.rootisolation import dup_sign_variations

from .errors import InvalidLags
from .expsum import eval_partial_sum
from .model import (
    THERMO_MAX_ORDER,
    ConductivityTensor,
    ConsistencyVerdict,
    CyclicHistory,
    LagPair,
    Mode,
    VerdictKind,
    check_order,
    quadratic_form,
)
from .settings import _dbg, default_r_max, scan_points

TRIM_RTOL = 1e-15
DOUBLE_ROOT_TOL = 1e-8
DEFAULT_TOL = 1e-6
MAX_TOL = 1e-4
MIN_R_MAX = 10.0

WITNESS_STEP = 1e-3


def _check_ratio(r) -> float:
    try:
        r = float(r)
    except (TypeError, ValueError):
        raise InvalidLags(f"delay ratio must be a number, got {r!r}") from None
    if not math.isfinite(r) or r <= 0.0:
        raise InvalidLags(f"delay ratio must be finite and > 0, got {r!r}")
    return r


def _thermo_orders(n, m) -> Tuple[int, int]:
    return check_order("n", n, THERMO_MAX_ORDER), check_order("m", m, THERMO_MAX_ORDER)


# ---------------- Positivity polynomial ----------------

@dataclass(frozen=True)
class PositivityPolynomial:
    """Coefficients c_0..c_d of P(u'), lowest power first, d = floor((n+m)/2)."""
    n: int
    m: int
    ratio: float
    coefficients: Tuple[float, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> float:
        return self.coefficients[-1]

    def evaluate(self, u):
        return polyval(u, self.coefficients)

    def derivative(self) -> Tuple[float, ...]:
        return tuple(j * c for j, c in enumerate(self.coefficients) if j > 0)

    def scaled(self, factor: float) -> Tuple[float, ...]:
        return tuple(factor * c for c in self.coefficients)


def build_positivity_polynomial(n: int, m: int, r: float) -> PositivityPolynomial:
    n, m = _thermo_orders(n, m)
    r = _check_ratio(r)
    d = (n + m) // 2
    terms: List[List[float]] = [[] for _ in range(d + 1)]
    for k in range(m + 1):
        for l in range(n + 1):
            if (k + l) % 2:
                continue
            sign = -1.0 if ((k - l) // 2) % 2 else 1.0
            terms[(k + l) // 2].append(sign * r ** k / (math.factorial(k) * math.factorial(l)))
    coeffs = tuple(math.fsum(t) for t in terms)
    return PositivityPolynomial(n=n, m=m, ratio=r, coefficients=coeffs)


def cycle_integral(n: int, m: int, lags: LagPair, t: ConductivityTensor, h: CyclicHistory) -> float:
    """Integral of q . grad T over one steady period of the cycle h."""
    n, m = _thermo_orders(n, m)
    s = lags.tau_q * h.omega
    p = build_positivity_polynomial(n, m, lags.ratio).evaluate(s * s)
    denom = abs(eval_partial_sum(n, 1j * s)) ** 2
    return -math.pi / h.omega * quadratic_form(t, h) * p / denom


# ---------------- Real-root isolation ----------------
# Decisions run on the exact binary value of each float coefficient.

_U = sp.Symbol("u", positive=True)
ROOT_RTOL = 1e-14


def _trim(coeffs: Sequence[float]) -> List[float]:
    """Drop negligible top coefficients (ascending order)."""
    c = [float(x) for x in coeffs]
    if not c:
        return [0.0]
    scale = max(abs(x) for x in c)
    while len(c) > 1 and abs(c[-1]) <= TRIM_RTOL * scale:
        c.pop()
    return c


def _rationals(coeffs: Sequence[float]) -> List[sp.Rational]:
    return [sp.Rational(float(x)) for x in coeffs]


def exact_polynomial(coefficients: Sequence[float]) -> sp.Poly:
    """P over QQ in u, from coefficients lowest power first."""
    return sp.Poly(list(reversed(_rationals(coefficients))), _U, domain=QQ)


def sign_variations(coeffs: Sequence[float]) -> int:
    """Descartes count: sign changes in the coefficient sequence, zeros skipped."""
    return dup_sign_variations([QQ.from_sympy(q) for q in _rationals(coeffs)], QQ)


def positive_real_roots(coefficients: Sequence[float]) -> List[float]:
    """
    Distinct real roots on (0, inf) of a polynomial given lowest power first.

    Screened by Descartes, then isolated on the square-free part with
    rational endpoints and refined to a relative width of ROOT_RTOL.
    """
    c = _trim(coefficients)
    while len(c) > 1 and c[0] == 0.0:
        c.pop(0)
    if len(c) <= 1 or sign_variations(c) == 0:
        return []

    poly = exact_polynomial(c).sqf_part()
    found: List[float] = []
    for (a, b), _ in poly.intervals(inf=0):
        if b <= 0:
            continue
        if a != b:
            a, b = poly.refine_root(a, b, eps=ROOT_RTOL * float(b))
        found.append(float((a + b) / 2))
    return sorted(found)


# ---------------- Classification ----------------

def _normalized(coeffs: Sequence[float], u: float) -> float:
    scale = polyval(u, np.abs(coeffs))
    return float(polyval(u, coeffs) / scale)


def _decide(coefficients: Sequence[float]) -> Tuple[VerdictKind, Optional[float]]:
    c = _trim(coefficients)
    if len(c) == 1:
        return VerdictKind.CONSISTENT_STRICT, None
    if c[-1] < 0.0:
        roots = positive_real_roots(c)
        return VerdictKind.INCONSISTENT, roots[-1] * (1.0 + WITNESS_STEP) if roots else 1.0
    if sign_variations(c) == 0:
        return VerdictKind.CONSISTENT_STRICT, None

    deriv = [j * x for j, x in enumerate(c) if j > 0]
    critical = positive_real_roots(deriv)
    if not critical:
        return VerdictKind.CONSISTENT_STRICT, None
    values = [_normalized(c, u) for u in critical]
    i = min(range(len(values)), key=values.__getitem__)
    if values[i] < -DOUBLE_ROOT_TOL:
        return VerdictKind.INCONSISTENT, critical[i]
    if values[i] <= DOUBLE_ROOT_TOL:
        return VerdictKind.CONSISTENT_WEAK, critical[i]
    return VerdictKind.CONSISTENT_STRICT, None


def _consistent(coefficients: Sequence[float], mode: Mode) -> bool:
    kind, _ = _decide(coefficients)
    if kind is VerdictKind.CONSISTENT_STRICT:
        return True
    return kind is VerdictKind.CONSISTENT_WEAK and mode is Mode.WEAK


def classify(n: int, m: int, lags: LagPair, mode: Mode = Mode.WEAK) -> ConsistencyVerdict:
    """
    Strict: P > 0 on u' > 0. Weak: P >= 0 with a touching zero, witnessed
    at that frequency. The kind does not depend on the mode; whether a
    touching zero passes is `ConsistencyVerdict.is_consistent(mode)`.
    """
    Mode(mode)
    poly = build_positivity_polynomial(n, m, lags.ratio)
    kind, u = _decide(poly.coefficients)
    if u is None:
        return ConsistencyVerdict(kind)
    return ConsistencyVerdict(kind, witness_omega=math.sqrt(u) / lags.tau_q, witness_u=u)


# ---------------- Admissible regions ----------------

class BoundaryKind(str, Enum):
    OPEN = "open"
    CLOSED = "closed"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Interval:
    low: float
    high: float
    low_kind: BoundaryKind
    high_kind: BoundaryKind

    def contains(self, r: float) -> bool:
        if r < self.low or r > self.high:
            return False
        if r == self.low:
            return self.low_kind is BoundaryKind.CLOSED
        if r == self.high:
            return self.high_kind is BoundaryKind.CLOSED
        return True

    def reciprocal(self) -> "Interval":
        low = 0.0 if math.isinf(self.high) else 1.0 / self.high
        high = math.inf if self.low == 0.0 else 1.0 / self.low
        low_kind = BoundaryKind.OPEN if self.high_kind is BoundaryKind.UNBOUNDED else self.high_kind
        high_kind = BoundaryKind.UNBOUNDED if self.low == 0.0 else self.low_kind
        return Interval(low, high, low_kind, high_kind)

    def text(self) -> str:
        left = "[" if self.low_kind is BoundaryKind.CLOSED else "("
        right = "]" if self.high_kind is BoundaryKind.CLOSED else ")"
        high = "inf" if math.isinf(self.high) else f"{self.high:.6g}"
        return f"{left}{self.low:.6g}, {high}{right}"


def region_text(intervals: Sequence[Interval]) -> str:
    """Union notation for console output, '(empty)' for no intervals."""
    return " U ".join(iv.text() for iv in intervals) if intervals else "(empty)"


@dataclass(frozen=True)
class AdmissibleRegion:
    n: int
    m: int
    mode: Mode
    intervals: Tuple[Interval, ...]
    r_max: float
    tol: float

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, r: float) -> bool:
        return any(iv.contains(r) for iv in self.intervals)

    def reciprocal(self) -> "AdmissibleRegion":
        flipped = sorted((iv.reciprocal() for iv in self.intervals), key=lambda iv: iv.low)
        return AdmissibleRegion(self.m, self.n, self.mode, tuple(flipped), self.r_max, self.tol)


def _boundary_kind(n: int, m: int, lo: float, hi: float, mode: Mode) -> BoundaryKind:
    p_lo = build_positivity_polynomial(n, m, lo)
    p_hi = build_positivity_polynomial(n, m, hi)
    if p_lo.leading * p_hi.leading <= 0.0:
        # leading coefficient vanishes on the boundary: judge what is left
        at = math.sqrt(lo * hi)
        reduced = build_positivity_polynomial(n, m, at).coefficients[:-1]
        closed = _consistent(reduced, mode)
    else:
        # touching double root: integral vanishes at one frequency only
        closed = mode is Mode.WEAK
    return BoundaryKind.CLOSED if closed else BoundaryKind.OPEN


def _bisect_change(n: int, m: int, lo: float, hi: float, ok_lo: bool, mode: Mode, tol: float) -> Tuple[float, float]:
    # stop well inside tol so the midpoint sits within tol of the true boundary
    while hi / lo - 1.0 > tol / 8.0:
        mid = math.sqrt(lo * hi)
        ok_mid = _consistent(build_positivity_polynomial(n, m, mid).coefficients, mode)
        if ok_mid == ok_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _check_region_args(r_max: float, tol: float, points: int) -> None:
    if not (r_max >= MIN_R_MAX and math.isfinite(r_max)):
        raise ValueError(f"r_max must be finite and >= {MIN_R_MAX:g}, got {r_max!r}")
    if not (0.0 < tol <= MAX_TOL):
        raise ValueError(f"tol must lie in (0, {MAX_TOL:g}], got {tol!r}")
    if points < 16:
        raise ValueError(f"scan needs at least 16 points, got {points}")


def scan_ratios(r_max: float, points: int) -> np.ndarray:
    return np.geomspace(1.0 / r_max, r_max, points)


def verdict_sweep(n: int, m: int, r_max: Optional[float] = None, points: Optional[int] = None,
                  mode: Mode = Mode.WEAK) -> List[Tuple[float, VerdictKind]]:
    """(r, verdict kind) over the logarithmic scan grid, for region maps."""
    n, m = _thermo_orders(n, m)
    r_max = default_r_max() if r_max is None else float(r_max)
    points = scan_points() if points is None else int(points)
    _check_region_args(r_max, DEFAULT_TOL, points)
    mode = Mode(mode)
    out = []
    for r in scan_ratios(r_max, points):
        out.append((float(r), classify(n, m, LagPair.from_ratio(float(r)), mode).kind))
    return out


@lru_cache(maxsize=256)
def _region(n: int, m: int, r_max: float, tol: float, mode: Mode, points: int) -> AdmissibleRegion:
    rs = scan_ratios(r_max, points)
    ok = [_consistent(build_positivity_polynomial(n, m, float(r)).coefficients, mode) for r in rs]

    # edges[i] is the refined boundary between rs[i] and rs[i+1]
    edges: Dict[int, Tuple[float, BoundaryKind]] = {}
    for i in range(points - 1):
        if ok[i] != ok[i + 1]:
            lo, hi = _bisect_change(n, m, float(rs[i]), float(rs[i + 1]), ok[i], mode, tol)
            edges[i] = (math.sqrt(lo * hi), _boundary_kind(n, m, lo, hi, mode))

    intervals: List[Interval] = []
    start: Optional[Tuple[float, BoundaryKind]] = (0.0, BoundaryKind.OPEN) if ok[0] else None
    for i in sorted(edges):
        r, kind = edges[i]
        if ok[i]:
            intervals.append(Interval(start[0], r, start[1], kind))
            start = None
        else:
            start = (r, kind)
    if start is not None:
        intervals.append(Interval(start[0], math.inf, start[1], BoundaryKind.UNBOUNDED))

    _dbg(f"[debug] region ({n},{m}) mode={mode.value}: {len(intervals)} interval(s), {len(edges)} boundary(ies)")
    return AdmissibleRegion(n, m, mode, tuple(intervals), r_max, tol)


def admissible_region(n: int, m: int, r_max: Optional[float] = None, tol: float = DEFAULT_TOL,
                      mode: Mode = Mode.WEAK, points: Optional[int] = None) -> AdmissibleRegion:
    """
    Delay ratios r = tau_T/tau_q for which (n, m) is consistent.

    A logarithmic scan over [1/r_max, r_max] locates verdict changes, each
    refined by bisection. An interval reaching the scan ends is reported as
    starting at 0 or running to infinity.
    """
    n, m = _thermo_orders(n, m)
    r_max = default_r_max() if r_max is None else float(r_max)
    points = scan_points() if points is None else int(points)
    tol = float(tol)
    _check_region_args(r_max, tol, points)
    return _region(n, m, r_max, tol, Mode(mode), points)


def leading_coefficient_bounds(n: int, m: int) -> List[float]:
    """Positive ratios at which the top coefficient of P changes sign."""
    n, m = _thermo_orders(n, m)
    d = (n + m) // 2
    in_r = [0.0] * (m + 1)
    for k in range(m + 1):
        l = 2 * d - k
        if 0 <= l <= n:
            sign = -1.0 if ((k - l) // 2) % 2 else 1.0
            in_r[k] += sign / (math.factorial(k) * math.factorial(l))
    return positive_real_roots(in_r)


# ---------------- Published forms ----------------

_OPEN, _CLOSED, _UNB = BoundaryKind.OPEN, BoundaryKind.CLOSED, BoundaryKind.UNBOUNDED

ALWAYS_CONSISTENT = ((0, 0), (1, 0), (0, 1), (1, 1))
NEVER_CONSISTENT = (
    (2, 0), (0, 2), (3, 0), (0, 3), (3, 1), (1, 3),
    (4, 0), (0, 4), (4, 1), (1, 4), (4, 2), (2, 4),
)

_SQRT3 = math.sqrt(3.0)
_KNOWN_INTERVALS: Dict[Tuple[int, int], Tuple[Interval, ...]] = {
    (2, 1): (Interval(0.5, math.inf, _CLOSED, _UNB),),
    (1, 2): (Interval(0.0, 2.0, _OPEN, _CLOSED),),
    (2, 2): (Interval(2.0 - _SQRT3, 2.0 + _SQRT3, _OPEN, _OPEN),),
    (2, 3): (Interval(0.28441, 1.4902, _OPEN, _CLOSED),),
    (3, 2): (Interval(1.0 / 1.4902, 1.0 / 0.28441, _CLOSED, _OPEN),),
    (3, 4): (Interval(0.0, 1.33332, _OPEN, _OPEN),),
    (4, 3): (Interval(1.0 / 1.33332, math.inf, _OPEN, _UNB),),
}
for _pair in ALWAYS_CONSISTENT:
    _KNOWN_INTERVALS[_pair] = (Interval(0.0, math.inf, _OPEN, _UNB),)
for _pair in NEVER_CONSISTENT:
    _KNOWN_INTERVALS[_pair] = ()

# (3,4) and (4,3) entries are the leading-coefficient bound only
KNOWN_REGION_PRECISION = 5e-4


def known_region_oracle(n: int, m: int) -> Optional[AdmissibleRegion]:
    """Closed-form region from the literature; None for (3,3) and (4,4)."""
    n, m = _thermo_orders(n, m)
    intervals = _KNOWN_INTERVALS.get((n, m))
    if intervals is None:
        return None
    return AdmissibleRegion(n, m, Mode.WEAK, intervals, math.inf, KNOWN_REGION_PRECISION)


# Per-case brackets as printed, lowest power of u' first. Each is a positive
# multiple of P; the (1,3) one is printed with the opposite overall sign.
_BRACKETS: Dict[Tuple[int, int], Callable[[float], Tuple[float, ...]]] = {
    (1, 1): lambda r: (1.0, r),
    (2, 0): lambda r: (2.0, -1.0),
    (1, 2): lambda r: (1.0, r * (1.0 - r / 2.0)),
    (0, 3): lambda r: (2.0, -r ** 2),
    (1, 3): lambda r: (1.0, r - r ** 2 / 2.0, -r ** 3 / 6.0),
    (2, 3): lambda r: (2.0, 2.0 * r - 1.0 - r ** 2, 0.5 * r ** 2 * (1.0 - 2.0 * r / 3.0)),
    (3, 3): lambda r: (
        24.3944,
        -(12.1972 * (r - 1.0) ** 2 + 0.0003),
        -r * (4.0657 * r ** 2 - 6.09877 * r + 4.06582),
        0.677637 * r ** 3,
    ),
    (0, 4): lambda r: (24.0, -12.0 * r ** 2, r ** 4),
    (1, 4): lambda r: (1.0, r * (1.0 - r / 2.0), r ** 3 / 6.0 * (r / 4.0 - 1.0)),
    (2, 4): lambda r: (
        4.0,
        -2.0 * (1.0 - 2.0 * r + r ** 2),
        r ** 4 / 6.0 - 2.0 * r ** 3 / 3.0 + r ** 2,
        -r ** 4 / 12.0,
    ),
    (3, 4): lambda r: (
        24.3944,
        -(12.1972 * (r - 1.0) ** 2 + 0.0003),
        r * (1.01643 * r ** 3 - 4.06574 * r ** 2 + 6.09877 * r - 4.06582),
        0.677637 * r ** 3 - 0.508231 * r ** 4,
    ),
    (4, 4): lambda r: (
        1552.03,
        -(776.016 * r ** 2 - 1552.06 * r + 776.031),
        64.668 * r ** 4 - 258.676 * r ** 3 + 388.015 * r ** 2 - 258.673 * r + 64.6695,
        -r ** 2 * (32.3346 * r ** 2 - 43.1121 * r + 32.3348),
        2.69456 * r ** 4,
    ),
}

BRACKET_SCALE = {(3, 3): 24.3944, (3, 4): 24.3944, (4, 4): 1552.03}


def published_bracket(n: int, m: int, r: float) -> Optional[Tuple[float, ...]]:
    n, m = _thermo_orders(n, m)
    make = _BRACKETS.get((n, m))
    if make is None:
        return None
    return tuple(float(c) for c in make(_check_ratio(r)))


# ---------------- Grid ----------------

class GridClass(str, Enum):
    ALWAYS = "always"
    NEVER = "never"
    CONDITIONAL = "conditional"


@dataclass(frozen=True)
class GridCell:
    n: int
    m: int
    category: GridClass
    region: AdmissibleRegion
    witness_omega: Optional[float] = None
    note: Optional[str] = None


@dataclass(frozen=True)
class ConsistencyGrid:
    mode: Mode
    cells: Tuple[GridCell, ...] = field(default_factory=tuple)

    def cell(self, n: int, m: int) -> GridCell:
        for c in self.cells:
            if (c.n, c.m) == (n, m):
                return c
        raise KeyError((n, m))

    def consistent_pairs(self) -> List[Tuple[int, int]]:
        return [(c.n, c.m) for c in self.cells if c.category is not GridClass.NEVER]


UNLISTED_PAIR_NOTE = (
    "consistent for every delay ratio, yet missing from the commonly quoted list of admissible pairs"
)


def consistency_grid(mode: Mode = Mode.WEAK, r_max: Optional[float] = None, tol: float = DEFAULT_TOL,
                     points: Optional[int] = None) -> ConsistencyGrid:
    """
    5x5 table over (n, m). Witness frequencies are taken at unit lags for
    every cell that fails at r = 1.
    """
    mode = Mode(mode)
    unit = LagPair(1.0, 1.0)
    cells = []
    for n in range(THERMO_MAX_ORDER + 1):
        for m in range(THERMO_MAX_ORDER + 1):
            region = admissible_region(n, m, r_max=r_max, tol=tol, mode=mode, points=points)
            if region.is_empty:
                category = GridClass.NEVER
            elif (len(region.intervals) == 1 and region.intervals[0].low == 0.0
                  and math.isinf(region.intervals[0].high)):
                category = GridClass.ALWAYS
            else:
                category = GridClass.CONDITIONAL
            verdict = classify(n, m, unit, mode)
            witness = None if verdict.is_consistent(mode) else verdict.witness_omega
            note = UNLISTED_PAIR_NOTE if (n, m) == (1, 1) else None
            cells.append(GridCell(n, m, category, region, witness, note))
    return ConsistencyGrid(mode, tuple(cells))
