"""Regime classification of the reduced laws from initial data alone.

For the first-order law y = L^2 obeys (y_t)^2 = 4 beta0 - alpha^2 C1/(M y) + 4 (H0/M) y,
so the sign of H0 and the roots of the quadratic on the right decide
between monotone defocusing, arrest followed by defocusing, and a bounded
oscillation. For the second-order law the beta-expression
beta0 - (C1/2M) e^2 + (C2/2M) e^4 (e = alpha/L) is negative only between
r_low and r_high; a focusing trajectory collapses if it carries enough
kinetic energy to cross the potential barrier at r_high.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dynamics import (
    Arrest,
    Collapse,
    Defocus,
    HorizonReached,
    ModelSpec,
    Oscillation,
    ReducedState,
    SimulationOutcome,
    StepControl,
    beta_of,
    hamiltonian,
    integrate,
    integration_constant,
)
from .errors import BracketError, DegenerateData, UnsupportedOrder

LABELS = ("MonotoneDefocus", "ArrestThenDefocus", "Oscillation", "Collapse", "Indeterminate")
BETA_SMALL = 0.1
EPS_SMALL = 0.1
H0_DEGENERATE = 1e-14


@dataclass(frozen=True)
class RegimeReport:
    order: str
    H0: float
    integration_constant: float
    predicted: str
    validity: dict
    y_m: float | None = None
    y_M: float | None = None
    K: float | None = None
    r_low: float | None = None
    r_high: float | None = None
    band: str | None = None
    threshold_estimate: float | None = None
    note: str = ""

    @property
    def L_bounds(self) -> tuple[float | None, float | None]:
        return (
            math.sqrt(self.y_m) if self.y_m is not None else None,
            math.sqrt(self.y_M) if self.y_M is not None else None,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def classification_horizon(init: ReducedState) -> float:
    return 1e3 * init.L ** 2


def check_validity(init: ReducedState, spec: ModelSpec) -> dict:
    return {
        "beta_small": abs(spec.beta0) < BETA_SMALL,
        "eps_small": spec.alpha / init.L < EPS_SMALL,
    }


def o1_roots(beta0: float, alpha: float, H0: float, M: float, C1: float) -> tuple[float | None, float | None]:
    """Exact roots y_m <= y_M of (4H0/M) y^2 + 4 beta0 y - alpha^2 C1/M."""
    if alpha == 0:
        return None, None
    disc = beta0 ** 2 + alpha ** 2 * C1 * H0 / M ** 2
    if disc < 0:
        return None, None
    root = math.sqrt(disc)
    y_m = alpha ** 2 * C1 / (2 * M) / (root + beta0) if root + beta0 > 0 else None
    y_M = (root + beta0) / (-2 * H0 / M) if H0 < 0 else None
    return y_m, y_M


def _initial_acceleration(init: ReducedState, spec: ModelSpec) -> float:
    return -beta_of(init, spec) / init.L ** 3


def _outward(init: ReducedState, spec: ModelSpec) -> bool:
    if init.dL != 0:
        return init.dL > 0
    return _initial_acceleration(init, spec) >= 0


def classify_o1(init: ReducedState, spec: ModelSpec) -> RegimeReport:
    if spec.order != "o1":
        raise UnsupportedOrder(f"classify_o1 needs order o1, got {spec.order!r}")
    c = spec.constants
    D0 = integration_constant(spec, init)
    H0 = c.M * D0
    validity = check_validity(init, spec)
    if abs(H0) < H0_DEGENERATE:
        raise DegenerateData(f"H0 = {H0!r} is numerically zero; the regime is a separatrix")
    if spec.alpha == 0:
        falls = init.dL < 0 or (H0 < 0 and spec.beta0 > 0)
        label = "Collapse" if falls else "MonotoneDefocus"
        return RegimeReport("o1", H0, D0, label, validity, note="no arrest mechanism at alpha = 0")
    y_m, y_M = o1_roots(spec.beta0, spec.alpha, H0, c.M, c.C1.value)
    if H0 < 0:
        label = "Oscillation" if y_M is not None and y_m is not None else "Indeterminate"
    else:
        label = "MonotoneDefocus" if _outward(init, spec) else "ArrestThenDefocus"
        y_M = None
    return RegimeReport("o1", H0, D0, label, validity, y_m=y_m, y_M=y_M)


def o2_roots(beta0: float, C1: float, C2: float, M: float) -> tuple[float, float, float]:
    """K and the two roots of the o2 beta-expression in e = alpha/L (nan if K <= 0)."""
    K = C1 ** 2 / (8 * M * C2) - beta0
    if K <= 0:
        return K, math.nan, math.nan
    s = math.sqrt(C1 ** 2 - 8 * M * C2 * beta0)
    # the small root in cancellation-free form
    x_low = 4 * M * beta0 / (C1 + s)
    x_high = (C1 + s) / (2 * C2)
    return K, math.sqrt(x_low), math.sqrt(x_high)


def o2_potential(e: float, beta0: float, alpha: float, c) -> float:
    """V(e) with L_t^2 + V(alpha/L) conserved along the o2 flow."""
    return (-beta0 * e ** 2 + c.C1.value * e ** 4 / (4 * c.M) - c.C2.value * e ** 6 / (6 * c.M)) / alpha ** 2


def classify_o2(init: ReducedState, spec: ModelSpec) -> RegimeReport:
    if spec.order != "o2":
        raise UnsupportedOrder(f"classify_o2 needs order o2, got {spec.order!r}")
    c = spec.constants
    E0 = integration_constant(spec, init)
    H0 = hamiltonian(spec, init)
    validity = check_validity(init, spec)
    K, r_low, r_high = o2_roots(spec.beta0, c.C1.value, c.C2.value, c.M)
    e0 = spec.alpha / init.L
    if K <= 0:
        if init.dL < 0 or H0 < 0:
            label = "Collapse"
        else:
            label = "MonotoneDefocus"
        return RegimeReport("o2", H0, E0, label, validity, K=K,
                            note="beta-expression positive for every L")
    if e0 > r_high:
        band = "above_high"
    elif e0 >= r_low:
        band = "between"
    else:
        band = "below_low"
    threshold = None
    if e0 < r_high:
        barrier = o2_potential(r_high, spec.beta0, spec.alpha, c) - o2_potential(e0, spec.beta0, spec.alpha, c)
        threshold = -math.sqrt(barrier) if barrier > 0 else None
    if band == "above_high" and init.dL < 0:
        label, note = "Collapse", "alpha/L(0) above r_high: outside the expansion regime"
    else:
        label, note = "Indeterminate", "outcome depends on L_t(0); use threshold_bisect"
    return RegimeReport("o2", H0, E0, label, validity, K=K, r_low=r_low, r_high=r_high,
                        band=band, threshold_estimate=threshold, note=note)


def classify_o3(init: ReducedState, spec: ModelSpec) -> RegimeReport:
    """Turning points from the quartic F0 y^4 + 4 beta0 y^3 - a1 y^2 + a2 y - a3 = 0."""
    if spec.order != "o3":
        raise UnsupportedOrder(f"classify_o3 needs order o3, got {spec.order!r}")
    c = spec.constants
    F0 = integration_constant(spec, init)
    H0 = hamiltonian(spec, init)
    validity = check_validity(init, spec)
    if abs(H0) < H0_DEGENERATE:
        raise DegenerateData(f"H0 = {H0!r} is numerically zero; the regime is a separatrix")
    a2 = spec.alpha ** 2
    coeffs = [F0, 4 * spec.beta0, -a2 * c.C1.value / c.M,
              2.0 / 3.0 * a2 * a2 * c.C2.value / c.M, -a2 ** 3 * c.C3.value / (2 * c.M)]
    roots = np.roots(coeffs)
    real = sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-9 * abs(r) and r.real > 0)
    y0 = init.L ** 2
    outward = _outward(init, spec)
    lower = [r for r in real if r < y0 * (1 - 1e-9)]
    upper = [r for r in real if r > y0 * (1 + 1e-9)]
    y_m = lower[-1] if lower else None
    y_M = upper[0] if upper else None
    if init.dL == 0:
        if outward:
            y_m = y0
        else:
            y_M = y0
    if spec.alpha == 0:
        label = "Collapse" if not outward or H0 < 0 else "MonotoneDefocus"
    elif H0 < 0 and y_M is not None:
        label = "Oscillation"
    elif H0 > 0:
        label = "MonotoneDefocus" if outward else "ArrestThenDefocus"
        y_M = None
    else:
        label = "Indeterminate"
    return RegimeReport("o3", H0, F0, label, validity, y_m=y_m, y_M=y_M)


def classify(init: ReducedState, spec: ModelSpec) -> RegimeReport:
    table = {"o1": classify_o1, "o2": classify_o2, "o3": classify_o3}
    if spec.order not in table:
        raise UnsupportedOrder(f"no analytic classification for order {spec.order!r}")
    return table[spec.order](init, spec)


def outcome_label(outcome: SimulationOutcome) -> str:
    """Translate an integrator event into the classification vocabulary."""
    ev = outcome.event
    if isinstance(ev, Collapse):
        return "Collapse"
    if isinstance(ev, Oscillation):
        return "Oscillation"
    if isinstance(ev, Arrest):
        return "ArrestThenDefocus"
    if isinstance(ev, Defocus):
        return "MonotoneDefocus"
    if isinstance(ev, HorizonReached) and outcome.final is not None and outcome.final.dL > 0:
        mins = [e for e in outcome.extrema if e.kind == "min"]
        if not outcome.extrema:
            return "MonotoneDefocus"
        if len(mins) == 1 and len(outcome.extrema) == 1:
            return "ArrestThenDefocus"
    return "Indeterminate"


@dataclass(frozen=True)
class ThresholdResult:
    L_t_c: float
    bracket: tuple[float, float]
    iterations: int
    t_max_used: float

    def to_dict(self) -> dict:
        return {"L_t_c": self.L_t_c, "bracket": list(self.bracket),
                "iterations": self.iterations, "t_max_used": self.t_max_used}


def threshold_bisect(
    template_init: ReducedState,
    spec: ModelSpec,
    bracket: tuple[float, float] = (-200.0, 0.0),
    width: float = 1e-4,
    t_max: float | None = None,
) -> ThresholdResult:
    """Bisect L_t(0) between a collapsing and a non-collapsing initial speed."""
    if spec.order != "o2":
        raise UnsupportedOrder(f"threshold_bisect needs order o2, got {spec.order!r}")
    horizon = t_max if t_max is not None else classification_horizon(template_init)
    ctrl = StepControl(t_max=horizon, record=False, stop_after_extrema=3)

    def collapses(dL):
        out = integrate(replace(template_init, dL=dL), spec, ctrl)
        return isinstance(out.event, Collapse)

    lo, hi = bracket
    c_lo, c_hi = collapses(lo), collapses(hi)
    if c_lo == c_hi:
        state = "collapse" if c_lo else "do not collapse"
        raise BracketError(f"both ends of L_t(0) bracket {bracket} {state}")
    if not c_lo:
        lo, hi = hi, lo
    n = 0
    while abs(hi - lo) > width:
        mid = 0.5 * (lo + hi)
        if collapses(mid):
            lo = mid
        else:
            hi = mid
        n += 1
    return ThresholdResult(L_t_c=0.5 * (lo + hi), bracket=tuple(bracket), iterations=n, t_max_used=horizon)
