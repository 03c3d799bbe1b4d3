"""Reduced modulation equations for the focusing factor L(t).

All models share L_tt = -beta / L^3 and dtau/dt = 1 / L^2. They differ in
beta:

    unperturbed  beta is a state, beta_t = -exp(-pi/sqrt(beta)) / L^2 (optional loss)
    o1, o2, o3   beta0 - (C1/2M) e^2 [+ (C2/2M) e^4] [- (C3/2M) e^6],  e = alpha/L
    exact        beta0 + (alpha^2 / 2M) f1(L) with f1 from the Helmholtz solve

The integrator is an embedded Dormand-Prince 5(4) pair with a PI step-size
controller. It marches in a rescaled variable s with dt/ds = q/(1+q),
q = (L/L_ref)^4: for L of order L_ref or larger this is ordinary time
stepping, while on a collapsing branch (where L_t can grow like L^-3) the
remaining time to the singularity drops far below the spacing of doubles
near t and could not be resolved by stepping in t itself.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import (
    DomainError,
    IdentityViolation,
    NoConvergence,
    StepUnderflow,
    UnsupportedOrder,
)
from .functionals import ModulationConstants
from .helmholtz import remainder_integral
from .soliton import SolitonProfile

ORDERS = ("unperturbed", "o1", "o2", "o3", "exact")
SERIES_ORDERS = {"o1": 1, "o2": 2, "o3": 3}
BETA_FLOOR = 1e-12


@dataclass(frozen=True)
class ReducedState:
    t: float
    L: float
    dL: float
    beta: float = 0.0
    tau: float = 0.0

    def as_tuple(self):
        return (self.t, self.L, self.dL, self.beta, self.tau)


@dataclass(frozen=True)
class ModelSpec:
    order: str
    alpha: float = 0.0
    beta0: float = 0.0
    constants: ModulationConstants | None = None
    loss_term: bool = False
    profile: SolitonProfile | None = None
    # general conservative/non-conservative hook for the unperturbed beta equation
    f2: Callable[[ReducedState], float] | None = None

    def __post_init__(self):
        if self.order not in ORDERS:
            raise UnsupportedOrder(f"unknown order {self.order!r}; expected one of {ORDERS}")
        if not (self.alpha >= 0) or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha!r}")
        if not math.isfinite(self.beta0):
            raise ValueError(f"beta0 must be finite, got {self.beta0!r}")
        if self.order != "unperturbed" and self.constants is None:
            raise ValueError(f"order {self.order} needs modulation constants")
        if self.order == "exact" and self.profile is None and self.alpha > 0:
            raise ValueError("exact order needs the soliton profile for the Helmholtz solve")


@dataclass(frozen=True)
class StepControl:
    t_max: float
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    L_collapse: float | None = None  # default 1e-4 * L(0)
    L_escape: float | None = None  # default 1e3 * L(0)
    max_steps: int = 2_000_000
    oscillation_extrema: int = 3
    stop_after_extrema: int | None = 7
    extremum_tol: float = 1e-3
    drift_bound: float | None = None
    record: bool = True


# ---------------------------------------------------------------- events


@dataclass(frozen=True)
class Collapse:
    t_c: float
    name = "Collapse"

    def to_dict(self):
        return {"event": self.name, "t_event": self.t_c, "L_min": None, "L_max": None, "period": None}


@dataclass(frozen=True)
class Arrest:
    L_min: float
    t_min: float
    t_escape: float
    name = "Arrest"

    def to_dict(self):
        return {"event": self.name, "t_event": self.t_min, "L_min": self.L_min, "L_max": None, "period": None}


@dataclass(frozen=True)
class Defocus:
    t_escape: float
    name = "Defocus"

    def to_dict(self):
        return {"event": self.name, "t_event": self.t_escape, "L_min": None, "L_max": None, "period": None}


@dataclass(frozen=True)
class Oscillation:
    L_min: float
    L_max: float
    period: float
    name = "Oscillation"

    def to_dict(self):
        return {"event": self.name, "t_event": None, "L_min": self.L_min, "L_max": self.L_max, "period": self.period}


@dataclass(frozen=True)
class HorizonReached:
    t_end: float
    name = "HorizonReached"

    def to_dict(self):
        return {"event": self.name, "t_event": self.t_end, "L_min": None, "L_max": None, "period": None}


@dataclass(frozen=True)
class Extremum:
    t: float
    L: float
    kind: str  # "min" or "max"


TRAJECTORY_COLUMNS = ("t", "L", "dL", "beta", "tau", "first_integral_residual")


@dataclass(eq=False)
class SimulationOutcome:
    series: np.ndarray  # rows of TRAJECTORY_COLUMNS
    event: object
    first_integral_drift: float | None
    steps_taken: int
    steps_rejected: int
    extrema: list = field(default_factory=list)
    final: ReducedState | None = None

    @property
    def t(self):
        return self.series[:, 0]

    @property
    def L(self):
        return self.series[:, 1]

    def to_dict(self) -> dict:
        d = self.event.to_dict()
        d["drift"] = self.first_integral_drift
        d["steps_taken"] = self.steps_taken
        d["steps_rejected"] = self.steps_rejected
        return d

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(TRAJECTORY_COLUMNS)
            for row in self.series:
                out.writerow(["%.16e" % v for v in row])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------- model


def _series_coeffs(spec: ModelSpec) -> tuple[float, float, float]:
    c = spec.constants
    k = SERIES_ORDERS[spec.order]
    two_m = 2 * c.M
    return (
        c.C1.value / two_m,
        c.C2.value / two_m if k >= 2 else 0.0,
        c.C3.value / two_m if k >= 3 else 0.0,
    )


def beta_correction(L: float, spec: ModelSpec) -> float:
    """beta - beta0 for the orders with an algebraic beta."""
    if spec.alpha == 0:
        return 0.0
    e2 = (spec.alpha / L) ** 2
    if spec.order == "exact":
        c = spec.constants
        e4 = e2 * e2
        f1_L2 = -c.C1.value + e2 * c.C2.value + e4 * remainder_integral(spec.profile, spec.alpha / L)
        return e2 * f1_L2 / (2 * c.M)
    a1, a2, a3 = _series_coeffs(spec)
    return e2 * (-a1 + e2 * (a2 - e2 * a3))


def beta_of(state: ReducedState, spec: ModelSpec) -> float:
    if spec.order == "unperturbed":
        return state.beta
    return spec.beta0 + beta_correction(state.L, spec)


def loss_rate(beta: float) -> float:
    """exp(-pi/sqrt(beta)), switched off at and below BETA_FLOOR."""
    if beta <= BETA_FLOOR:
        return 0.0
    return math.exp(-math.pi / math.sqrt(beta))


def rhs(state: ReducedState, spec: ModelSpec) -> tuple[float, float, float, float]:
    """(dL/dt, L_tt, dbeta/dt, dtau/dt)."""
    L = state.L
    if not (L > 0):
        raise DomainError(f"L must stay positive, got {L!r} at t={state.t!r}")
    inv_L2 = 1.0 / (L * L)
    if spec.order == "unperturbed":
        beta = state.beta
        dbeta = 0.0
        if spec.loss_term:
            dbeta -= loss_rate(beta) * inv_L2
        if spec.f2 is not None:
            dbeta -= 2 * spec.alpha ** 2 / spec.constants.M * spec.f2(state)
    else:
        beta = spec.beta0 + beta_correction(L, spec)
        dbeta = 0.0
    return state.dL, -beta * inv_L2 / L, dbeta, inv_L2


def beta0_from_initial_beta(beta_initial: float, alpha: float, L0: float, constants: ModulationConstants) -> float:
    """beta0 = beta(0) + (alpha^2 C1 / 2M) / L(0)^2 for the first-order law."""
    return beta_initial + alpha ** 2 * constants.C1.value / (2 * constants.M) / L0 ** 2


# ---------------------------------------------------------------- first integrals


def _y_terms(spec: ModelSpec, y: float) -> float:
    """Everything on the right of the y-equation except the constant * y term."""
    c = spec.constants
    a2 = spec.alpha ** 2
    k = SERIES_ORDERS[spec.order]
    val = 4 * spec.beta0 - a2 * c.C1.value / (c.M * y)
    if k >= 2:
        val += 2.0 / 3.0 * a2 * a2 * c.C2.value / (c.M * y * y)
    if k >= 3:
        val -= a2 ** 3 * c.C3.value / (2 * c.M * y ** 3)
    return val


def integration_constant(spec: ModelSpec, init: ReducedState) -> float:
    """D0 (o1), E0 (o2) or F0 (o3) for the given initial data.

    The o1 constant is quoted with the y-term written as 4 D0 y; the o2 and
    o3 constants multiply y directly.
    """
    if spec.order not in SERIES_ORDERS:
        raise UnsupportedOrder(f"no closed first integral for order {spec.order!r}")
    y0 = init.L ** 2
    yt0 = 2 * init.L * init.dL
    coeff = (yt0 ** 2 - _y_terms(spec, y0)) / y0
    return coeff / 4 if spec.order == "o1" else coeff


def hamiltonian(spec: ModelSpec, init: ReducedState) -> float:
    """H0 = M D0 for o1, M E0 / 4 and M F0 / 4 for o2 and o3."""
    k = integration_constant(spec, init)
    M = spec.constants.M
    return M * k if spec.order == "o1" else M * k / 4


def first_integral(state: ReducedState, spec: ModelSpec, init: ReducedState, constant: float | None = None) -> float:
    if spec.order not in SERIES_ORDERS:
        raise UnsupportedOrder(f"no closed first integral for order {spec.order!r}")
    if constant is None:
        constant = integration_constant(spec, init)
    y = state.L ** 2
    yt = 2 * state.L * state.dL
    lin = 4 * constant if spec.order == "o1" else constant
    return yt * yt - (_y_terms(spec, y) + lin * y)


def _normalised_residual(state, spec, init, constant):
    yt = 2 * state.L * state.dL
    return abs(first_integral(state, spec, init, constant)) / max(1.0, yt * yt)


# ---------------------------------------------------------------- integrator

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array(_A[6] + (0.0,))
_B4 = np.array((5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40))
_E = _B5 - _B4


class _System:
    """Right-hand side in the rescaled variable s for Y = (t, L, dL, beta, tau)."""

    def __init__(self, spec: ModelSpec, L_ref: float):
        self.spec = spec
        self.L_ref4 = L_ref ** 4

    def __call__(self, Y: np.ndarray) -> np.ndarray:
        t, L, dL, beta, tau = Y
        if not (L > 0) or not math.isfinite(L):
            raise DomainError(f"L left the domain: {L!r}")
        dLdt, Ltt, dbeta, dtau = rhs(ReducedState(t, L, dL, beta, tau), self.spec)
        q = L ** 4 / self.L_ref4
        w = q / (1 + q)
        return np.array((w, w * dLdt, w * Ltt, w * dbeta, w * dtau))


def _dp_step(f, Y, k1, h):
    ks = [k1]
    for i in range(1, 7):
        a = _A[i]
        Yi = Y + h * sum(a[j] * ks[j] for j in range(i) if a[j] != 0.0)
        ks.append(f(Yi))
    K = np.array(ks)
    Y5 = Y + h * (_B5 @ K)
    err = h * (_E @ K)
    return Y5, err, ks[6]


def _trial(f, Y, k1, h):
    """One fifth-order step of size h, or None if it left the domain."""
    try:
        Ynew, _, _ = _dp_step(f, Y, k1, h)
    except DomainError:
        return None
    if not np.all(np.isfinite(Ynew)):
        return None
    return Ynew


def _bisect(f, Y, k1, h, below, iterations=30):
    """Smallest theta in (0, 1] (to 2^-iterations) with below(Y(theta h)) true."""
    lo, hi = 0.0, 1.0
    Yhi = None
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        Ym = _trial(f, Y, k1, mid * h)
        if Ym is None or below(Ym):
            hi, Yhi = mid, Ym
        else:
            lo = mid
    if Yhi is None:
        Yhi = _trial(f, Y, k1, hi * h)
    return hi, Yhi


def _state(Y, spec) -> ReducedState:
    t, L, dL, beta, tau = (float(v) for v in Y)
    s = ReducedState(t, L, dL, beta, tau)
    if spec.order != "unperturbed":
        s = replace(s, beta=beta_of(s, spec))
    return s


def _oscillation(extrema, tol, need):
    if len(extrema) < need:
        return None
    mins = [e.L for e in extrema if e.kind == "min"]
    maxs = [e.L for e in extrema if e.kind == "max"]
    for vals in (mins, maxs):
        if vals and (max(vals) - min(vals)) > tol * max(abs(v) for v in vals):
            return None
    spacings = []
    for kind in ("min", "max"):
        ts = [e.t for e in extrema if e.kind == kind]
        spacings += list(np.diff(ts))
    if not mins or not maxs or not spacings:
        return None
    return Oscillation(L_min=float(np.mean(mins)), L_max=float(np.mean(maxs)), period=float(np.mean(spacings)))


def _initial_step(f, Y, k1, atol, rtol, span):
    scale = atol + rtol * np.abs(Y)
    d0 = float(np.sqrt(np.mean((Y / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((k1 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h0, span)


def integrate(init: ReducedState, spec: ModelSpec, ctrl: StepControl) -> SimulationOutcome:
    if not (init.L > 0):
        raise DomainError(f"initial L must be positive, got {init.L!r}")
    L_collapse = ctrl.L_collapse if ctrl.L_collapse is not None else 1e-4 * init.L
    L_escape = ctrl.L_escape if ctrl.L_escape is not None else 1e3 * init.L
    beta_init = spec.beta0 if spec.order == "unperturbed" else 0.0
    f = _System(spec, init.L)
    Y = np.array((init.t, init.L, init.dL, beta_init, init.tau), dtype=float)
    t_end = init.t + ctrl.t_max
    h_min = 1e-14 * ctrl.t_max
    track = spec.order in SERIES_ORDERS
    start = _state(Y, spec)
    constant = integration_constant(spec, start) if track else None
    layer = 10 * L_collapse
    drift = 0.0 if track else None

    rows = []

    def record(Yv):
        s = _state(Yv, spec)
        nonlocal drift
        res = float("nan")
        if track:
            res = first_integral(s, spec, start, constant)
            if s.L >= layer:
                drift = max(drift, _normalised_residual(s, spec, start, constant))
        if ctrl.record:
            rows.append((*s.as_tuple(), res))
        return s

    record(Y)
    k1 = f(Y)
    h = _initial_step(f, Y, k1, ctrl.abs_tol, ctrl.rel_tol, ctrl.t_max)
    err_prev = 1.0
    taken = rejected = 0
    extrema: list[Extremum] = []
    event = None

    while event is None:
        if taken + rejected >= ctrl.max_steps:
            raise NoConvergence(f"step budget {ctrl.max_steps} exhausted at t={Y[0]!r}")
        if h < h_min:
            raise StepUnderflow(
                f"step size {h:.3e} fell below {h_min:.3e} at t={Y[0]!r}",
                state=_state(Y, spec),
                series=np.array(rows),
            )
        try:
            Ynew, err, k7 = _dp_step(f, Y, k1, h)
            ok = bool(np.all(np.isfinite(Ynew)))
        except DomainError:
            ok = False
        if not ok:
            rejected += 1
            h *= 0.25
            continue
        scale = ctrl.abs_tol + ctrl.rel_tol * np.maximum(np.abs(Y), np.abs(Ynew))
        en = float(np.sqrt(np.mean((err / scale) ** 2)))
        if en > 1.0:
            rejected += 1
            h *= max(0.2, 0.9 * en ** -0.2)
            continue

        taken += 1
        h_used = h
        # clip the step so that the horizon is hit exactly
        if Ynew[0] > t_end:
            theta, Yc = _bisect(f, Y, k1, h_used, lambda Z: Z[0] >= t_end, iterations=60)
            h_used, Ynew = theta * h_used, Yc
            Ynew[0] = t_end
            k7 = f(Ynew)

        if Ynew[1] <= L_collapse:
            theta, Yc = _bisect(f, Y, k1, h_used, lambda Z: Z[1] <= L_collapse)
            if Yc is not None:
                record(Yc)
                event = Collapse(t_c=float(Yc[0]))
            else:
                event = Collapse(t_c=float(Y[0] + theta * (Ynew[0] - Y[0])))
            break

        if Y[2] * Ynew[2] < 0 or Ynew[2] == 0:
            rising = Y[2] < 0
            sign0 = math.copysign(1.0, Y[2])
            theta, Ye = _bisect(f, Y, k1, h_used, lambda Z: math.copysign(1.0, Z[2]) != sign0)
            Ye = Ye if Ye is not None else Ynew
            extrema.append(Extremum(t=float(Ye[0]), L=float(Ye[1]), kind="min" if rising else "max"))

        Y, k1 = Ynew, k7
        record(Y)

        if Y[1] >= L_escape and Y[2] > 0:
            mins = [e for e in extrema if e.kind == "min"]
            if mins:
                m = min(mins, key=lambda e: e.L)
                event = Arrest(L_min=m.L, t_min=m.t, t_escape=float(Y[0]))
            else:
                event = Defocus(t_escape=float(Y[0]))
            break
        if ctrl.stop_after_extrema and len(extrema) >= ctrl.stop_after_extrema:
            osc = _oscillation(extrema, ctrl.extremum_tol, ctrl.oscillation_extrema)
            if osc is not None:
                event = osc
                break
        if Y[0] >= t_end:
            osc = _oscillation(extrema, ctrl.extremum_tol, ctrl.oscillation_extrema)
            event = osc if osc is not None else HorizonReached(t_end=float(Y[0]))
            break

        fac = 0.9 * max(en, 1e-10) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
        h = h_used * min(5.0, max(0.2, fac))
        err_prev = max(en, 1e-4)

    if drift is not None and ctrl.drift_bound is not None and not isinstance(event, Collapse):
        if drift > ctrl.drift_bound:
            raise IdentityViolation(f"first-integral drift {drift:.3e} exceeds {ctrl.drift_bound:.1e}")
    series = np.array(rows) if rows else np.empty((0, len(TRAJECTORY_COLUMNS)))
    return SimulationOutcome(
        series=series,
        event=event,
        first_integral_drift=drift,
        steps_taken=taken,
        steps_rejected=rejected,
        extrema=extrema,
        final=_state(Y, spec) if not isinstance(event, Collapse) else _state(Yc, spec) if Yc is not None else None,
    )


# ---------------------------------------------------------------- f2 structure


def f2_integrand(p: SolitonProfile, L: float, alpha: float, dL: float = 0.0, tau: float = 0.0) -> np.ndarray:
    """Pointwise psi_R^* F(psi_R) on the physical radial grid r = L rho.

    F(psi_R) = psi_R Delta u_R with Delta u_R = (u_R - |psi_R|^2) / alpha^2 and
    u_R(x) = w(x/L)/L^2. Assembled in complex arithmetic so that a
    vanishing imaginary part is checked rather than assumed.
    """
    from .helmholtz import solve_radial_helmholtz

    r = L * p.r
    S = tau + dL / L * r * r / 4
    psi = p.R / L * np.exp(1j * S)
    u = solve_radial_helmholtz(p, alpha / L).w / L ** 2
    lap_u = (u - p.R ** 2 / L ** 2) / alpha ** 2
    # psi^* psi written out in real arithmetic: numpy's complex product may use
    # fused multiply-adds, which leave rounding residue in ar*ai - ai*ar
    ar, ai = psi.real, psi.imag
    density = (ar * ar + ai * ai) + 1j * (ar * ai - ai * ar)
    return density * lap_u
