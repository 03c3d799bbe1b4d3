"""Townes soliton: the positive radial ground state of R'' + R'/r - R + R^3 = 0.

R(0) is found by shooting. Trajectories are classified by their first event
(R' turning positive means R(0) was too low, a zero crossing means too high;
profiles with nodes belong to excited states at larger R(0)),
the bracket is bisected, and the estimate is then polished by a safeguarded
secant on a tail-matching residual. Beyond the matching radius the profile
is continued with the decaying solution c*K0(r) of the linearised equation;
in double precision a pure outward shot cannot stay on the decaying branch
much past r ~ 17 because the growing mode is amplified like exp(2r).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import BracketError, GridError, NoConvergence

__all__ = [
    "SolitonConfig",
    "SolitonProfile",
    "solve_townes",
    "origin_series",
    "second_derivative",
    "laplacian_of_R2",
    "classify_shot",
]

# Secant polish is done in stages so that each stage starts inside the
# linear regime of the residual; the last radius is where the profile
# hands over to the Bessel tail.
_MATCH_RADII = (5.0, 8.0, 9.0)
# inside this radius the even power series is exact to rounding and is used
# instead of RK4, whose error constant blows up near the 1/r coefficient
SERIES_RADIUS = 0.25


@dataclass(frozen=True)
class SolitonConfig:
    r_max: float = 25.0
    grid_step: float = 1e-3
    shoot_tol: float = 1e-12
    bracket_lo: float = 2.0
    bracket_hi: float = 2.5
    max_iter: int = 200

    def __post_init__(self):
        for name in ("r_max", "grid_step", "shoot_tol", "bracket_lo", "bracket_hi"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise GridError(f"{name} must be a finite number, got {v!r}")
        if self.r_max <= 0:
            raise GridError("r_max must be positive")
        if self.grid_step <= 0:
            raise GridError("grid_step must be positive")
        if self.shoot_tol <= 0:
            raise GridError("shoot_tol must be positive")
        if self.max_iter < 1:
            raise GridError("max_iter must be at least 1")
        if self.grid_step * 8 > self.r_max:
            raise GridError("grid too coarse for r_max")

    @property
    def n_intervals(self) -> int:
        return int(round(self.r_max / self.grid_step))


@dataclass(frozen=True, eq=False)
class SolitonProfile:
    """Radial samples of the Townes profile on a uniform grid starting at 0."""

    r: np.ndarray
    R: np.ndarray
    dR: np.ndarray
    R0: float
    tail_coeff: float
    residual_max: float
    r_match: float = float("nan")
    config: SolitonConfig = field(default_factory=SolitonConfig)

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def d2R(self) -> np.ndarray:
        """R'' from the ODE closure at every node (origin uses the symmetric limit)."""
        out = np.empty_like(self.R)
        R, P, r = self.R, self.dR, self.r
        out[1:] = R[1:] - R[1:] ** 3 - P[1:] / r[1:]
        out[0] = 0.5 * (R[0] - R[0] ** 3)
        return out

    def scaled(self, factor: float) -> "SolitonProfile":
        """Return a copy with R and R' multiplied by ``factor`` (not a soliton)."""
        return SolitonProfile(
            r=self.r, R=self.R * factor, dR=self.dR * factor, R0=self.R0 * factor,
            tail_coeff=self.tail_coeff * factor, residual_max=float("nan"),
            r_match=self.r_match, config=self.config,
        )

    def metadata(self) -> dict:
        return {
            "R0": self.R0,
            "r_max": float(self.r[-1]),
            "grid_step": self.h,
            "tail_coeff": self.tail_coeff,
            "residual_max": self.residual_max,
        }

    def write_csv(self, path) -> None:
        data = np.column_stack([self.r, self.R, self.dR])
        np.savetxt(path, data, delimiter=",", header="r,R,dR", comments="", fmt="%.16e")

    def write_metadata(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def origin_series(R0: float, nterms: int = 40) -> np.ndarray:
    """Coefficients a_k of R(r) = sum_k a_k r^(2k) near the origin.

    Follows from Delta r^(2k) = 4k^2 r^(2k-2) applied to Delta R = R - R^3.
    """
    a = np.zeros(nterms)
    a[0] = R0
    sq = np.zeros(nterms)  # coefficients of R^2
    sq[0] = R0 * R0
    for k in range(nterms - 1):
        cube_k = float(np.dot(sq[: k + 1], a[k::-1]))
        a[k + 1] = (a[k] - cube_k) / (4.0 * (k + 1) ** 2)
        sq[k + 1] = float(np.dot(a[: k + 2], a[k + 1 :: -1]))
    return a


def series_eval(a: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate R and R' from even-power coefficients ``a`` (Horner in r^2)."""
    r = np.asarray(r, dtype=float)
    x = r * r
    R = np.zeros_like(r)
    D = np.zeros_like(r)
    for k in range(a.size - 1, 0, -1):
        R = R * x + a[k]
        D = D * x + 2 * k * a[k]
    R = R * x + a[0]
    # D holds sum 2k a_k x^(k-1); R' = r * D
    return R, r * D


def _seed_index(h: float) -> int:
    return max(1, int(SERIES_RADIUS / h))


def _integrate(R0, h, n_steps, stop_on_event=True, record=False):
    """Series up to SERIES_RADIUS, then fixed-step classical RK4 to n_steps*h.

    Returns (event, index, R, P, Rs, Ps). ``event`` is "low", "high",
    "blowup" or None; ``index`` is the grid index reached.
    """
    i = min(_seed_index(h), n_steps)
    Rser, Pser = series_eval(origin_series(R0), np.arange(i + 1) * h)
    R = float(Rser[-1])
    P = float(Pser[-1])
    Rs = Rser.tolist() if record else None
    Ps = Pser.tolist() if record else None
    hh = 0.5 * h
    h6 = h / 6.0
    while i < n_steps:
        r = i * h
        rm = r + hh
        rp = r + h
        k1R = P
        k1P = R - R * R * R - P / r
        R2 = R + hh * k1R
        P2 = P + hh * k1P
        k2R = P2
        k2P = R2 - R2 * R2 * R2 - P2 / rm
        R3 = R + hh * k2R
        P3 = P + hh * k2P
        k3R = P3
        k3P = R3 - R3 * R3 * R3 - P3 / rm
        R4 = R + h * k3R
        P4 = P + h * k3P
        k4R = P4
        k4P = R4 - R4 * R4 * R4 - P4 / rp
        R = R + h6 * (k1R + 2.0 * (k2R + k3R) + k4R)
        P = P + h6 * (k1P + 2.0 * (k2P + k3P) + k4P)
        i += 1
        if record:
            Rs.append(R)
            Ps.append(P)
        if stop_on_event:
            if R < 0.0:
                return "high", i, R, P, Rs, Ps
            if P > 0.0:
                return "low", i, R, P, Rs, Ps
        elif not (abs(R) < 1e6):
            return "blowup", i, R, P, Rs, Ps
    return None, i, R, P, Rs, Ps


def classify_shot(R0: float, h: float, r_end: float) -> str | None:
    """First event of the outward shot from R(0)=R0: 'low', 'high' or None."""
    event, *_ = _integrate(R0, h, int(round(r_end / h)))
    return event


def _tail_logderiv(r: float) -> float:
    # d/dr log K0(r) = -K1(r)/K0(r)
    return -special.k1e(r) / special.k0e(r)


def _match_residual(R0, h, m):
    """P - (K0'/K0) R at r = m*h; positive when R(0) is below the root."""
    event, _, R, P, _, _ = _integrate(R0, h, m, stop_on_event=False)
    if event == "blowup":
        return math.copysign(math.inf, R)
    return P - _tail_logderiv(m * h) * R


def _polish(x0, x1, lo, hi, fun, tol, max_iter):
    """Secant iteration kept inside [lo, hi]; falls back to bisection."""
    f0 = fun(x0)
    f1 = fun(x1)
    it = 0
    while it < max_iter:
        it += 1
        if f1 == 0.0:
            return x1, it
        if f1 != f0 and math.isfinite(f0) and math.isfinite(f1):
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        else:
            x2 = 0.5 * (lo + hi)
        if not (lo < x2 < hi):
            x2 = 0.5 * (lo + hi)
        f2 = fun(x2)
        # residual is positive below the root, negative above it
        if f2 > 0:
            lo = max(lo, x2)
        elif f2 < 0:
            hi = min(hi, x2)
        if abs(x2 - x1) <= tol * abs(x2):
            return x2, it
        x0, f0, x1, f1 = x1, f1, x2, f2
    raise NoConvergence(f"secant polish did not converge in {max_iter} iterations")


def solve_townes(cfg: SolitonConfig | None = None) -> SolitonProfile:
    """Shoot for the Townes ground state and return it on a uniform grid."""
    cfg = cfg or SolitonConfig()
    h = cfg.grid_step
    n = cfg.n_intervals
    r_max = n * h
    # the event scan never needs to look further than the matching radius
    scan_end = min(r_max, 20.0)

    lo, hi = float(cfg.bracket_lo), float(cfg.bracket_hi)
    ev_lo = classify_shot(lo, h, scan_end)
    ev_hi = classify_shot(hi, h, scan_end)
    if not (lo < hi) or ev_lo == ev_hi or ev_lo != "low" or ev_hi != "high":
        raise BracketError(
            f"bracket [{lo}, {hi}] does not straddle the ground state "
            f"(events {ev_lo!r}, {ev_hi!r})"
        )

    it = 0
    while hi - lo > 1e-6:
        it += 1
        if it > cfg.max_iter:
            raise NoConvergence("bisection exhausted max_iter")
        mid = 0.5 * (lo + hi)
        ev = classify_shot(mid, h, scan_end)
        if ev == "low":
            lo = mid
        elif ev == "high":
            hi = mid
        else:
            lo = hi = mid
            break

    x = 0.5 * (lo + hi)
    radii = [rm for rm in _MATCH_RADII if rm <= 0.8 * r_max] or [0.5 * r_max]
    # every stage root lies inside the bisection bracket; widen it slightly
    # so the secant never has to sit on an endpoint
    lo, hi = lo - 1e-7, hi + 1e-7
    step = 0.25 * (hi - lo)
    for rm in radii:
        m = int(round(rm / h))
        budget = cfg.max_iter - it
        if budget <= 0:
            raise NoConvergence("secant polish exhausted max_iter")
        x, used = _polish(
            x, x + step, lo, hi,
            lambda v: _match_residual(v, h, m), cfg.shoot_tol, budget,
        )
        it += used
        step = 1e-10
    R0 = x

    m = int(round(radii[-1] / h))
    _, _, _, _, Rs, Ps = _integrate(R0, h, m, stop_on_event=False, record=True)
    r = np.arange(n + 1) * h
    R = np.empty(n + 1)
    P = np.empty(n + 1)
    R[: m + 1] = Rs
    P[: m + 1] = Ps
    r_match = m * h
    c = R[m] / special.k0(r_match)
    rt = r[m + 1 :]
    R[m + 1 :] = c * special.k0(rt)
    P[m + 1 :] = -c * special.k1(rt)

    # tail amplitude for R ~ C exp(-r)/sqrt(r): centre of the ratio band over
    # the last five radial units keeps the relative misfit near 1/(16 r)
    win = r >= r_max - 5.0
    q = R[win] * np.exp(r[win]) * np.sqrt(r[win])
    tail_coeff = 0.5 * (float(q.min()) + float(q.max()))

    profile = SolitonProfile(
        r=r, R=R, dR=P, R0=float(R0), tail_coeff=tail_coeff,
        residual_max=float("nan"), r_match=r_match, config=cfg,
    )
    object.__setattr__(profile, "residual_max", fd_residual(profile))
    return profile


def fd_residual(p: SolitonProfile) -> float:
    """max |R'' + R'/r - R + R^3| with R'' from a 4th-order central difference."""
    R, P, r, h = p.R, p.dR, p.r, p.h
    d2 = (-R[4:] + 16 * R[3:-1] - 30 * R[2:-2] + 16 * R[1:-3] - R[:-4]) / (12 * h * h)
    ri = r[2:-2]
    Ri = R[2:-2]
    res = d2 + P[2:-2] / ri - Ri + Ri ** 3
    return float(np.max(np.abs(res)))


def _check_index(p: SolitonProfile, i: int) -> int:
    n = p.r.size
    if not isinstance(i, (int, np.integer)) or i < 0 or i >= n:
        raise IndexError(f"grid index {i} outside [0, {n - 1}]")
    return int(i)


def second_derivative(p: SolitonProfile, i: int) -> float:
    i = _check_index(p, i)
    R = p.R[i]
    if i == 0:
        return 0.5 * (R - R ** 3)
    return R - R ** 3 - p.dR[i] / p.r[i]


def laplacian_of_R2(p: SolitonProfile, i: int) -> float:
    """Radial Laplacian of R^2 at node i, via (R^2)'' + (R^2)'/r and the closure."""
    i = _check_index(p, i)
    R = p.R[i]
    P = p.dR[i]
    R2dd = second_derivative(p, i)
    if i == 0:
        # Delta f(0) = 2 f''(0), f'' = 2R'^2 + 2 R R''
        return 2.0 * (2.0 * P * P + 2.0 * R * R2dd)
    return 2.0 * P * P + 2.0 * R * R2dd + 2.0 * R * P / p.r[i]
