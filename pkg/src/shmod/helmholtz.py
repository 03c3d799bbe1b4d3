"""The nonlocal modulation functional f1 of the Schrodinger-Helmholtz system.

In soliton-scaled variables the Helmholtz potential is u_R(x) = w(x/L)/L^2
with

    w - eps^2 (w'' + w'/rho) = R^2,    eps = alpha / L,

and the projection onto the soliton direction reduces to

    f1 = (2/alpha^2) int_0^inf (w - R^2) R (R + rho R') rho drho.

Three independent routes are provided:

* ``f1_exact``: the production value. The resolvent is peeled three times,
  (I - eps^2 D)^-1 = I + eps^2 D + eps^4 D^2 + eps^6 D^3 (I - eps^2 D)^-1,
  so the first two corrections come from the exact closure fields and only
  the remainder goes through a finite-difference solve. This keeps the
  O(eps^4) content resolvable at eps ~ 1e-3, where a direct solve loses it
  to O(h^2) discretisation error.
* ``f1_direct``: the same formula with w from a single direct solve.
* ``f1_kernel_crosscheck``: w from the heat-kernel representation of the
  resolvent, with no finite differences at all.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg, special

from .errors import EpsOutOfRange, QuadratureBudgetExceeded, SingularSystem
from .functionals import ModulationConstants
from .radial import radial_fields
from .soliton import SolitonProfile

EXPANSION_WARN_EPS = 0.1


@dataclass(frozen=True, eq=False)
class HelmholtzSolution:
    eps: float
    rho: np.ndarray
    w: np.ndarray
    solver_residual: float


@dataclass(frozen=True)
class F1Evaluation:
    L: float
    alpha: float
    f1_exact: float
    f1_order1: float
    f1_order2: float
    f1_order3: float

    @property
    def eps(self) -> float:
        return self.alpha / self.L

    @property
    def expansion_warning(self) -> bool:
        """The series is being used outside the regime it was derived for."""
        return self.eps > EXPANSION_WARN_EPS

    def rel_errors(self) -> tuple[float, float, float]:
        ref = abs(self.f1_exact)
        return tuple(abs(self.f1_exact - v) / ref for v in (self.f1_order1, self.f1_order2, self.f1_order3))


def _check_eps(eps):
    if not (eps > 0) or not math.isfinite(eps):
        raise EpsOutOfRange(f"eps must be a positive finite number, got {eps!r}")


def _operator_bands(rho: np.ndarray, eps: float) -> np.ndarray:
    """Banded form of I - eps^2 Delta_h with w'(0)=0 and a Bessel-decay Robin end."""
    n = rho.size
    h = rho[1] - rho[0]
    e2 = eps * eps
    ab = np.zeros((3, n))
    inv_h2 = 1.0 / (h * h)
    ab[1, 0] = 1.0 + 4 * e2 * inv_h2
    ab[0, 1] = -4 * e2 * inv_h2
    r = rho[1:-1]
    ab[1, 1:-1] = 1.0 + 2 * e2 * inv_h2
    ab[0, 2:] = -e2 * (inv_h2 + 0.5 / (h * r))
    ab[2, :-2] = -e2 * (inv_h2 - 0.5 / (h * r))
    # ghost node eliminated with w' = -gamma w, gamma from K0 decay
    r_end = rho[-1]
    gamma = 1.0 / eps + 0.5 / r_end
    ab[1, -1] = 1.0 + e2 * (2 + 2 * h * gamma) * inv_h2 + e2 * gamma / r_end
    ab[2, -2] = -2 * e2 * inv_h2
    return ab


def _apply_operator(ab: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = ab[1] * w
    out[:-1] += ab[0, 1:] * w[1:]
    out[1:] += ab[2, :-1] * w[:-1]
    return out


def helmholtz_solve(rho: np.ndarray, source: np.ndarray, eps: float) -> HelmholtzSolution:
    """Solve w - eps^2 (w'' + w'/rho) = source on a uniform grid starting at 0."""
    _check_eps(eps)
    ab = _operator_bands(rho, eps)
    try:
        w = linalg.solve_banded((1, 1), ab, source, check_finite=True)
    except linalg.LinAlgError as exc:
        raise SingularSystem(f"tridiagonal elimination failed at eps={eps!r}: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise SingularSystem(f"non-finite Helmholtz solution at eps={eps!r}")
    resid = _apply_operator(ab, w) - source
    scale = max(float(np.max(np.abs(source))), 1e-300)
    return HelmholtzSolution(eps=eps, rho=rho, w=w, solver_residual=float(np.max(np.abs(resid[1:-1]))) / scale)


def solve_radial_helmholtz(p: SolitonProfile, eps: float) -> HelmholtzSolution:
    return helmholtz_solve(p.r, p.R ** 2, eps)


def _projection(p: SolitonProfile, field: np.ndarray) -> float:
    """2 int field * R (R + rho R') rho drho."""
    F = radial_fields(p)
    return 2.0 * float(integrate.simpson(field * F.weight * F.rho, x=F.rho))


def remainder_integral(p: SolitonProfile, eps: float) -> float:
    """2 int [(I - eps^2 Delta)^-1 Delta^3 R^2] R (R + rho R') rho drho, tends to -C3."""
    F = radial_fields(p)
    z = helmholtz_solve(F.rho, F.phi3, eps).w
    return _projection(p, z)


def series_values(c: ModulationConstants, L: float, alpha: float) -> tuple[float, float, float]:
    e2 = (alpha / L) ** 2
    o1 = -c.C1.value / L ** 2
    o2 = o1 + c.C2.value * e2 / L ** 2
    o3 = o2 - c.C3.value * e2 * e2 / L ** 2
    return o1, o2, o3


def f1_exact(p: SolitonProfile, c: ModulationConstants, L: float, alpha: float) -> F1Evaluation:
    if not (L > 0) or not (alpha > 0):
        raise EpsOutOfRange(f"need L > 0 and alpha > 0, got L={L!r}, alpha={alpha!r}")
    eps = alpha / L
    _check_eps(eps)
    e2 = eps * eps
    exact = (-c.C1.value + e2 * c.C2.value + e2 * e2 * remainder_integral(p, eps)) / L ** 2
    o1, o2, o3 = series_values(c, L, alpha)
    return F1Evaluation(L=L, alpha=alpha, f1_exact=exact, f1_order1=o1, f1_order2=o2, f1_order3=o3)


def f1_direct(p: SolitonProfile, L: float, alpha: float) -> float:
    """f1 from one direct Helmholtz solve; accurate only while eps >> grid_step."""
    sol = solve_radial_helmholtz(p, alpha / L)
    return _projection(p, sol.w - p.R ** 2) / alpha ** 2


def _radial_heat(f: np.ndarray, r: np.ndarray, rho: float, t: float, h: float) -> tuple[float, int]:
    """int_0^inf K_t(rho, r) (f(r) - f(rho)) r dr for the 2D heat kernel, radially averaged.

    K_t(rho, r) = exp(-(rho - r)^2 / 4t) i0e(rho r / 2t) / (2t); the scaled
    Bessel function keeps the product finite. The integrand is r times an
    even function of r, so the trapezoid rule only needs the first
    Euler-Maclaurin correction at r = 0.
    """
    sigma = math.sqrt(2 * t)
    stride = max(1, int(sigma / (4 * h)))
    step = stride * h
    lo = max(0, int((rho - 10 * sigma) / step))
    hi = min(r.size - 1, int(math.ceil((rho + 10 * sigma) / h)))
    idx = np.arange(lo * stride, hi + 1, stride)
    rr = r[idx]
    frho = np.interp(rho, r, f)
    kern = np.exp(-((rho - rr) ** 2) / (4 * t)) * special.i0e(rho * rr / (2 * t)) / (2 * t)
    vals = kern * (f[idx] - frho) * rr
    total = step * (vals.sum() - 0.5 * (vals[0] + vals[-1]))
    if lo == 0:
        k0 = math.exp(-rho * rho / (4 * t)) / (2 * t)
        total += step * step / 12.0 * k0 * (f[0] - frho)
    return total, idx.size


def f1_kernel_crosscheck(
    p: SolitonProfile,
    L: float,
    alpha: float,
    n_quad: int = 20,
    outer_step: float = 0.02,
    outer_radius: float = 12.0,
    max_evals: int = 50_000_000,
) -> float:
    """f1 from the Bessel-potential form of the resolvent.

    (I - eps^2 Delta)^-1 f = int_0^inf e^{-s} H_{s eps^2} f ds with H_t the
    heat semigroup; the s-integral is done by Gauss-Laguerre quadrature and
    each heat average by a windowed trapezoid rule. The constant term of the
    double integral is removed inside the kernel integral (the normalised
    kernel has unit mass), which avoids subtracting two O(1/alpha^2) numbers.
    """
    if not (L > 0) or not (alpha > 0):
        raise EpsOutOfRange(f"need L > 0 and alpha > 0, got L={L!r}, alpha={alpha!r}")
    eps = alpha / L
    r, h = p.r, p.h
    f = p.R ** 2
    if not np.any(f):
        return 0.0
    nodes, weights = special.roots_laguerre(n_quad)
    sigma_min = math.sqrt(2 * nodes[0]) * eps
    if sigma_min < 2 * h:
        raise QuadratureBudgetExceeded(
            f"smallest kernel width {sigma_min:.3e} is below two grid steps ({2 * h:.1e}); "
            "use fewer Laguerre nodes or a finer profile"
        )
    stride = max(1, int(round(outer_step / h)))
    outer = np.arange(0, min(r.size, int(outer_radius / h) + 1), stride)
    if (outer.size - 1) % 2:
        outer = outer[:-1]
    budget = 0
    diff = np.zeros(outer.size)
    for j, i in enumerate(outer):
        acc = 0.0
        for s, wt in zip(nodes, weights):
            val, cost = _radial_heat(f, r, r[i], s * eps * eps, h)
            budget += cost
            acc += wt * val
        diff[j] = acc
        if budget > max_evals:
            raise QuadratureBudgetExceeded(f"kernel evaluations exceeded {max_evals}")
    rho = r[outer]
    g = p.R[outer] * (p.R[outer] + rho * p.dR[outer])
    return 2.0 * float(integrate.simpson(diff * g * rho, x=rho)) / alpha ** 2


F1_TABLE_COLUMNS = ("eps", "f1_exact", "f1_o1", "f1_o2", "f1_o3", "rel_err_o1", "rel_err_o2", "rel_err_o3")


def f1_table(p: SolitonProfile, c: ModulationConstants, eps_values, L: float = 1.0) -> list[tuple]:
    rows = []
    for eps in eps_values:
        ev = f1_exact(p, c, L, eps * L)
        rows.append((eps, ev.f1_exact, ev.f1_order1, ev.f1_order2, ev.f1_order3, *ev.rel_errors()))
    return rows


def write_f1_table(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(F1_TABLE_COLUMNS)
        for row in rows:
            out.writerow(["%.16e" % v for v in row])
