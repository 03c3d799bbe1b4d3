"""Scalar functionals of the Townes profile.

Each expansion constant is computed twice: once from the integral in which
it first appears (``value_direct``, iterated Laplacians of R^2 against
R (R + rho R')) and once from its integrated-by-parts closed form
(``value_ibp``). Agreement of the two is the executable form of the
simplification identities used for C1, C2 and C3.

All 2D integrals over the plane are radialised once:
(1/pi) * int_{R^2} f(|x|) dx = 2 * int_0^inf f(rho) rho drho.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import IdentityViolation
from .radial import radial_fields
from .soliton import SolitonProfile

# per-constant bounds on the dual-form relative discrepancy
C1_BOUND = 1e-6
C2_BOUND = 1e-5
C3_BOUND = 1e-4
POHOZAEV_BOUND = 1e-6


@dataclass(frozen=True)
class DualConstant:
    value_direct: float
    value_ibp: float

    @property
    def rel_discrepancy(self) -> float:
        return abs(self.value_direct - self.value_ibp) / max(abs(self.value_ibp), 1e-300)

    @property
    def value(self) -> float:
        """The form that appears term by term in the expansion of f1."""
        return self.value_direct

    def to_dict(self) -> dict:
        return {"direct": self.value_direct, "ibp": self.value_ibp, "disc": self.rel_discrepancy}


@dataclass(frozen=True)
class ModulationConstants:
    Nc: float
    M: float
    P4: float
    C1: DualConstant
    C2: DualConstant
    C3: DualConstant
    grad_norm: float

    @property
    def pohozaev_residuals(self) -> tuple[float, float]:
        if self.Nc == 0:
            return 0.0, 0.0
        return (abs(self.P4 - 2 * self.Nc) / self.Nc, abs(self.grad_norm - self.Nc) / self.Nc)

    @property
    def collapse_beta(self) -> float:
        """C1^2 / (8 M C2): above this beta0 the o2 law has no repulsive band."""
        return self.C1.value ** 2 / (8 * self.M * self.C2.value)

    def to_dict(self) -> dict:
        return {
            "Nc": self.Nc,
            "M": self.M,
            "P4": self.P4,
            "C1": self.C1.to_dict(),
            "C2": self.C2.to_dict(),
            "C3": self.C3.to_dict(),
            "grad_norm": self.grad_norm,
            "pohozaev_residuals": list(self.pohozaev_residuals),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModulationConstants":
        def dual(x):
            return DualConstant(float(x["direct"]), float(x["ibp"]))

        return cls(
            Nc=float(d["Nc"]), M=float(d["M"]), P4=float(d["P4"]),
            C1=dual(d["C1"]), C2=dual(d["C2"]), C3=dual(d["C3"]),
            grad_norm=float(d["grad_norm"]),
        )

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def radial_integral(p: SolitonProfile, integrand: np.ndarray) -> float:
    """Composite Simpson rule for int_0^r_max integrand(rho) drho on the profile grid."""
    return float(integrate.simpson(integrand, x=p.r))


def _tail_moment(p: SolitonProfile, power: int) -> float:
    """int_{r_max}^inf R^2 rho^power drho with R ~ c exp(-rho)/sqrt(rho)."""
    a = float(p.r[-1])
    m = power - 1  # R^2 rho^power = c^2 exp(-2 rho) rho^(power-1)
    upper_gamma = special.gamma(m + 1) * special.gammaincc(m + 1, 2 * a)
    return p.tail_coeff ** 2 * upper_gamma / 2 ** (m + 1)


def compute_Nc(p: SolitonProfile) -> float:
    return radial_integral(p, p.R ** 2 * p.r) + _tail_moment(p, 1)


def compute_M(p: SolitonProfile) -> float:
    return 0.25 * (radial_integral(p, p.R ** 2 * p.r ** 3) + _tail_moment(p, 3))


def compute_P4(p: SolitonProfile) -> float:
    return radial_integral(p, p.R ** 4 * p.r)


def compute_grad_norm(p: SolitonProfile) -> float:
    return radial_integral(p, p.dR ** 2 * p.r)


def _check(name, c: DualConstant, bound):
    if bound is not None and c.rel_discrepancy > bound:
        raise IdentityViolation(
            f"{name}: direct {c.value_direct!r} vs integrated-by-parts {c.value_ibp!r} "
            f"(relative discrepancy {c.rel_discrepancy:.3e} > {bound:.1e})"
        )
    return c


def compute_C1(p: SolitonProfile, bound: float | None = C1_BOUND) -> DualConstant:
    F = radial_fields(p)
    ibp = 2 * radial_integral(p, F.df ** 2 * F.rho)
    direct = -2 * radial_integral(p, F.phi1 * F.weight * F.rho)
    return _check("C1", DualConstant(direct, ibp), bound)


def compute_C2(p: SolitonProfile, bound: float | None = C2_BOUND) -> DualConstant:
    F = radial_fields(p)
    ibp = 3 * radial_integral(p, F.phi1 ** 2 * F.rho)
    direct = 2 * radial_integral(p, F.phi2 * F.weight * F.rho)
    return _check("C2", DualConstant(direct, ibp), bound)


def compute_C3(p: SolitonProfile, bound: float | None = C3_BOUND) -> DualConstant:
    F = radial_fields(p)
    ibp = 4 * radial_integral(p, F.dphi1 ** 2 * F.rho)
    direct = -2 * radial_integral(p, F.phi3 * F.weight * F.rho)
    return _check("C3", DualConstant(direct, ibp), bound)


def compute_all(p: SolitonProfile, check: bool = True) -> ModulationConstants:
    consts = ModulationConstants(
        Nc=compute_Nc(p),
        M=compute_M(p),
        P4=compute_P4(p),
        C1=compute_C1(p, C1_BOUND if check else None),
        C2=compute_C2(p, C2_BOUND if check else None),
        C3=compute_C3(p, C3_BOUND if check else None),
        grad_norm=compute_grad_norm(p),
    )
    if check:
        r4, rg = consts.pohozaev_residuals
        if r4 > POHOZAEV_BOUND or rg > POHOZAEV_BOUND:
            raise IdentityViolation(
                f"Pohozaev identities violated: |P4-2Nc|/Nc={r4:.3e}, |grad-Nc|/Nc={rg:.3e}"
            )
    return consts
