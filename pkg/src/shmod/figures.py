"""Reference parameter sets fig1a ... fig4c for L(t) runs.

Every recipe is resolved against a set of modulation constants, because
several parameter choices are defined relative to them (r_low, the o2
collapse level of beta0). Where the nominal parameters cannot produce the
intended regime with the computed constants, the recipe keeps the regime,
moves the parameter and records why in ``deviation``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .dynamics import ModelSpec, ReducedState, StepControl
from .functionals import ModulationConstants
from .regime import o2_roots

FIGURES = ("fig1a", "fig1b", "fig1c", "fig2", "fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c")
RECIPE_VERSION = 1

ALPHA = 0.01
BETA0 = 0.01
SMALL_EPS = 1e-3
NOMINAL_OSC_EPS = 1 / 8
FIG2_L0 = 0.1
FIG2_DL0 = -2.0
FIG3C_DL0 = -60.0


@dataclass(frozen=True)
class FigureRecipe:
    name: str
    order: str
    alpha: float
    beta0: float
    L0: float
    dLt0: float
    t_max: float
    expected: str
    deviation: str | None = None
    version: int = RECIPE_VERSION

    @property
    def eps0(self) -> float:
        return self.alpha / self.L0

    def spec(self, constants: ModulationConstants, profile=None) -> ModelSpec:
        return ModelSpec(self.order, self.alpha, self.beta0, constants, profile=profile)

    def init(self) -> ReducedState:
        return ReducedState(0.0, self.L0, self.dLt0)

    def control(self) -> StepControl:
        return StepControl(t_max=self.t_max)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps0"] = self.eps0
        return d


def oscillation_eps(constants: ModulationConstants, beta0: float = BETA0) -> float:
    """Half of the largest alpha/L(0) for which H0 < 0 at L_t(0) = 0 in the o1 law."""
    return 0.5 * math.sqrt(4 * constants.M * beta0 / constants.C1.value)


def _horizon(L0: float) -> float:
    # long enough for L to reach 1e3 L(0) at unit escape speed
    return 1e4 * L0 * L0


def figure_recipe(name: str, constants: ModulationConstants) -> FigureRecipe:
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r}; expected one of {FIGURES}")
    order = {"1": "o1", "2": "o2", "3": "o2", "4": "o3"}[name[3]]
    panel = name[4:]

    if name == "fig2":
        beta0 = 2 * constants.collapse_beta
        return FigureRecipe(
            name, order, ALPHA, beta0, FIG2_L0, FIG2_DL0, _horizon(FIG2_L0), "Collapse",
            deviation=(
                f"beta0 set to 2*C1^2/(8 M C2) = {beta0:.6g}, above the collapse level, "
                "instead of an unspecified beta0 >> 1"
            ),
        )

    if name.startswith("fig3"):
        _, r_low, _ = o2_roots(BETA0, constants.C1.value, constants.C2.value, constants.M)
        L0 = ALPHA / (r_low / 2)
        dL0, expected = {"a": (1.0, "MonotoneDefocus"), "b": (0.0, "Oscillation"),
                         "c": (FIG3C_DL0, "Collapse")}[panel]
        return FigureRecipe(name, order, ALPHA, BETA0, L0, dL0, _horizon(L0), expected)

    if panel in ("a", "b"):
        L0 = ALPHA / SMALL_EPS
        dL0, expected = (1.0, "MonotoneDefocus") if panel == "a" else (-1.0, "ArrestThenDefocus")
        return FigureRecipe(name, order, ALPHA, BETA0, L0, dL0, _horizon(L0), expected)

    eps0 = oscillation_eps(constants)
    L0 = ALPHA / eps0
    return FigureRecipe(
        name, order, ALPHA, BETA0, L0, 0.0, _horizon(L0), "Oscillation",
        deviation=(
            f"alpha/L(0) = {eps0:.6g} instead of {NOMINAL_OSC_EPS}: with the computed C1 and M, "
            f"H0 < 0 at L_t(0) = 0 requires alpha/L(0) < {2 * eps0:.6g}, so alpha/L(0) = 1/8 "
            "gives H0 > 0 and a defocusing trajectory"
        ),
    )


def nominal_recipe(name: str, constants: ModulationConstants) -> FigureRecipe:
    """The oscillation panels at the nominal alpha/L(0) = 1/8, for comparison runs."""
    base = figure_recipe(name, constants)
    if name not in ("fig1c", "fig4c"):
        return base
    L0 = ALPHA / NOMINAL_OSC_EPS
    return FigureRecipe(name + "-nominal", base.order, ALPHA, BETA0, L0, 0.0, _horizon(L0), "Oscillation")
