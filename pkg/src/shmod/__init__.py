"""Modulation theory of the critical nonlinear Schrodinger-Helmholtz equation."""
from .dynamics import ModelSpec, ReducedState, StepControl, integrate
from .functionals import ModulationConstants, compute_all
from .helmholtz import f1_exact
from .regime import classify, threshold_bisect
from .soliton import SolitonConfig, SolitonProfile, solve_townes

__version__ = "0.1.0"

__all__ = [
    "ModelSpec",
    "ModulationConstants",
    "ReducedState",
    "SolitonConfig",
    "SolitonProfile",
    "StepControl",
    "classify",
    "compute_all",
    "f1_exact",
    "integrate",
    "solve_townes",
    "threshold_bisect",
]
