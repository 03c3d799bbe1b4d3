import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ORACLE_C1_HALF, ORACLE_M_HALF, ORACLE_NC_HALF
from shmod.errors import IdentityViolation
from shmod.functionals import (
    C1_BOUND,
    C2_BOUND,
    C3_BOUND,
    DualConstant,
    ModulationConstants,
    compute_all,
    compute_C1,
    compute_C2,
    compute_C3,
    compute_M,
    compute_Nc,
)


def test_Nc_against_half_resolution_trapezoid(constants):
    assert constants.Nc == pytest.approx(ORACLE_NC_HALF, rel=1e-4)
    assert constants.Nc == pytest.approx(1.862, abs=1e-3)


def test_M_in_reference_band(constants):
    assert 0.54 <= constants.M <= 0.56
    assert constants.M == pytest.approx(ORACLE_M_HALF, rel=1e-6)


def test_C1_against_half_resolution_oracle(constants):
    assert constants.C1.value_ibp == pytest.approx(ORACLE_C1_HALF, rel=1e-6)


def test_dual_forms_within_bounds(constants):
    assert constants.C1.rel_discrepancy < C1_BOUND
    assert constants.C2.rel_discrepancy < C2_BOUND
    assert constants.C3.rel_discrepancy < C3_BOUND


def test_all_positive(constants):
    for v in (constants.Nc, constants.M, constants.P4, constants.C1.value, constants.C2.value, constants.C3.value):
        assert v > 0
    for c in (constants.C1, constants.C2, constants.C3):
        assert c.value_direct > 0 and c.value_ibp > 0


def test_pohozaev(constants):
    a, b = constants.pohozaev_residuals
    assert a < 1e-6 and b < 1e-6


def test_collapse_beta(constants):
    c = constants
    assert c.collapse_beta == pytest.approx(c.C1.value ** 2 / (8 * c.M * c.C2.value), rel=1e-15)


def test_discrepancies_converge_at_order_two(profiles_refined):
    discs = [[f(p, bound=None).rel_discrepancy for f in (compute_C1, compute_C2, compute_C3)] for p in profiles_refined]
    for coarse, fine in zip(discs, discs[1:]):
        for a, b in zip(coarse, fine):
            assert b < a / 4


def test_quadrature_convergence(profiles_refined):
    a, b = profiles_refined[-2:]
    ca, cb = compute_all(a), compute_all(b)
    for x, y in zip(
        (ca.Nc, ca.M, ca.P4, ca.C1.value, ca.C2.value, ca.C3.value),
        (cb.Nc, cb.M, cb.P4, cb.C1.value, cb.C2.value, cb.C3.value),
    ):
        assert abs(x - y) / abs(y) < 1e-7


def test_zero_profile(profile):
    z = profile.scaled(0.0)
    c = compute_all(z)
    assert c.Nc == 0 and c.M == 0 and c.P4 == 0
    for d in (c.C1, c.C2, c.C3):
        assert d.value_direct == 0 and d.value_ibp == 0 and d.rel_discrepancy == 0
    assert c.pohozaev_residuals == (0.0, 0.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 3.0))
def test_quadratic_functionals_scale(profile, lam):
    # Nc and M are quadratic in R
    assert compute_Nc(profile.scaled(lam)) == pytest.approx(lam ** 2 * compute_Nc(profile), rel=1e-12)
    assert compute_M(profile.scaled(lam)) == pytest.approx(lam ** 2 * compute_M(profile), rel=1e-12)


def test_Nc_equals_planar_integral_over_2pi(profile, constants):
    # (1/2pi) int R^2 dx over a Cartesian grid
    x = np.linspace(-12, 12, 801)
    X, Y = np.meshgrid(x, x)
    rr = np.hypot(X, Y)
    f = np.interp(rr, profile.r, profile.R) ** 2
    dx = x[1] - x[0]
    assert f.sum() * dx * dx / (2 * np.pi) == pytest.approx(constants.Nc, rel=1e-4)


def test_identity_violation_raised(profile):
    # a rescaled profile is no longer a soliton, so the C1 dual-form identity fails
    bent = profile.scaled(1.3)
    with pytest.raises(IdentityViolation):
        compute_C1(bent)
    with pytest.raises(IdentityViolation):
        compute_all(bent)


def test_dual_constant_guard():
    assert DualConstant(0.0, 0.0).rel_discrepancy == 0.0
    d = DualConstant(1.0, 2.0)
    assert d.rel_discrepancy == 0.5
    assert d.to_dict() == {"direct": 1.0, "ibp": 2.0, "disc": 0.5}


def test_json_roundtrip(constants, tmp_path):
    constants.write_json(tmp_path / "c.json")
    d = json.loads((tmp_path / "c.json").read_text())
    assert set(d) >= {"Nc", "M", "P4", "C1", "C2", "C3", "grad_norm", "pohozaev_residuals"}
    back = ModulationConstants.from_dict(d)
    assert back.C3.value_direct == constants.C3.value_direct
    assert back.M == constants.M
