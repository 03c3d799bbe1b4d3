import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from shmod.errors import EpsOutOfRange, QuadratureBudgetExceeded
from shmod.helmholtz import (
    F1_TABLE_COLUMNS,
    f1_direct,
    f1_exact,
    f1_kernel_crosscheck,
    f1_table,
    helmholtz_solve,
    solve_radial_helmholtz,
    write_f1_table,
)
from shmod.soliton import laplacian_of_R2


def test_zero_source_gives_zero(profile):
    sol = helmholtz_solve(profile.r, np.zeros_like(profile.r), 0.3)
    assert np.all(sol.w == 0)


def test_eps_validation(profile):
    for bad in (0.0, -0.1, float("nan")):
        with pytest.raises(EpsOutOfRange):
            solve_radial_helmholtz(profile, bad)


def test_first_order_expansion(profile):
    eps = 0.01
    sol = solve_radial_helmholtz(profile, eps)
    assert sol.solver_residual < 1e-8
    lap = np.array([laplacian_of_R2(profile, i) for i in range(0, profile.r.size, 5)])
    ratio = np.max(np.abs(sol.w - profile.R ** 2)) / np.max(np.abs(lap))
    assert ratio == pytest.approx(eps ** 2, rel=0.2)


def test_eps_to_zero_is_second_order(profile):
    errs = [np.max(np.abs(solve_radial_helmholtz(profile, e).w - profile.R ** 2)) for e in (0.04, 0.02, 0.01)]
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("eps", [1e-3, 0.05, 0.5, 2.0])
def test_positivity_and_decay(profile, eps):
    from scipy.special import k0

    sol = solve_radial_helmholtz(profile, eps)
    assert np.all(sol.w > 0)
    # the tail follows whichever of the source R^2 ~ exp(-2 rho) and the
    # Green function K0(rho/eps) decays more slowly
    i, j = 20000, 24000
    if eps > 0.5:
        expected = k0(profile.r[j] / eps) / k0(profile.r[i] / eps)
    elif eps < 0.5:
        expected = (profile.R[j] / profile.R[i]) ** 2
    else:
        return
    assert sol.w[j] / sol.w[i] == pytest.approx(expected, rel=1e-2)


def test_green_normalisation_oracle():
    # the 2D Bessel Green function has unit mass, the reason w keeps the mass of R^2
    assert oracles.bessel_helmholtz_1d_check(0.05) == pytest.approx(1.0, abs=1e-9)


def test_mass_preserved(profile):
    sol = solve_radial_helmholtz(profile, 0.3)
    m0 = np.trapezoid(profile.R ** 2 * profile.r, profile.r)
    m1 = np.trapezoid(sol.w * profile.r, profile.r)
    assert m1 == pytest.approx(m0, rel=1e-5)


def test_leading_order_dominance(profile, constants):
    ev = f1_exact(profile, constants, 1.0, 0.01)
    assert 0.99 <= ev.f1_exact / ev.f1_order1 <= 1.01
    assert ev.f1_exact < 0


def test_next_order_is_small(profile, constants):
    ev = f1_exact(profile, constants, 10.0, 0.01)
    assert abs(ev.f1_exact - ev.f1_order3) / abs(ev.f1_order3 - ev.f1_order2) < 0.1


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 20.0))
def test_scaling(profile, constants, lam):
    base = f1_exact(profile, constants, 1.0, 0.02).f1_exact
    scaled = f1_exact(profile, constants, lam, lam * 0.02).f1_exact
    assert scaled * lam ** 2 == pytest.approx(base, rel=1e-12)


def test_scaling_factor_two_exact(profile, constants):
    base = f1_exact(profile, constants, 1.0, 0.02).f1_exact
    assert f1_exact(profile, constants, 2.0, 0.04).f1_exact * 4 == base


@pytest.mark.parametrize("eps", [1e-3, 5e-3, 1e-2, 5e-2])
def test_truncation_ordering(profile, constants, eps):
    e1, e2, e3 = f1_exact(profile, constants, 1.0, eps).rel_errors()
    assert e3 < e2 < e1


def test_richardson_slopes(profile, constants):
    L, alpha = 1.0, 1e-3
    ev = f1_exact(profile, constants, L, alpha)
    s2 = (ev.f1_exact - ev.f1_order1) * L ** 4 / alpha ** 2
    s3 = (ev.f1_exact - ev.f1_order2) * L ** 6 / alpha ** 4
    assert s2 == pytest.approx(constants.C2.value, rel=0.02)
    assert s3 == pytest.approx(-constants.C3.value, rel=0.05)


def test_direct_solve_agrees_at_moderate_eps(profile, constants):
    # the two routes differ by the O(h^2) error of the direct solve
    ev = f1_exact(profile, constants, 1.0, 0.1)
    assert f1_direct(profile, 1.0, 0.1) == pytest.approx(ev.f1_exact, rel=1e-5)


def test_expansion_warning(profile, constants):
    assert not f1_exact(profile, constants, 1.0, 0.05).expansion_warning
    assert f1_exact(profile, constants, 1.0, 0.2).expansion_warning


def test_kernel_crosscheck_within_one_percent(profile, constants):
    ev = f1_exact(profile, constants, 1.0, 0.01)
    k = f1_kernel_crosscheck(profile, 1.0, 0.01)
    assert abs(k - ev.f1_exact) / abs(ev.f1_exact) < 0.01


def test_kernel_zero_profile(profile):
    assert f1_kernel_crosscheck(profile.scaled(0.0), 1.0, 0.01) == 0.0


def test_kernel_degrades_with_fewer_nodes(profile, constants):
    eps = 0.2
    ref = f1_exact(profile, constants, 1.0, eps).f1_exact
    errs = [abs(f1_kernel_crosscheck(profile, 1.0, eps, n_quad=n) - ref) for n in (32, 16, 8, 4)]
    assert all(a <= b for a, b in zip(errs, errs[1:]))


def test_kernel_budget(profile):
    with pytest.raises(QuadratureBudgetExceeded):
        f1_kernel_crosscheck(profile, 1.0, 0.01, max_evals=1000)
    with pytest.raises(QuadratureBudgetExceeded):
        f1_kernel_crosscheck(profile, 1.0, 1e-4)


def test_f1_table(profile, constants, tmp_path):
    rows = f1_table(profile, constants, [1e-3, 1e-2])
    write_f1_table(rows, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == ",".join(F1_TABLE_COLUMNS)
    assert len(lines) == 3
