import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import ORACLE_R0_FINE
from shmod.errors import BracketError, GridError
from shmod.soliton import (
    SolitonConfig,
    classify_shot,
    laplacian_of_R2,
    origin_series,
    second_derivative,
    series_eval,
    solve_townes,
)


def test_R0_in_oracle_band(profile):
    assert 2.205 <= profile.R0 <= 2.208
    assert abs(profile.R0 - ORACLE_R0_FINE) < 1e-3


def test_R0_against_coarse_oracle_recomputed(profile):
    # cheap rerun of the naive RK4 shooter; its O(h^2) seed limits it to ~1e-4
    assert abs(profile.R0 - oracles.shoot_bisect_R0(h=1e-3, width=1e-6)) < 1e-3


def test_profile_positive_and_decreasing(profile):
    assert np.all(profile.R > 0)
    assert np.all(np.diff(profile.R) < 0)
    assert profile.dR[0] == 0.0


def test_residual_below_bound(profile):
    assert profile.residual_max < 1e-8


def test_r0_is_strict_threshold(profile):
    # below the ground state R' turns positive; above it R crosses zero
    assert classify_shot(profile.R0 * (1 - 1e-6), 1e-3, 20.0) == "low"
    assert classify_shot(profile.R0 * (1 + 1e-6), 1e-3, 20.0) == "high"


def test_doubling_r_max_keeps_R0(profile):
    p50 = solve_townes(SolitonConfig(r_max=50.0))
    assert abs(p50.R0 - profile.R0) < 1e-9


def test_grid_refinement_keeps_R0(profile):
    fine = solve_townes(SolitonConfig(grid_step=5e-4))
    assert abs(fine.R0 - profile.R0) < 1e-9


def test_tail_fit(profile):
    r, R = profile.r, profile.R
    win = r >= r[-1] - 5.0
    fit = profile.tail_coeff * np.exp(-r[win]) / np.sqrt(r[win])
    assert np.max(np.abs(R[win] - fit) / R[win]) < 1e-3


def test_degenerate_bracket():
    with pytest.raises(BracketError):
        solve_townes(SolitonConfig(bracket_lo=1.0, bracket_hi=1.0))


@pytest.mark.parametrize(
    "kwargs", [{"grid_step": 0.0}, {"r_max": -1.0}, {"grid_step": float("nan")}, {"shoot_tol": 0.0}]
)
def test_invalid_config(kwargs):
    with pytest.raises(GridError):
        SolitonConfig(**kwargs)


def test_second_derivative_origin(profile):
    R0 = ORACLE_R0_FINE
    assert second_derivative(profile, 0) == pytest.approx((R0 - R0 ** 3) / 2, rel=1e-5)


def test_second_derivative_closure_where_R_is_one(profile):
    i = int(np.argmin(np.abs(profile.R - 1.0)))
    R = profile.R[i]
    expected = R - R ** 3 - profile.dR[i] / profile.r[i]
    assert second_derivative(profile, i) == expected
    assert abs(R - R ** 3) < 1e-2


@pytest.mark.parametrize("fn", [second_derivative, laplacian_of_R2])
def test_index_errors(profile, fn):
    with pytest.raises(IndexError):
        fn(profile, profile.r.size)
    with pytest.raises(IndexError):
        fn(profile, -1)


def test_laplacian_origin_limit(profile):
    R0 = profile.R0
    assert laplacian_of_R2(profile, 0) == pytest.approx(2 * R0 * (R0 - R0 ** 3), rel=1e-14)


def test_laplacian_matches_finite_differences(profile):
    fd = oracles.fd_radial_laplacian(profile.R ** 2, profile.r, profile.h)
    idx = np.arange(50, 15000, 37)
    closed = np.array([laplacian_of_R2(profile, int(i)) for i in idx])
    assert np.max(np.abs(closed - fd[idx - 2])) < 1e-6


def test_laplacian_tail_decay(profile):
    for i in (20000, 22000, 24000):
        r = profile.r[i]
        assert abs(laplacian_of_R2(profile, i)) <= 50 * np.exp(-2 * r)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.5, 3.0), st.floats(0.0, 0.2))
def test_origin_series_solves_the_ode(R0, r):
    # R'' + R'/r = R - R^3 checked via the series' own derivatives
    a = origin_series(R0)
    h = 1e-4
    rr = np.array([r + h, r + 2 * h, r + 3 * h])
    R, P = series_eval(a, rr)
    d2 = (P[2] - P[0]) / (2 * h)
    res = d2 + P[1] / rr[1] - R[1] + R[1] ** 3
    assert abs(res) < 1e-6


def test_metadata_and_csv(profile, tmp_path):
    profile.write_metadata(tmp_path / "m.json")
    meta = json.loads((tmp_path / "m.json").read_text())
    assert set(meta) == {"R0", "r_max", "grid_step", "tail_coeff", "residual_max"}
    profile.write_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "r,R,dR"
    assert len(lines) == profile.r.size + 1
