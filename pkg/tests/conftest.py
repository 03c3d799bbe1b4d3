import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from shmod import SolitonConfig, compute_all, solve_townes  # noqa: E402

# Values produced by tests/oracles.py and frozen here. See each test for the
# routine that generated them.
ORACLE_R0_FINE = 2.2062034606933594  # shoot_bisect_R0(h=1e-4, width=1e-5)
ORACLE_NC_HALF = 1.8622538980484513  # trapezoid_half(R^2 r)
ORACLE_M_HALF = 0.5528589782529958  # trapezoid_half(R^2 r^3 / 4)
ORACLE_C1_HALF = 20.23533230877028  # trapezoid_half(2 [(R^2)']^2 r)
ORACLE_THRESHOLD_MID = -15.207472045206327  # o2_threshold at (r_low + r_high)/2
ORACLE_THRESHOLD_LOW_HALF = -16.971451175305894  # o2_threshold at r_low/2

# regression value: threshold_bisect at (r_low + r_high)/2, bracket (-200, 0), width 1e-4
FROZEN_THRESHOLD_MID = -15.207433700561523


@pytest.fixture(scope="session")
def profile():
    return solve_townes()


@pytest.fixture(scope="session")
def constants(profile):
    return compute_all(profile)


@pytest.fixture(scope="session")
def profiles_refined():
    """Profiles at successive halvings of the grid step, coarse to fine."""
    return [solve_townes(SolitonConfig(grid_step=h)) for h in (8e-3, 4e-3, 2e-3, 1e-3)]


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("SHMOD_CACHE_DIR", str(d))
    return d


ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            if ACCEPTANCE_FILE not in rep.nodeid or (rep.when != "call" and key != "error"):
                continue
            name = rep.nodeid.split("::")[-1]
            lines.append((name, "PASS" if key == "passed" else "FAIL"))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in sorted(lines):
        number = int(name.split("_")[2])
        label = " ".join(name.split("_")[3:])
        terminalreporter.write_line(f"criterion {number:2d} {status}  {label}")
