import math
from dataclasses import replace

import pytest
from hypothesis import HealthCheck, settings

from pirtrack import fileio
from pirtrack.lens_optics import sweep_zones
from pirtrack.scenarios import DESK_POSE, corner_poses
from pirtrack.sensor_dynamics import SensorParams

# every property test runs at least this many cases
N_CASES = 200
settings.register_profile("pirtrack", max_examples=N_CASES, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pirtrack")

REFERENCE_LENS = fileio.DATA_DIR / "reference_lens.cfg"
REFERENCE_SENSOR = fileio.DATA_DIR / "reference_sensor.cfg"


@pytest.fixture(scope="session")
def lens_config():
    return fileio.load_lens(REFERENCE_LENS)


@pytest.fixture(scope="session")
def layout(lens_config):
    return sweep_zones(lens_config.lenses, lens_config.geometry, fov=lens_config.fov)


@pytest.fixture(scope="session")
def params():
    return SensorParams(1.0, 0.01, 0.2)


@pytest.fixture(scope="session")
def desk_pose(layout):
    return replace(DESK_POSE, theta_c=layout.theta_c)


@pytest.fixture(scope="session")
def room_poses(layout):
    return corner_poses(layout.theta_c)


# --- acceptance summary ------------------------------------------------------

_criteria: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when != "call" and not report.failed:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    num = int(name.split("_")[2])
    ok = report.passed and _criteria.get(num, True)
    _criteria[num] = ok


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if _criteria[num] else 'FAIL'}")


def deg(x):
    return math.degrees(x)
