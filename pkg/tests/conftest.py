import numpy as np
import pytest

from memcam.camera import Intrinsics, look_pose

_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = getattr(report, "criterion", None)
    if crit is not None:
        _criteria.append((crit[0], crit[1], report.passed))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, ok in sorted(_criteria):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}: {title}")


def random_camera(rng, intr=None, yaw=None):
    """A camera inside the default room, roughly level."""
    r = 2.0 * np.sqrt(rng.uniform())
    phi = rng.uniform(0, 2 * np.pi)
    center = [r * np.sin(phi), rng.uniform(-0.5, 0.5), r * np.cos(phi)]
    yaw = rng.uniform(0, 360) if yaw is None else yaw
    return look_pose(center, yaw, rng.uniform(-15, 15)), intr or Intrinsics()


def random_pair(rng):
    a = random_camera(rng)
    yaw_a = np.rad2deg(np.arctan2(a[0].R[2, 0], a[0].R[2, 2]))
    b = random_camera(rng, yaw=yaw_a + rng.uniform(-90, 90))
    return a, b


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
