import numpy as np
import pytest

from liebundles import lie_core as lc

GROUPS = ("so3", "se2", "h3", "r3")
NONABELIAN = ("so3", "se2", "h3")

INERTIA = np.array([1.0, 2.0, 3.0])
# h(mu) = 1/2 sum mu_i^2 / I_i
RIGID_BODY_H = "0.5*mu[0]**2 + 0.25*mu[1]**2 + 0.16666666666666666*mu[2]**2"
# l(xi) = 1/2 sum I_i xi_i^2
RIGID_BODY_L = "0.5*xi[0]**2 + 1.0*xi[1]**2 + 1.5*xi[2]**2"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def e(i, n=3):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def rodrigues(w):
    """Rotation matrix of the axis-angle vector ``w``."""
    th = np.linalg.norm(w)
    if th == 0:
        return np.eye(3)
    K = skew(w / th)
    return np.eye(3) + np.sin(th) * K + (1 - np.cos(th)) * K @ K


def so3(matrix):
    return lc.element(lc.get_group("so3"), np.asarray(matrix, dtype=float))


def h3(a, b, c):
    return lc.element(lc.get_group("h3"), np.array([[1.0, a, c], [0.0, 1.0, b], [0.0, 0.0, 1.0]]))


def h3_coords(g):
    m = g.matrix
    return np.array([m[0, 1], m[1, 2], m[0, 2]])


def rk4(f, y0, h, n):
    """Plain vector RK4 returning all n + 1 samples."""
    ys = [np.asarray(y0, dtype=float)]
    y = ys[0]
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys.append(y)
    return np.array(ys)


# --- acceptance summary -----------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    if report.when == "setup" and report.passed:
        # shared fixtures do the work for some criteria; count it
        _CRITERIA[number] = (title, "PASS", report.duration)
        return
    setup = _CRITERIA.get(number, (None, None, 0.0))[2] if report.when == "call" else 0.0
    _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL", setup + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, seconds = _CRITERIA[number]
        terminalreporter.write_line(f"AC{number:<2} {status}  {title} ({seconds:.1f} s)")
