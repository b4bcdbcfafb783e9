import numpy as np
import pytest

from revoprofile.features import initial_correspondences
from revoprofile.reconstruction import refine
from revoprofile.synthetic import ScanConfig, make_rng, make_wheel_generatrix, scan, wheel_viewpoints


@pytest.fixture(scope="session")
def wheel():
    return make_wheel_generatrix()


@pytest.fixture(scope="session")
def wheel_scans(wheel):
    """Noise-free scans of the three fixed wheel viewpoints: list of (profiles, truth)."""
    return [scan(wheel, pose, ScanConfig(seed=v)) for v, pose in enumerate(wheel_viewpoints(wheel))]


@pytest.fixture(scope="session")
def wheel_results(wheel_scans):
    return [refine(profiles, initial_correspondences(profiles)) for profiles, _ in wheel_scans]


@pytest.fixture
def rng():
    return make_rng(20240611)


def random_rotation(rng):
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def rotation_about(axis_dir, angle):
    """Rodrigues' formula, kept independent of the package under test."""
    k = np.asarray(axis_dir, float) / np.linalg.norm(axis_dir)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, ok, detail):
        line = f"ACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
