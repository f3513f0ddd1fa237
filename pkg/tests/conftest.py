import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from progex.escape_room import generate_scenarios  # noqa: E402
from progex.mdp import lattice_from_features  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "progex" / "data"

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): an acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_acceptance", None)
    if marker is None:
        return
    number, title = marker
    detail = dict(report.user_properties).get("detail", "")
    failed = report.failed
    if report.when == "call" or failed:
        previous = _acceptance.get(number)
        if previous and previous[1] == "FAIL":
            return
        _acceptance[number] = (title, "FAIL" if failed else "PASS", detail, report.duration)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result()._acceptance = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, status, detail, duration = _acceptance[number]
        line = f"[{status}] criterion {number}: {title} ({duration:.1f}s)"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def small_scenarios():
    return generate_scenarios(6, (7, 7), 5, 0.6, seed=11)


def random_lattice(rng, n, k=6, scale=1.0):
    """Lattice with random transition features in [0, scale)."""
    return lattice_from_features(rng.random((1 << n, n, k)) * scale)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
