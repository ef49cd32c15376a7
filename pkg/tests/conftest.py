import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import TINY_OSM_XML  # noqa: E402


@pytest.fixture
def tiny_osm_xml():
    return TINY_OSM_XML


_acceptance_results = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance_results.append(
            (report.nodeid.split("::")[-1], report.passed))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion in the final report."""
    if not _acceptance_results:
        return
    terminalreporter.write_line("")
    for name, ok in _acceptance_results:
        criterion = name.removeprefix("test_").replace("_", "-")
        terminalreporter.write_line(
            f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}")
