"""Shared fixtures: session-scoped synthetic datasets and result reporting.

The acceptance tests print one PASS/FAIL line per criterion at the end of
the run; the hook here collects their outcomes.
"""

import numpy as np
import pytest

from cellgauge.synth import generate_dataset

# Durations are chosen so the small datasets keep unit tests fast while the
# full ones give the end-to-end criteria >= 20k training windows.
TINY_DURATION_S = 420.0
FULL_DURATION_S = 3600.0


@pytest.fixture(scope="session")
def synth_tiny_root(tmp_path_factory):
    """Small synthA+synthB datasets (420 s cycles) for pipeline tests."""
    root = tmp_path_factory.mktemp("synth-tiny")
    generate_dataset("synthA", root, duration_s=TINY_DURATION_S, seed=101)
    generate_dataset("synthB", root, duration_s=TINY_DURATION_S, seed=202)
    return root


@pytest.fixture(scope="session")
def synth_full_root(tmp_path_factory):
    """Full-size synthA+synthB datasets (3600 s cycles) for acceptance runs."""
    root = tmp_path_factory.mktemp("synth-full")
    generate_dataset("synthA", root, duration_s=FULL_DURATION_S, seed=11)
    generate_dataset("synthB", root, duration_s=FULL_DURATION_S, seed=22)
    return root


@pytest.fixture(autouse=True)
def _predictable_numpy_errors():
    with np.errstate(over="ignore", under="ignore"):
        yield


# ---------------------------------------------------------------------------
# acceptance criterion reporting
# ---------------------------------------------------------------------------

_ACCEPTANCE_RESULTS = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _ACCEPTANCE_RESULTS[name] = report.outcome.upper()
    elif report.when == "setup" and report.outcome in ("skipped", "failed"):
        _ACCEPTANCE_RESULTS[name] = ("SKIPPED" if report.outcome == "skipped"
                                     else "ERROR")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[name]
        shown = {"PASSED": "PASS", "FAILED": "FAIL"}.get(outcome, outcome)
        terminalreporter.write_line(f"{name}: {shown}")
