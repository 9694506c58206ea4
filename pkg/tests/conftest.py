"""Shared fixtures, plus a per-criterion summary for the acceptance suite."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np
import pytest

from chaoslab.kernel import Grid, Kernel, cell

_CRITERIA: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion a test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            n, title = mark.args
            _CRITERIA.setdefault(n, {"title": title, "outcomes": []})


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for n, entry in _CRITERIA.items():
        if f"_c{n:02d}_" in report.nodeid:
            entry["outcomes"].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        outcomes = entry["outcomes"]
        if not outcomes:
            status = "NOT RUN"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status:7s} {entry['title']} ({len(outcomes)} tests)")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid4():
    return Grid(4)


def diag(q: int, j: int, grid: Grid) -> Kernel:
    """``e_j`` tensored with itself ``q`` times."""
    k = cell(j, grid)
    out = k
    for _ in range(q - 1):
        out = out @ k
    return out
