"""Shared fixtures and the per-criterion summary printed after the acceptance run."""

import pytest

from minres_npc.rng import make_rng

_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        if item.module.__name__.endswith("test_acceptance") and item.name.startswith("test_criterion_"):
            doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
            if hasattr(item, "callspec"):
                doc += f" [{item.callspec.id}]"
            _CRITERIA[item.nodeid] = [doc, "not run"]


def pytest_runtest_logreport(report):
    entry = _CRITERIA.get(report.nodeid)
    if entry is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry[1] = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for doc, status in _CRITERIA.values():
        terminalreporter.write_line(f"{status:<7} {doc}")


@pytest.fixture
def rng():
    return make_rng(12345)
