from pathlib import Path

import pytest

from typdiv.langmeta import default_codemap_path, default_registry_path, load_codemap, load_registry

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def registry():
    return load_registry(default_registry_path())


@pytest.fixture(scope="session")
def codemap():
    return load_codemap(default_codemap_path())


# one verdict line per acceptance criterion, printed after the run
_criteria: dict[str, tuple[int, str]] = {}
_verdicts: dict[str, tuple[int, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


def pytest_runtest_logreport(report):
    item = _criteria.get(report.nodeid)
    if item is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _verdicts[report.nodeid] = (*item, outcome)


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criteria[item.nodeid] = (mark.args[0], mark.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    merged: dict[int, tuple[str, set[str]]] = {}
    for number, title, outcome in _verdicts.values():
        merged.setdefault(number, (title, set()))[1].add(outcome)
    terminalreporter.section("acceptance criteria")
    for number in sorted(merged):
        title, outcomes = merged[number]
        verdict = "FAIL" if "FAIL" in outcomes else "PASS" if "PASS" in outcomes else "SKIP"
        terminalreporter.write_line(f"criterion {number:>2} {verdict}  {title}")
