from pathlib import Path

import pytest
from hypothesis import settings

GOLDEN = Path(__file__).parent / "golden"
FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def read_golden(name: str) -> str:
    # golden files end with one newline that is not part of the rendered text
    return (GOLDEN / name).read_text(encoding="utf-8").removesuffix("\n")


@pytest.fixture
def golden():
    return read_golden


# -- acceptance summary -------------------------------------------------------

_criteria: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    item_marker = getattr(report, "criterion", None)
    if item_marker is None:
        return
    n, title = item_marker
    rec = _criteria.setdefault(n, {"title": title, "ok": True, "ran": False})
    if report.when == "call":
        rec["ran"] = True
    if report.failed:
        rec["ok"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        report.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        rec = _criteria[n]
        status = "PASS" if rec["ok"] and rec["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {rec['title']}")
