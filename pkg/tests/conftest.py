"""Collects results of tests tagged ``@pytest.mark.criterion(n, label)`` and
prints one PASS/FAIL line per criterion at the end of the run."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion")


def pytest_runtest_setup(item):
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        item.user_properties.append(("criterion", marker.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or report.failed:
        number, label = props["criterion"]
        entry = _RESULTS.setdefault(number, {"label": label, "ok": True, "details": []})
        entry["ok"] &= report.passed
        if "detail" in props:
            entry["details"].append(props["detail"])


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS, key=lambda n: (int(str(n).rstrip("abc")), str(n))):
        entry = _RESULTS[number]
        status = "PASS" if entry["ok"] else "FAIL"
        tr.write_line(f"[{status}] criterion {number}: {entry['label']}")
        for detail in entry["details"]:
            tr.write_line(f"         {detail}")
