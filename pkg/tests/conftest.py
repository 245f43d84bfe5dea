from __future__ import annotations

import re

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_outcomes: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.failed:
        verdict = "PASS" if report.passed else "FAIL"
        if n not in _outcomes or verdict == "FAIL":
            _outcomes[n] = (verdict, m.group(2).replace("_", " "))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        verdict, name = _outcomes[n]
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {name}")
