"""Collects per-criterion outcomes and prints one pass/fail line for each."""

import pytest

_OUTCOMES: dict = {}
_TITLES: dict = {}
_ELAPSED: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num = mark.args[0]
    _TITLES[num] = mark.args[1]
    _ELAPSED[num] = _ELAPSED.get(num, 0.0) + rep.duration
    if rep.when == "call" or rep.outcome != "passed":
        prev = _OUTCOMES.setdefault(num, {}).get(item.nodeid)
        if prev in (None, "passed"):
            _OUTCOMES[num][item.nodeid] = rep.outcome


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_OUTCOMES):
        res = _OUTCOMES[num]
        ok = sum(v == "passed" for v in res.values())
        if ok == len(res):
            verdict = "PASS"
        elif all(v in ("passed", "skipped") for v in res.values()):
            verdict = "SKIP"
        else:
            verdict = "FAIL"
        terminalreporter.write_line(
            f"criterion {num:2d} {verdict}  {ok}/{len(res)} checks  {_ELAPSED[num]:7.1f}s  {_TITLES[num]}"
        )

