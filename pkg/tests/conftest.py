"""Per-criterion summary for the acceptance suite.

Tests marked ``@pytest.mark.criterion(k)`` are grouped by ``k``; a criterion
passes only if every test in its group passes. The terminal summary prints
one line per criterion plus any measured values the tests recorded through
the ``measured`` fixture.
"""
from collections import defaultdict

import pytest

_outcomes = defaultdict(list)
_notes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes[marker.args[0]].append((item.name, rep.passed))


@pytest.fixture
def measured(request):
    marker = request.node.get_closest_marker("criterion")
    key = marker.args[0] if marker else None

    def note(text):
        _notes[key].append(text)
    return note


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_outcomes):
        results = _outcomes[k]
        ok = all(passed for _, passed in results)
        failed = [name for name, passed in results if not passed]
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  (failed: " + ", ".join(failed) + ")"
        tr.write_line(line)
        for text in _notes.get(k, []):
            tr.write_line(f"    {text}")
