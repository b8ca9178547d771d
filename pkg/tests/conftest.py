import pytest

_criteria = {}
_notes = {}


def record_note(number, line):
    """Attach a measured value to a criterion's summary line."""
    _notes.setdefault(number, []).append(line)


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker
        if hasattr(report, "wasxfail"):
            outcome = "FINDING"
        elif report.skipped:
            outcome = "SKIP"
        else:
            outcome = "PASS" if report.passed else "FAIL"
        _criteria[number] = (title, outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        report.criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, outcome = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {outcome}  {title}")
    for number in sorted(_notes):
        for line in _notes[number]:
            terminalreporter.write_line(f"  criterion {number}: {line}")


@pytest.fixture
def note():
    return record_note
