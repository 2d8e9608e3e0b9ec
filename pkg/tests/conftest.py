import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        label, title = mark.args
        _CRITERIA[label] = (title, "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")

    def key(label):
        num = "".join(ch for ch in label if ch.isdigit())
        return int(num), label

    for label in sorted(_CRITERIA, key=key):
        title, status = _CRITERIA[label]
        terminalreporter.write_line(f"{status:<4}  criterion {label:<3}  {title}")
