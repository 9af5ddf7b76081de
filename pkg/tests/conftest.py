import pytest


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion.

    ``report(number, status, detail)`` with status PASS, FAIL or WARN; a
    criterion whose test dies before reporting shows as FAIL.
    """
    store = request.config._acceptance
    holder = {}

    def report(number, status, detail):
        holder["number"] = number
        store[number] = (status, detail)
        print(f"ACCEPTANCE criterion {number}: {status} {detail}")

    yield report
    if "number" not in holder:
        store.setdefault(request.node.name, ("FAIL", "test ended before reporting"))


def pytest_runtest_makereport(item, call):
    if call.when == "call" and call.excinfo is not None:
        store = item.config._acceptance
        for key, (status, detail) in list(store.items()):
            if isinstance(key, int) and item.name.startswith(f"test_criterion_{key:02d}") and status == "PASS":
                store[key] = ("FAIL", detail + " [assertion failed]")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_acceptance", {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(store, key=lambda k: (not isinstance(k, int), str(k) if not isinstance(k, int) else k)):
        status, detail = store[key]
        terminalreporter.write_line(f"ACCEPTANCE criterion {key}: {status} {detail}")
