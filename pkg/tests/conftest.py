import pytest

_RESULTS_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = {}


@pytest.fixture
def criterion(request):
    """Record one sub-check of a numbered acceptance criterion.

    Returns ``record(number, label, passed, detail)``; the caller still
    asserts on ``passed`` so pytest reports the outcome too.
    """
    store = request.config.stash[_RESULTS_KEY]

    def record(number: int, label: str, passed: bool, detail: str = "") -> bool:
        store.setdefault(number, []).append((label, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        checks = store[number]
        ok = all(p for _, p, _ in checks)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}")
        for label, passed, detail in checks:
            terminalreporter.write_line(f"    [{'pass' if passed else 'FAIL'}] {label}: {detail}")
