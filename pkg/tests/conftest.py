import pytest

_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request, capsys):
    """Record one pass/fail line for an acceptance criterion."""
    results = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(label, ok, detail):
        line = f"{label}: {'PASS' if ok else 'FAIL'} ({detail})"
        results[label] = line
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE_KEY, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for label in sorted(results, key=lambda s: (len(s.split()[1]), s)):
            terminalreporter.write_line(results[label])
