import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line; the lines are repeated in the terminal summary."""
    lines = request.config.stash[_KEY]

    def record(name, value, limit, passed):
        line = f"{'PASS' if passed else 'FAIL'} {name}: {value} (limit {limit})"
        print(line)
        lines.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
