import numpy as np
import pytest

from condrdp import build_envelope


@pytest.fixture(scope="session")
def env():
    return build_envelope(512)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(num, name, ok, detail):
        line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        request.config.stash[ACCEPTANCE].append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
