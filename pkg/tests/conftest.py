import math

import pytest

from zeno_drive import PhysicalParams

OMEGA_M = 2 * math.pi * 100e6


@pytest.fixture
def params():
    return PhysicalParams.from_ratios()


@pytest.fixture
def cold_params():
    # about 0.1 thermal phonons, small enough for 16-level brute force
    return PhysicalParams.from_ratios(temperature=0.002)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Records one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, title, ok, detail):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
