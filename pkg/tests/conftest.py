import numpy as np
import pytest

# acceptance criteria append (label, passed, detail) here; printed at session end
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def record_acceptance(label: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append((label, passed, line))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def sym(rng, n, scale=1.0):
    m = rng.uniform(-1, 1, size=(n, n))
    return scale * (m + m.T) / 2
