import os

import pytest

# Verdict lines from the acceptance tests, echoed after the run so they show
# up even when pytest captures stdout.
VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    def emit(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        print(line)
        VERDICTS.append(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)


def pytest_report_header(config):
    from emt import _kernels
    return f"emt kernel backend: {_kernels.BACKEND} (EMT_DISABLE_NUMBA={os.environ.get('EMT_DISABLE_NUMBA', '')!r})"
