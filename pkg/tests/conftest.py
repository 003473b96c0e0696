import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from polylog_lab.construction import build_measure  # noqa: E402
from polylog_lab.exponents import ExponentParams  # noqa: E402
from polylog_lab.sequence import gen_desk  # noqa: E402

DESK_Q1 = 1e6
DESK_GROWTH = 1.5
DESK_K = 1 << 20


@pytest.fixture(scope="session")
def params():
    return ExponentParams(2.0, 0.5)


@pytest.fixture(scope="session")
def desk_seq(params):
    return gen_desk(params, DESK_Q1, 2, DESK_GROWTH)


@pytest.fixture(scope="session")
def snap2(desk_seq):
    """The m = 2 desk snapshot shared by the analysis, restriction and acceptance tests."""
    return build_measure(desk_seq, 2, DESK_K)


@pytest.fixture(scope="session")
def snap1(desk_seq):
    return build_measure(desk_seq, 1, 1 << 16)


@pytest.fixture(scope="session")
def snap0(desk_seq):
    return build_measure(desk_seq, 0, 1 << 14)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
