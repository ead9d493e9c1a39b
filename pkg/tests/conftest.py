import pytest

from asiantheta.cli import EXAMPLE_MARKET
from asiantheta.moments import negative_moments
from asiantheta.numerics import PrecisionContext
from asiantheta.pricer import normalize

ACCEPTANCE_LINES = []


def record(criterion: str, passed: bool, detail: str) -> None:
    """Remember one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ctx():
    return PrecisionContext(160)


@pytest.fixture(scope="session")
def example(ctx):
    """Normalized parameters of the at-the-money worked example (nu = 1, h = 0.0225)."""
    return normalize(EXAMPLE_MARKET, ctx)


@pytest.fixture(scope="session")
def example_moments(ctx, example):
    """m_1..m_27, enough for either series at N = 25."""
    return negative_moments(27, example.nu, example.h, ctx=ctx)
