from __future__ import annotations

import pytest

from pfmirror.pfode import build_reye_operator

# criterion number -> (passed, description); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def reye():
    return build_reye_operator()


@pytest.fixture(scope="session")
def monodromy_run(reye):
    """Context, fit and full table at the default 256 bits, shared across test files."""
    from pfmirror.monodromy import MonodromyContext, fit_integral_basis, monodromy_table
    ctx = MonodromyContext(reye, 256)
    fit = fit_integral_basis(reye, 256, ctx)
    table = monodromy_table(reye, 256, ctx, fit)
    return ctx, fit, table


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
