"""One test per acceptance criterion; each prints a single pass/fail line."""

import pytest

from recoil_lab.acceptance import CHECKS, run_check


@pytest.mark.slow
@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{i}" for i in range(1, len(CHECKS) + 1)])
def test_criterion(check):
    result = run_check(check)
    print(result.line())
    for line in result.details:
        print("    " + line)
    assert result.passed, "\n".join(result.details)
