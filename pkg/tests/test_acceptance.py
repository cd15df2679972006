"""One test per acceptance criterion; each prints a pass/fail line with its metrics."""
import pytest

from knudsenkit.acceptance import CRITERIA, run_criterion

RESULT_LINES: list[str] = []


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_acceptance_criterion(number):
    result = run_criterion(number)
    line = result.line()
    print(line)
    RESULT_LINES.append(line)
    assert result.passed, line
