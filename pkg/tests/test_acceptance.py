"""Acceptance gate: every criterion runs at its pinned tolerance and prints
one pass/fail line.  Run with -s (or read the junit output) to see the lines.
"""

import pytest

from twowin import run_all


@pytest.mark.parametrize("number", list(range(1, 11)))
def test_criterion(number):
    res = run_all([number])[0]
    print(res.line())
    assert res.passed, res.line()
