"""Acceptance suite: one test per criterion, each printing its PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines, or use ``collapse-lab check`` for the same suite outside pytest.
Every tolerance is pinned inside :mod:`collapse_lab.acceptance`.
"""

import pytest

from collapse_lab.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize(
    "number,name", [(num, name) for num, name, _ in CRITERIA], ids=lambda v: str(v)
)
def test_acceptance_criterion(number, name):
    result = run_criterion(number)
    print(result.format_line())
    assert result.passed, f"criterion {number} ({name}): {result.details}"
