"""One test per acceptance criterion; each prints a PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for the lines alone.
"""

import sys

import pytest

from varbounds import verify

RESULT_LINES: list[str] = []


@pytest.mark.parametrize("key,title,check", verify.ACCEPTANCE, ids=[k for k, _, _ in verify.ACCEPTANCE])
def test_acceptance_criterion(key, title, check):
    result = verify._timed(key, title, check)
    RESULT_LINES.append(result.line())
    print(result.line())
    assert result.passed, result.detail


@pytest.mark.parametrize("key,title,check", verify.INVARIANTS, ids=[k for k, _, _ in verify.INVARIANTS])
def test_supporting_invariant(key, title, check):
    result = verify._timed(key, title, check)
    RESULT_LINES.append(result.line())
    print(result.line())
    assert result.passed, result.detail


if __name__ == "__main__":
    results = verify.run_all()
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
