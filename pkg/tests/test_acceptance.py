"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (shown even under output
capture) and fails with the check's diagnostic lines when the criterion is not
met.  The tolerances and runtime limits live in :mod:`ivpcap.acceptance`.
"""
import pytest

from ivpcap.acceptance import CHECKS


@pytest.mark.parametrize("number", sorted(CHECKS), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number, capsys):
    res = CHECKS[number]()
    with capsys.disabled():
        print("\n" + res.summary())
    assert res.passed, "\n".join(res.lines)
