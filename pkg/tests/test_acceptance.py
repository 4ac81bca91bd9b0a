"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test prints a single ``PASS``/``FAIL criterion N`` line. The checks
themselves live in :mod:`nhdyn.verify`, so the CLI ``verify`` command and
this suite run identical code.
"""

import pytest

from nhdyn.verify import CHECKS, run_check


def _report(capsys, index):
    res = run_check(index)
    status = "PASS" if res.passed else "FAIL"
    if res.informational:
        status += " (informational)"
    with capsys.disabled():
        print(f"\n{status} criterion {index}: {res.name.split(' ', 1)[1]}: {res.detail}")
    return res


@pytest.mark.parametrize("index", range(1, len(CHECKS) + 1), ids=[name.replace(" ", "_") for name, *_ in CHECKS])
def test_criterion(capsys, index):
    res = _report(capsys, index)
    assert res.passed, res.detail
