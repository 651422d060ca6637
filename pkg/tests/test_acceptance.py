"""Acceptance criteria at their stated tolerances, one test per criterion.

Criteria use the published constants.  Companion checks (``*``) rerun the
constant-dependent criteria with the constants recomputed from the limits of
the defining integrals.
"""

import pytest

CRITERIA = [str(k) for k in range(1, 12)]
COMPANIONS = ["7*", "7*r", "9*", "10*"]


def _report(res):
    lines = [res.summary()] + [f"    {c.line()}" for c in res.checks]
    if res.note:
        lines.append(f"    {res.note}")
    return "\n".join(lines)


@pytest.mark.parametrize("cid", CRITERIA)
def test_criterion(criteria, cid):
    res = criteria[cid]
    print(_report(res))
    assert res.passed, _report(res)


@pytest.mark.parametrize("cid", COMPANIONS)
def test_companion(criteria, cid):
    res = criteria[cid]
    print(_report(res))
    assert res.companion
    assert res.passed, _report(res)
