import os

import pytest
from hypothesis import settings

from abelcycles import acceptance

settings.register_profile("repro", derandomize=True)
settings.register_profile("stress", max_examples=1500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))

_RESULTS: dict[str, acceptance.CriterionResult] = {}


@pytest.fixture(scope="session")
def criteria() -> dict[str, acceptance.CriterionResult]:
    """All acceptance criteria and companion checks, evaluated once at the full level."""
    if not _RESULTS:
        for res in acceptance.run_criteria("full", companions=True):
            _RESULTS[res.cid] = res
    return _RESULTS


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for res in _RESULTS.values():
        tag = " (companion)" if res.companion else ""
        tr.write_line(f"{res.summary()}{tag}")
    stated = [r for r in _RESULTS.values() if not r.companion]
    failed = [r.cid for r in stated if not r.passed]
    tr.write_line(f"{len(stated) - len(failed)}/{len(stated)} criteria passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
