"""The nine acceptance criteria, each at its stated tolerance and runtime budget."""
import pytest

from flagmorse.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{c.number}" for c in CRITERIA])
def test_criterion(criterion, record_acceptance):
    res = run_criterion(criterion)
    print(res.line())
    record_acceptance(res.line())
    assert res.passed, res.detail
    assert res.within_budget, f"{res.seconds:.1f}s over the {res.budget:g}s budget"


if __name__ == "__main__":
    import sys

    from flagmorse.acceptance import run_suite

    results = run_suite(echo=print)
    sys.exit(0 if all(r.ok for r in results) else 1)
