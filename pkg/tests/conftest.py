import os
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from rigidity.core import JointDistribution

settings.register_profile("dev", max_examples=40, deadline=None)
settings.register_profile("ci", max_examples=150, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))

F = Fraction


@st.composite
def distributions(draw, n_players=(2, 3), max_support=5, grid=(1, 2, 3), min_support=1):
    """Small joint distributions over a value grid with random rational weights."""
    n = draw(st.sampled_from(n_players))
    inst = st.tuples(*[st.sampled_from(grid)] * n)
    support = draw(st.lists(inst, min_size=min_support, max_size=max_support, unique=True))
    weights = draw(st.lists(st.integers(1, 6), min_size=len(support), max_size=len(support)))
    tot = sum(weights)
    return JointDistribution.make([(v, F(w, tot)) for v, w in zip(support, weights)], n)


@pytest.fixture(scope="session")
def kex4():
    from rigidity.divisible import gen_k_excluded
    from rigidity.embed import build_distribution
    return build_distribution(gen_k_excluded(4, 1, 1, F(1, 10)))


@pytest.fixture(scope="session")
def kex5():
    from rigidity.divisible import gen_k_excluded
    from rigidity.embed import build_distribution
    return build_distribution(gen_k_excluded(5, 1, 4, F(1, 10)))


# one line per acceptance criterion, printed at the end of the run
CRITERIA = {}


@pytest.fixture
def criterion(request):
    def record(number, ok, detail=""):
        CRITERIA[number] = (ok, detail)
        print(f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
