import math

import pytest

from supercrit import growth, singular

# acceptance outcomes, filled by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def p3():
    return growth.power_exp(3.0)


@pytest.fixture(scope="session")
def ee():
    return growth.iter_exp(1)


@pytest.fixture(scope="session")
def gelfand():
    return growth.pure_exp()


@pytest.fixture(scope="session")
def p3_singular(p3):
    """V* for f = exp(t^3), built once per session (about 6 s)."""
    return singular.extend(singular.build_approx(p3))


@pytest.fixture(scope="session")
def f0_solution():
    """Exact singular solution for the model nonlinearity with B' = 3."""
    f0 = singular.model_solution(1.5)
    return singular.extend(singular.build_approx(f0))


MU_GELFAND_TURN = 2.0 * math.log(2.0)
