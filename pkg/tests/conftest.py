import numpy as np
import pytest
from hypothesis import assume
from hypothesis import strategies as st

from freshmarket import MarketInstance, Monomial, PowerLaw, check_one_update_viability


def random_viable_instances(count, seed, horizon=30.0, degrees=(2, 3)):
    """Instances with kappa in [1, 2] and c in [2, 10], like the Monte Carlo study."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        inst = MarketInstance(
            horizon,
            PowerLaw(float(rng.uniform(1.0, 2.0))),
            Monomial(float(rng.uniform(2.0, 10.0)), int(rng.choice(degrees))),
        )
        if check_one_update_viability(inst):
            out.append(inst)
    return out


kappas = st.floats(1.0, 3.0)
horizons = st.floats(0.5, 50.0)
coefs = st.floats(0.01, 20.0)


@st.composite
def viable_instances(draw):
    inst = MarketInstance(draw(horizons), PowerLaw(draw(kappas)),
                          Monomial(draw(coefs), draw(st.integers(1, 4))))
    assume(check_one_update_viability(inst))
    return inst


@pytest.fixture
def fig6():
    # Fig. 6 shapes, f = delta^2 and C = K^2/6, with horizon 5
    return MarketInstance(5.0, PowerLaw(2.0), Monomial(1 / 6, 2))


@pytest.fixture
def linear30():
    return MarketInstance(30.0, PowerLaw(1.0), Monomial(6.0, 3))


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def _report(criterion, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}")
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
