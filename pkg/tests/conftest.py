import numpy as np
import pytest

from stationary_mtd.transitions import (
    BernoulliT, BinomialT, GammaT, GaussianT, LomaxT, NegBinT, PoissonT, StudentTT,
)

ALL_TAGS = ("gaussian", "student_t", "poisson", "negbin", "bernoulli", "binomial", "lomax", "gamma")


def random_family(tag, rng):
    """A transition component with randomly drawn valid parameters."""
    u = rng.uniform
    if tag == "gaussian":
        return GaussianT(u(-10, 10), u(0.1, 50), u(-0.95, 0.95))
    if tag == "student_t":
        return StudentTT(u(-10, 10), u(0.3, 5), u(0.8, 12), u(-0.95, 0.95))
    if tag == "poisson":
        return PoissonT(u(0.2, 5), u(0.2, 5))
    if tag == "negbin":
        return NegBinT(u(0.2, 3), u(0.2, 3), u(0.5, 5), u(0.5, 5))
    if tag == "bernoulli":
        p2 = u(0.01, 0.3)
        return BernoulliT(u(0.01, 0.99 - 2 * p2), p2)
    if tag == "binomial":
        p2 = u(0.01, 0.3)
        return BinomialT(int(rng.integers(1, 21)), u(0.01, 0.99 - 2 * p2), p2)
    if tag == "lomax":
        if rng.random() < 0.5:
            return LomaxT.special(u(1, 50), u(1.5, 10))
        return LomaxT(u(0.5, 5), u(0.5, 5), u(0.1, 3), u(0.5, 8))
    if tag == "gamma":
        return GammaT(u(0.5, 5), u(0.5, 5), u(0.1, 3))
    raise KeyError(tag)


def example_family(tag):
    return {
        "gaussian": GaussianT(10.0, 100.0, 0.6),
        "student_t": StudentTT(1.0, 2.0, 5.0, 0.5),
        "poisson": PoissonT(2.0, 3.0),
        "negbin": NegBinT(1.0, 2.0, 3.0, 1.5),
        "bernoulli": BernoulliT(0.3, 0.2),
        "binomial": BinomialT(8, 0.3, 0.2),
        "lomax": LomaxT.special(10.0, 6.0),
        "gamma": GammaT(2.0, 1.0, 0.5),
    }[tag]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store the outcome of one acceptance criterion for the end-of-run report."""
    ACCEPTANCE[criterion] = (bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0].rstrip("abc")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
