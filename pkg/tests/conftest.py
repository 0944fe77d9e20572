import numpy as np
import pytest

from mvparticles import ModelParams, build_uniform_mesh, make_ensemble
from mvparticles.model import Dirac, GammaLaw, ReciprocalExp

# 2 * Phi(-1), from mpmath at 40 digits
TWO_PHI_MINUS_ONE = 0.3173105078629141


@pytest.fixture
def small_ensemble():
    mesh = build_uniform_mesh(40, 1.0)
    return make_ensemble(GammaLaw(1.5, 0.5), mesh, 3000, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def laws():
    return [Dirac(1.0), GammaLaw(1.5, 0.5), ReciprocalExp(1.0)]


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion."""

    def record(label, ok, detail):
        line = f"{label}: {'PASS' if ok else 'FAIL'} | {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
