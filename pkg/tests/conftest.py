import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from epdimer import assemble, build_generator
from epdimer.fock import FockCutoffs
from epdimer.model import SystemParams

# The three rate sets used throughout: a strongly pumped dimer (EPs at small
# coupling), a barely pumped one (EPs near kappa ~ 7.5), and an intermediate
# gain for the multiphoton trend.  Mirror losses 30/0.1, absorption 1/1.
STRONG = SystemParams(kappa=0.3, gain=30.1, c1=30.0, c2=0.1, gamma1=1.0, gamma2=1.0)
WEAK = SystemParams(kappa=7.3, gain=0.01, c1=30.0, c2=0.1, gamma1=1.0, gamma2=1.0)
MID = SystemParams(kappa=7.3, gain=0.5, c1=30.0, c2=0.1, gamma1=1.0, gamma2=1.0)

CUT2 = FockCutoffs(1, 1)


def matched_distance(a, b):
    """Largest pointwise distance between two complex multisets under the
    optimal pairing (plain sorting mispairs conjugate partners)."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    assert a.size == b.size
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@pytest.fixture(scope="session")
def sup_weak():
    return assemble(build_generator(WEAK, CUT2))


@pytest.fixture(scope="session")
def sup_strong():
    return assemble(build_generator(STRONG, CUT2))
