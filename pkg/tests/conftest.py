import numpy as np
import pytest

from shmtrx.dispersion import aluminum
from shmtrx.excitation import ExcitationSpec
from shmtrx.plate import FOOT, PlateScenario, circular_array

FC = 200e3
FS = 10e6


@pytest.fixture
def al15():
    return aluminum(1.5e-3)


@pytest.fixture
def ring8():
    return circular_array(8, (FOOT / 2, FOOT / 2), 0.12)


@pytest.fixture
def make_scenario(ring8):
    def make(damage=(0.2013, 0.0987), transducers=None, **kw):
        kw.setdefault("velocity", 3000.0)
        kw.setdefault("excitation", ExcitationSpec(FC))
        tr = ring8 if transducers is None else np.asarray(transducers)
        return PlateScenario(tr, damage=damage, **kw)

    return make


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
