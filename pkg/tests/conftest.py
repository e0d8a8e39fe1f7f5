import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ftgamma import fit_ftg, fit_pareto, load_external_fraud


@pytest.fixture(scope="session")
def losses():
    return load_external_fraud()


@pytest.fixture(scope="session")
def ftg_fit(losses):
    return fit_ftg(losses)


@pytest.fixture(scope="session")
def pareto_fit(losses):
    return fit_pareto(losses)
