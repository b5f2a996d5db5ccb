import sys
from pathlib import Path

import pytest
from hypothesis import settings

from omega_dividend import REFERENCE_PARAMS, separators

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def ref_params():
    return REFERENCE_PARAMS


@pytest.fixture(scope="session")
def ref_seps():
    return separators(REFERENCE_PARAMS)


@pytest.fixture(scope="session")
def ref_ys(ref_seps):
    """One threshold inside each non-trivial regime."""
    yl, yu = ref_seps.y_lower, ref_seps.y_upper
    return {"subcritical": 0.9 * yl, "critical": 0.9 * yl + 0.1 * yu, "supercritical": 1.001 * yu}


@pytest.fixture(scope="session")
def mp_ref():
    from mp_reference import Ref

    return Ref(REFERENCE_PARAMS.mu, REFERENCE_PARAMS.sigma, REFERENCE_PARAMS.r, REFERENCE_PARAMS.q)
