import numpy as np
import pytest

from mzres._backend import HAVE_NUMBA
from mzres.core import FreestreamConditions

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def fs_subsonic():
    return FreestreamConditions(mach=0.5, angle_of_attack=3.0)


@pytest.fixture
def fs_viscous():
    return FreestreamConditions(mach=0.15, reynolds=1.0e4)


def smooth_state(grid, fs, amp=0.02, seed=0):
    """A smooth non-uniform physical state around the free stream."""
    x, y = grid.nodes.T
    w = np.tile(fs.w_inf, (grid.n_nodes, 1)).astype(float)
    a = fs.a_inf
    w[:, 0] += amp * fs.p_inf * np.sin(2.1 * x + 0.3) * np.cos(1.7 * y)
    w[:, 1] += amp * a * np.cos(1.3 * x - 0.8 * y)
    w[:, 2] += amp * a * np.sin(0.9 * x + 1.1 * y)
    w[:, 3] *= 1.0 + amp * np.cos(1.9 * x) * np.sin(2.3 * y + 0.4)
    return w
