import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gradexplore import kernels
from gradexplore.voxel_map import Aabb, VoxelMap

# the backend fixture is meant to hold for every generated example
settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("default")

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run the test once per kernel route, switching the process-wide default too."""
    previous = kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


def box_map(n=10, rho=0.3, fill=0.0) -> VoxelMap:
    vmap = VoxelMap(Aabb((0.0, 0.0, 0.0), (n * rho, n * rho, n * rho)), rho=rho)
    if fill:
        vmap.log_odds[:] = fill
        vmap.stored[:] = True
    return vmap


def random_map(rng: np.random.Generator, n=12, rho=0.3, p_free=0.6, p_occ=0.15) -> VoxelMap:
    """Map with each cell independently free, occupied or unknown."""
    vmap = box_map(n, rho)
    u = rng.random(vmap.shape)
    vmap.log_odds[u < p_free] = -1.0
    vmap.log_odds[(u >= p_free) & (u < p_free + p_occ)] = 1.0
    vmap.stored[:] = vmap.log_odds != 0.0
    return vmap
