import os
import subprocess
import sys

import pytest

from gradexplore import kernels


@pytest.mark.parametrize("value, expected", [("1", "numpy"), ("true", "numpy"), ("0", "numba"), ("", "numba")])
def test_env_var_selects_backend(value, expected):
    env = dict(os.environ, GRADEXPLORE_DISABLE_NUMBA=value)
    out = subprocess.run(
        [sys.executable, "-c", "from gradexplore import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected


def test_set_backend_round_trip():
    previous = kernels.set_backend("numpy")
    try:
        assert kernels.resolve() == "numpy"
        assert kernels.resolve("numba") == "numba"
    finally:
        kernels.set_backend(previous)
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")
    with pytest.raises(ValueError):
        kernels.resolve("cuda")


def test_fallback_run_smoke():
    env = dict(os.environ, GRADEXPLORE_DISABLE_NUMBA="1")
    code = (
        "from gradexplore.checks import scenario; ex = scenario('tunnel', steps=1); "
        "print(len(ex.frontiers) > 0)"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "True"
