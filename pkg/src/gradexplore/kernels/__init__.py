"""Hot loops for traversal, visibility, fuzzy information gain and scan fusion.

Every kernel has two routes: a numba ``@njit`` loop and a vectorized numpy
version. The numba route is used when numba imports and the environment
variable ``GRADEXPLORE_DISABLE_NUMBA`` is unset (or ``0``/``false``).
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_disabled() -> bool:
    return os.environ.get("GRADEXPLORE_DISABLE_NUMBA", "").strip().lower() not in (
        "",
        "0",
        "false",
        "no",
    )


BACKEND = "numba" if HAVE_NUMBA and not _env_disabled() else "numpy"


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when numba is present, identity otherwise."""
    kwargs.setdefault("cache", True)

    def wrap(f):
        if not HAVE_NUMBA:
            return f
        return numba.njit(**kwargs)(f)

    if func is None:
        return wrap
    return wrap(func)


def set_backend(name: str) -> str:
    """Switch the process-wide backend; returns the previous one."""
    global BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    previous, BACKEND = BACKEND, name
    return previous


def resolve(backend=None) -> str:
    backend = BACKEND if backend is None else backend
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend
