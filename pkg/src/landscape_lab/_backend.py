"""Pick the path-walking kernels at import time.

The compiled ``_kernels`` extension is used when it was built; otherwise,
or when ``LANDSCAPE_LAB_BACKEND=python``, the numpy fallback is used.
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled


def available():
    return sorted(_BACKENDS)


def get_kernels(name=None):
    if name is None:
        name = os.environ.get("LANDSCAPE_LAB_BACKEND", "").lower() or None
    if name is None:
        return _compiled if _compiled is not None else _kernels_py
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} is not available (have {available()})") from None


def default_threads():
    env = os.environ.get("LANDSCAPE_LAB_THREADS")
    if env:
        return max(1, int(env))
    return 1


BACKEND = get_kernels().NAME
