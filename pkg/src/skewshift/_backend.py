"""Select the compiled kernels when available, numpy fallback otherwise.

Set ``SKEWSHIFT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

try:
    if os.environ.get("SKEWSHIFT_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as kernels

    NAME = "cython"
except ImportError:
    kernels = _fallback
    NAME = "python"


def get(name=None):
    """Return a kernel module by name ("cython" or "python"); default is active."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names
