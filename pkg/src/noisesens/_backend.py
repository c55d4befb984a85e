"""Kernel backend selection.

The compiled extension is used when it imports; ``NOISESENS_PURE=1`` forces
the numpy fallback (handy for debugging and for the benchmark).
"""

import os

from . import _fallback

try:
    if os.environ.get("NOISESENS_PURE"):
        raise ImportError("pure backend requested")
    from . import _kernels as kernels
    BACKEND = "compiled"
except ImportError:
    kernels = _fallback
    BACKEND = "python"


def get_kernels(name=None):
    """Return the kernel module for ``name`` ('compiled', 'python' or None for the default)."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
