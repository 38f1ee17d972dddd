"""Backend selection for the inner-loop kernels.

The compiled extension is used when it imports; otherwise, or when the
``ELMCAST_PURE_PYTHON`` environment variable is set to a non-empty value
other than ``0``, the NumPy fallback is used. ``BACKEND`` names the choice.
"""
import os

from . import _kernels_py

_force_python = os.environ.get("ELMCAST_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

bias_relu_inplace = _impl.bias_relu_inplace
joint_histogram = _impl.joint_histogram
lag_windows = _impl.lag_windows
fill_linear = _impl.fill_linear


def available_backends():
    """Return ``{name: module}`` for every backend importable in this process."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels
        found["cython"] = _kernels
    except ImportError:
        pass
    return found
