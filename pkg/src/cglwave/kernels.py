"""Backend selection for the hot kernels.

The compiled Cython extension is used when it imports; otherwise the numpy
implementation is used. Set ``CGLWAVE_PURE_PYTHON=1`` to force the fallback.
"""
import importlib
import os

_PURE = os.environ.get("CGLWAVE_PURE_PYTHON", "").strip() not in ("", "0")


def load_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "cython":
        return importlib.import_module("cglwave._kernels")
    if name == "python":
        return importlib.import_module("cglwave._kernels_py")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        load_backend("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


if _PURE:
    _impl = load_backend("python")
    BACKEND = "python"
else:
    try:
        _impl = load_backend("cython")
        BACKEND = "cython"
    except ImportError:
        _impl = load_backend("python")
        BACKEND = "python"

reaction_flow = _impl.reaction_flow
semigroup = _impl.semigroup
