"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the
pure-Python module with identical semantics takes over. ``BACKEND``
names the active one. ``use_backend`` switches explicitly (tests and
the benchmark use it to compare the two).
"""
from __future__ import annotations

from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else _kernels_py
BACKEND = "compiled" if _compiled is not None else "python"


def compiled_available() -> bool:
    return _compiled is not None


def use_backend(name: str) -> None:
    global _active, BACKEND
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        _active = _compiled
    elif name == "python":
        _active = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def backend_module(name: str) -> ModuleType:
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    return _kernels_py


def lstm_forward(xw, u):
    return _active.lstm_forward(xw, u)


def lstm_backward(dh_seq, gates, cs, tcs, u):
    return _active.lstm_backward(dh_seq, gates, cs, tcs, u)


def dtw_distance(a, b, band=-1):
    return _active.dtw_distance(a, b, band)


def dtw_path(a, b, band=-1):
    return _active.dtw_path(a, b, band)
