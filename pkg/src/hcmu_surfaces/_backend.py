"""Kernel backend selection.

The compiled extension is used when it imports; setting ``HCMU_PURE_PYTHON=1``
forces the pure-Python kernels.
"""
import importlib
import os

from . import _kernels_py

BACKENDS = ("cython", "python")


def load(name):
    if name == "python":
        return _kernels_py
    if name == "cython":
        return importlib.import_module("hcmu_surfaces._kernels")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = []
    for name in BACKENDS:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    if os.environ.get("HCMU_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py
    try:
        return load("cython")
    except ImportError:
        return _kernels_py


kernels = _select()
