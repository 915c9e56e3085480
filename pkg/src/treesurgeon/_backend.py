"""Kernel selection.

The compiled extension is used when it imports; otherwise the pure-Python
module takes over.  Set ``TREESURGEON_KERNELS=python`` to force the
fallback (benchmarks and the backend-agreement tests do this per call via
:func:`get_kernels`).
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def get_kernels(name: str | None = None):
    name = name or os.environ.get("TREESURGEON_KERNELS", "auto")
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _kernels_c is None:
            raise ImportError("treesurgeon._kernels is not built")
        return _kernels_c
    return _kernels_c or _kernels_py


kernels = get_kernels()
BACKEND = kernels.BACKEND
