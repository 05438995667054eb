"""Selects the numerical kernel backend at import time.

The compiled Cython extension is preferred; the NumPy twin is the fallback.
Set SEASONCHAIN_BACKEND=python (or =compiled) to force a choice; forcing
"compiled" raises if the extension is missing rather than degrading silently.
"""

import os

_requested = os.environ.get("SEASONCHAIN_BACKEND", "").strip().lower()

if _requested == "python":
    from . import _kernels_py as kernels
elif _requested == "compiled":
    from . import _ckernels as kernels  # ImportError here is deliberate
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.BACKEND_NAME


def backend_name() -> str:
    """Name of the active kernel backend ("compiled" or "python")."""
    return BACKEND
