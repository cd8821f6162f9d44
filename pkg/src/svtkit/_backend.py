"""Selects the scalar prox kernel implementation at import time.

The compiled Cython kernel is preferred when it was built; otherwise the
pure-Python fallback is used.  Setting the environment variable
``SVTKIT_PURE_PYTHON=1`` forces the fallback (useful for debugging and
for the backend benchmark).
"""

import os

if os.environ.get("SVTKIT_PURE_PYTHON", "") not in ("", "0"):
    from . import _prox_fallback as kernel

    BACKEND = "python"
else:
    try:
        from . import _prox_kernel as kernel  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _prox_fallback as kernel  # type: ignore[no-redef]

        BACKEND = "python"


def backend() -> str:
    """Name of the active prox kernel backend: 'compiled' or 'python'."""
    return BACKEND
