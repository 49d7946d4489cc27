"""Kernel selection.

The compiled extension is used when it imports; otherwise the pure-Python
fallback takes over. Setting ``DISPERSIVE_READOUT_PURE=1`` forces the
fallback, which is how the test-suite exercises both paths.
"""

import os

if os.environ.get("DISPERSIVE_READOUT_PURE", "") not in ("", "0"):
    from . import _purepy as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _purepy as kernels

        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
