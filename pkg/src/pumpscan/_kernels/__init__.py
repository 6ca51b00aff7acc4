"""Kernel backend selection.

Prefers the compiled Cython kernel; falls back to the pure-Python one.
Set PUMPSCAN_PURE_PYTHON=1 to force the fallback (used by the benchmark
and the backend-equivalence tests).
"""

import os

if os.environ.get("PUMPSCAN_PURE_PYTHON"):
    from .rolling_py import rolling_contexts
    BACKEND = "python"
else:
    try:
        from ._rolling_cy import rolling_contexts
        BACKEND = "cython"
    except ImportError:
        from .rolling_py import rolling_contexts
        BACKEND = "python"

__all__ = ["rolling_contexts", "BACKEND"]
