"""Backend selection for the hot DP kernels.

Set ``CTCFUSE_BACKEND=numpy`` to bypass numba entirely; the default is
``numba`` when it imports cleanly. Both backends are always importable from
:mod:`ctcfuse.kernels` so they can be cross-checked and benchmarked.
"""

import os

try:
    import numba as _nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep in CI
    _nb = None
    HAVE_NUMBA = False

_requested = os.environ.get("CTCFUSE_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"CTCFUSE_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


def njit(fn):
    """``numba.njit(cache=True)`` when numba is installed, identity otherwise."""
    if not HAVE_NUMBA:
        return fn
    return _nb.njit(cache=True)(fn)
