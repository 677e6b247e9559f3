"""Backend selection for the numeric kernels.

Set ``CATFB_DISABLE_NUMBA=1`` to force the pure-numpy code paths (useful for
debugging and for the kernel benchmark). Numba is also skipped silently when
it cannot be imported.
"""

import os

_FLAG = os.environ.get("CATFB_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
