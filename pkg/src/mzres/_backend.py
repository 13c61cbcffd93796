"""Backend selection: numba-compiled loops or a pure-numpy fallback.

Set ``MZRES_BACKEND=numpy`` to force the fallback.  Both backends evaluate
the same pointwise formulas, so results agree to the last bit or close to it.
"""
from __future__ import annotations

import os
import types

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None


def default_backend() -> str:
    want = os.environ.get("MZRES_BACKEND", "numba").strip().lower()
    if want not in ("numba", "numpy"):
        raise ValueError(f"MZRES_BACKEND must be 'numba' or 'numpy', got {want!r}")
    if want == "numba" and not HAVE_NUMBA:
        return "numpy"
    return want


def jit_group(funcs, namespace):
    """Compile ``funcs`` with numba so that they resolve each other jitted.

    Each function is re-created over a copy of ``namespace`` in which every
    function of the group is replaced by its compiled dispatcher.
    """
    ns = dict(namespace)
    out = {}
    for fn in funcs:
        clone = types.FunctionType(fn.__code__, ns, fn.__name__, fn.__defaults__)
        out[fn.__name__] = numba.njit(cache=False, nogil=True)(clone)
        ns[fn.__name__] = out[fn.__name__]
    return types.SimpleNamespace(**out)
