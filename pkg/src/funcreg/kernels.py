"""Backend selection for the hot loops.

The compiled extension is used when importable; set ``FUNCREG_PURE_PYTHON=1``
to force the reference implementation.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("FUNCREG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

fill_subset_coefficients = _impl.fill_subset_coefficients
mgs_weighted = _impl.mgs_weighted


def backends():
    """Return the available ``{name: module}`` backends, reference first."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        return found
    found["cython"] = _compiled
    return found
