"""Backend selection for the hot kernels.

The environment variable ``QDEMON_BACKEND`` picks the implementation:

* ``numba`` (default when importable): jit-compiled per-shot loops,
  parallel across shots,
* ``numpy``: pure-numpy vectorized fallback, no compilation step.

Both backends implement the same arithmetic per shot; results agree to
floating-point accumulation order (the numba backend is bitwise independent
of the ensemble size, the numpy backend may batch matrix products).
"""

from __future__ import annotations

import os

_choice = os.environ.get("QDEMON_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"QDEMON_BACKEND={_choice!r} not recognized (use 'numba' or 'numpy')"
    )

if _choice in ("auto", "numba"):
    try:
        from . import numba_impl as _impl

        _name = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        from . import numpy_impl as _impl

        _name = "numpy"
else:
    from . import numpy_impl as _impl

    _name = "numpy"

sme_synthesize = _impl.sme_synthesize
sme_filter = _impl.sme_filter
chi_evolve = _impl.chi_evolve


def backend_name() -> str:
    return _name
