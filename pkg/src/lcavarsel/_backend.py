"""Select the EM kernel: compiled extension if importable, numpy otherwise.

Set ``LCAVARSEL_PURE_PYTHON=1`` to force the numpy kernel.
"""

import os

from . import _em_py

try:
    from . import _em as _em_c
except ImportError:  # extension not built
    _em_c = None

KERNELS = {"python": _em_py.run_em}
if _em_c is not None:
    KERNELS["cython"] = _em_c.run_em

if os.environ.get("LCAVARSEL_PURE_PYTHON", "") not in ("", "0") or _em_c is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

run_em = KERNELS[BACKEND]
