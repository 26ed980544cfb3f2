"""Select the compiled kernels when available, the numpy ones otherwise.

Set ``LNN_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels
from ._pykernels import ERF_ACT, LOGISTIC, PROBIT, SQUASHER  # noqa: F401

BACKEND = "python"
kernels = _pykernels

if not os.environ.get("LNN_PURE_PYTHON"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

feature_matrix = kernels.feature_matrix
binary_cube_terms = kernels.binary_cube_terms
product_kernel_weights = kernels.product_kernel_weights
link_values = _pykernels.link_values
