"""Select the compiled kernels when available, else the numpy fallback."""

import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if not os.environ.get("LEVY_EXCHANGE_PURE_PYTHON"):
    try:
        from . import _kernels as kernels  # noqa: F811

        BACKEND = "compiled"
    except ImportError:
        pass

psi_integer_sequence = kernels.psi_integer_sequence
sample_gammapp = kernels.sample_gammapp
