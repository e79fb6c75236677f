"""Multi-modal generative perception for a simulated soft finger."""

import os as _os

# BLAS pools are sized when numpy loads, so the cap must be in place first
_threads = _os.environ.get("SOFTPERCEPT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
