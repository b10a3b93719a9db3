"""Pins BLAS pools to one thread before numpy loads anywhere in the suite.

Results must not depend on threading, and single-threaded kernels make
every floating-point reduction deterministic, so reports can be compared
byte for byte.
"""

import os

for _var in (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
):
    os.environ[_var] = "1"
