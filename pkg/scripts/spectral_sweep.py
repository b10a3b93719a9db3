"""Scale sweep on the circle: harmonic dims and spectral gaps per (eps, alpha).

The first cohomology dies once eps passes the contractibility scale of the
sample; the CSV makes the transition visible. Columns as in `nlhodge sweep`.
"""

import os
import sys

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nlhodge.cli import main  # noqa: E402

if __name__ == "__main__":
    argv = [
        "sweep",
        "--space", "circle",
        "--n", "32",
        "--system", "rips",
        "--eps-grid", "0.3,0.7,1.1,1.5,1.9,2.3,2.7,3.1,3.5",
        "--alpha-grid", "0.5,1.0,1.5",
        "--pmax", "1",
    ] + sys.argv[1:]
    sys.exit(main(argv))
