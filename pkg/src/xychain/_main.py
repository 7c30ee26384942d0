"""Console entry point.

Pins the BLAS thread count (when the user has not set it) before numpy is
first imported, so that CLI results are bit-identical across machines and
across ``--workers`` counts.
"""

import os


def main(argv=None) -> int:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")
    from .cli import main as cli_main

    return cli_main(argv)
