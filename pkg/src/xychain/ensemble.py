"""Disorder ensembles: N realizations per parameter point, reproducibly.

Realization i is fully determined by (master_seed, i), so the ensemble can
be mapped over any number of worker processes; results are gathered into an
index-ordered array and reduced serially with math.fsum (exactly rounded),
making every statistic bit-identical for any worker count.

Realizations whose susceptibility evaluation fails -- a closing
single-particle gap or a non-converged stencil -- are excluded from the
statistics and counted, so that a diverging sample cannot silently poison
the disorder average.  A point whose failure fraction exceeds ``fail_tol``
raises PointUnreliable (the partial statistics ride along on the exception).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .disorder import SeedPolicy, sample_realization
from .model import ChainSpec
from .spectral import (
    DriveAxis,
    GaplessRealization,
    NonConvergedDerivative,
    Numerics,
    realization_chi,
)

_OK = 0
_GAPLESS = 1
_NONCONVERGED = 2


@dataclass(frozen=True)
class GridPoint:
    """One parameter point of an ensemble run."""

    spec: ChainSpec
    drive: DriveAxis
    n_realizations: int

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")


@dataclass(frozen=True)
class Binning:
    """Histogram binning rule: Freedman-Diaconis or a fixed bin width."""

    method: str = "fd"
    width: float | None = None

    def __post_init__(self):
        if self.method not in ("fd", "fixed"):
            raise ValueError(f"unknown binning method {self.method!r}")
        if self.method == "fixed" and (self.width is None or self.width <= 0):
            raise ValueError("fixed binning requires a positive width")


@dataclass(frozen=True)
class Histogram:
    """Bin edges and raw counts; densities integrate to one."""

    edges: np.ndarray
    counts: np.ndarray

    def density(self) -> np.ndarray:
        widths = np.diff(self.edges)
        total = self.counts.sum()
        return self.counts / (total * widths)


@dataclass(eq=False)
class EnsembleStats:
    """Disorder statistics of the susceptibility at one grid point.

    chi_values holds the successful realizations in index order; chi_ave,
    ln_chi_mean and ln_chi_sd are fsum-reduced from it.  n_failed counts
    excluded realizations (n_gapless + n_nonconverged).
    """

    chi_values: np.ndarray
    chi_ave: float
    ln_chi_mean: float
    ln_chi_sd: float
    histogram: Histogram | None
    n_failed: int
    n_gapless: int
    n_nonconverged: int
    failed_indices: np.ndarray
    n_realizations: int
    master_seed: int


class PointUnreliable(Exception):
    """Too many failed realizations at one grid point."""

    def __init__(self, message: str, stats: EnsembleStats):
        super().__init__(message)
        self.stats = stats


def _chi_for_index(spec: ChainSpec, drive: DriveAxis, master_seed: int,
                   index: int, numerics: Numerics,
                   rectify: bool) -> tuple[int, int, float]:
    r = sample_realization(spec, SeedPolicy(master_seed, index))
    try:
        return index, _OK, realization_chi(spec, r, drive, numerics, rectify)
    except GaplessRealization:
        return index, _GAPLESS, 0.0
    except NonConvergedDerivative:
        return index, _NONCONVERGED, 0.0


def _worker_chunk(payload) -> list[tuple[int, int, float]]:
    spec, drive, master_seed, numerics, rectify, indices = payload
    return [_chi_for_index(spec, drive, master_seed, i, numerics, rectify)
            for i in indices]


def _mean(values: np.ndarray) -> float:
    return math.fsum(values) / len(values) if len(values) else math.nan


def _sample_sd(values: np.ndarray, mean: float) -> float:
    if len(values) < 2:
        return math.nan
    return math.sqrt(math.fsum((values - mean) ** 2) / (len(values) - 1))


def _histogram(values: np.ndarray, binning: Binning) -> Histogram:
    if binning.method == "fixed":
        lo, hi = values.min(), values.max()
        n_bins = max(1, int(math.ceil((hi - lo) / binning.width - 1e-12)))
        edges = lo + binning.width * np.arange(n_bins + 1)
    else:
        edges = np.histogram_bin_edges(values, bins="fd")
    counts, edges = np.histogram(values, bins=edges)
    return Histogram(edges=edges, counts=counts)


def histogram_ln_chi(stats: EnsembleStats, binning: Binning = Binning()) -> Histogram:
    """Histogram of ln(chi) over the successful realizations."""
    if len(stats.chi_values) < 2:
        raise ValueError("histogram requires at least 2 successful realizations")
    return _histogram(np.log(stats.chi_values), binning)


def run_point(gp: GridPoint, master_seed: int, *,
              numerics: Numerics = Numerics(),
              rectify: bool = False,
              fail_tol: float = 0.01,
              workers: int = 1,
              binning: Binning = Binning()) -> EnsembleStats:
    """Run all realizations of one grid point and reduce deterministically.

    The result is a pure function of (gp, master_seed, numerics, rectify):
    parallel workers only change wall time.  ``rectify`` selects the
    positive-coupling reading of the disorder (couplings are fold-ed
    absolute values, drives differentiate with respect to the mean).  With
    disorder_sigma == 0 all realizations are identical, so one evaluation
    is reused for the N of them.

    Raises
    ------
    PointUnreliable
        If more than fail_tol of the realizations failed; the partial
        statistics are attached to the exception.
    """
    spec, drive, n = gp.spec, gp.drive, gp.n_realizations
    status = np.empty(n, dtype=np.int64)
    values = np.empty(n, dtype=float)

    if spec.disorder_sigma == 0.0:
        _, code, val = _chi_for_index(spec, drive, master_seed, 0,
                                      numerics, rectify)
        status[:] = code
        values[:] = val
    elif workers <= 1:
        for i in range(n):
            _, code, val = _chi_for_index(spec, drive, master_seed, i,
                                          numerics, rectify)
            status[i] = code
            values[i] = val
    else:
        import multiprocessing as mp

        # children inherit a pinned BLAS thread count so their arithmetic
        # matches single-worker runs on any machine
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, "1")
        chunk = max(1, -(-n // (workers * 4)))
        payloads = [
            (spec, drive, master_seed, numerics, rectify,
             range(lo, min(lo + chunk, n)))
            for lo in range(0, n, chunk)
        ]
        ctx = mp.get_context("spawn")
        with ctx.Pool(processes=workers) as pool:
            for results in pool.imap_unordered(_worker_chunk, payloads):
                for i, code, val in results:
                    status[i] = code
                    values[i] = val

    ok = status == _OK
    chi_values = values[ok]
    n_gapless = int(np.count_nonzero(status == _GAPLESS))
    n_nonconverged = int(np.count_nonzero(status == _NONCONVERGED))
    n_failed = n_gapless + n_nonconverged

    chi_ave = _mean(chi_values)
    ln_chi = np.log(chi_values) if len(chi_values) else chi_values
    ln_mean = _mean(ln_chi)
    ln_sd = _sample_sd(ln_chi, ln_mean)
    hist = _histogram(ln_chi, binning) if len(chi_values) >= 2 else None

    stats = EnsembleStats(
        chi_values=chi_values,
        chi_ave=chi_ave,
        ln_chi_mean=ln_mean,
        ln_chi_sd=ln_sd,
        histogram=hist,
        n_failed=n_failed,
        n_gapless=n_gapless,
        n_nonconverged=n_nonconverged,
        failed_indices=np.flatnonzero(~ok),
        n_realizations=n,
        master_seed=master_seed,
    )
    if n_failed > fail_tol * n:
        raise PointUnreliable(
            f"{n_failed}/{n} realizations failed (tolerance {fail_tol:.2%})",
            stats,
        )
    return stats
