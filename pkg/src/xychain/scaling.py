"""Parameter sweeps and finite-size scaling of the average susceptibility.

The size dependence [chi]_ave ~ L^Delta is summarized by the exponent Delta
from a least-squares fit of ln(chi_ave) against ln(L); sweeps evaluate a
grid of drive values at several sizes and fit Delta(x) pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .ensemble import Binning, EnsembleStats, GridPoint, PointUnreliable, run_point
from .model import ChainSpec
from .spectral import DriveAxis, Numerics


@dataclass(frozen=True)
class ScalingFit:
    """Result of the log-log fit chi_ave ~ L^delta_chi."""

    delta_chi: float
    stderr: float
    intercept: float
    r_squared: float
    sizes_used: tuple[int, ...]


def fit_scaling_dimension(points: Iterable[tuple[int, float]],
                          weights: Sequence[float] | None = None) -> ScalingFit:
    """Least squares of ln(chi_ave) on ln(L).

    Points are sorted internally (by size, then value), so the fit does not
    depend on input order.  ``weights`` enables a weighted fit, e.g. with
    inverse squared standard errors of ln(chi_ave); the default is ordinary
    least squares.

    Raises
    ------
    ValueError
        Fewer than 3 distinct sizes, or a nonpositive chi_ave.
    """
    pts = list(points)
    if weights is None:
        order = sorted(range(len(pts)), key=lambda i: (pts[i][0], pts[i][1]))
        w = [1.0] * len(pts)
    else:
        if len(weights) != len(pts):
            raise ValueError("weights must match the number of points")
        order = sorted(range(len(pts)),
                       key=lambda i: (pts[i][0], pts[i][1], weights[i]))
        w = [float(weights[i]) for i in order]
    pts = [pts[i] for i in order]

    if len({L for L, _ in pts}) < 3:
        raise ValueError("scaling fit requires at least 3 distinct sizes")
    if any(chi <= 0 for _, chi in pts):
        raise ValueError("scaling fit requires positive chi_ave values")

    x = [math.log(L) for L, _ in pts]
    y = [math.log(chi) for _, chi in pts]
    sw = math.fsum(w)
    xbar = math.fsum(wi * xi for wi, xi in zip(w, x)) / sw
    ybar = math.fsum(wi * yi for wi, yi in zip(w, y)) / sw
    sxx = math.fsum(wi * (xi - xbar) ** 2 for wi, xi in zip(w, x))
    sxy = math.fsum(wi * (xi - xbar) * (yi - ybar)
                    for wi, xi, yi in zip(w, x, y))
    slope = sxy / sxx
    intercept = ybar - slope * xbar

    residuals = [yi - (intercept + slope * xi) for xi, yi in zip(x, y)]
    ssr = math.fsum(wi * ri ** 2 for wi, ri in zip(w, residuals))
    sst = math.fsum(wi * (yi - ybar) ** 2 for wi, yi in zip(w, y))
    n = len(pts)
    stderr = math.sqrt(max(ssr, 0.0) / (n - 2) / sxx) if n > 2 else 0.0
    r_squared = 1.0 if sst == 0.0 else 1.0 - ssr / sst

    return ScalingFit(
        delta_chi=slope,
        stderr=stderr,
        intercept=intercept,
        r_squared=r_squared,
        sizes_used=tuple(sorted({L for L, _ in pts})),
    )


@dataclass(eq=False)
class SweepRow:
    """One (drive value, size) entry of a sweep table."""

    drive_value: float
    length: int
    stats: EnsembleStats
    reliable: bool


@dataclass(eq=False)
class SweepResult:
    """Long-format sweep table plus the per-value scaling fits."""

    drive: DriveAxis
    sizes: tuple[int, ...]
    values: tuple[float, ...]
    rows: list[SweepRow]
    fits: list[tuple[float, ScalingFit | None]]
    master_seed: int

    def row(self, drive_value: float, length: int) -> SweepRow:
        for r in self.rows:
            if r.drive_value == drive_value and r.length == length:
                return r
        raise KeyError((drive_value, length))

    def chi_curve(self, length: int) -> tuple[list[float], list[float]]:
        xs = [r.drive_value for r in self.rows if r.length == length]
        ys = [r.stats.chi_ave for r in self.rows if r.length == length]
        return xs, ys

    @property
    def any_unreliable(self) -> bool:
        return any(not r.reliable for r in self.rows)


def _with_drive_value(spec: ChainSpec, drive: DriveAxis, value: float,
                      length: int) -> ChainSpec:
    if drive is DriveAxis.FIELD:
        return replace(spec, length=length, mean_field=value)
    return replace(spec, length=length, mean_anisotropy=value)


def sweep(base: ChainSpec, drive: DriveAxis, values: Sequence[float],
          sizes: Sequence[int], n_realizations: int, master_seed: int, *,
          n_by_size: Mapping[int, int] | None = None,
          numerics: Numerics = Numerics(),
          rectify: bool = False,
          fail_tol: float = 0.01,
          workers: int = 1,
          binning: Binning = Binning()) -> SweepResult:
    """Run the ensemble over a drive-value grid at several sizes.

    The driven mean of ``base`` is replaced by each grid value (the other
    mean and sigma are held fixed), and a scaling fit across sizes is
    produced per value.  Unreliable points are kept in the table, flagged,
    and excluded from the fits; a fit is emitted only where at least three
    sizes remain.
    """
    rows: list[SweepRow] = []
    for value in values:
        for L in sizes:
            spec = _with_drive_value(base, drive, value, L)
            n = n_realizations if n_by_size is None else n_by_size.get(L, n_realizations)
            gp = GridPoint(spec=spec, drive=drive, n_realizations=n)
            try:
                stats = run_point(gp, master_seed, numerics=numerics,
                                  rectify=rectify, fail_tol=fail_tol,
                                  workers=workers, binning=binning)
                rows.append(SweepRow(value, L, stats, True))
            except PointUnreliable as exc:
                rows.append(SweepRow(value, L, exc.stats, False))

    fits: list[tuple[float, ScalingFit | None]] = []
    for value in values:
        pts = [(r.length, r.stats.chi_ave) for r in rows
               if r.drive_value == value and r.reliable
               and r.stats.chi_ave > 0]
        try:
            fits.append((value, fit_scaling_dimension(pts)))
        except ValueError:
            fits.append((value, None))

    return SweepResult(
        drive=drive,
        sizes=tuple(sizes),
        values=tuple(values),
        rows=rows,
        fits=fits,
        master_seed=master_seed,
    )


def local_maxima(heights: Sequence[float]) -> list[int]:
    """Indices of strict interior local maxima of a gridded curve."""
    return [i for i in range(1, len(heights) - 1)
            if heights[i] > heights[i - 1] and heights[i] > heights[i + 1]]


def peak_location(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Grid argmax with parabolic refinement through the three
    neighboring points; boundary maxima are returned unrefined."""
    if len(xs) != len(ys) or len(xs) == 0:
        raise ValueError("xs and ys must be equal-length and nonempty")
    i = max(range(len(ys)), key=lambda j: ys[j])
    if i == 0 or i == len(ys) - 1:
        return xs[i], ys[i]
    x0, x1, x2 = xs[i - 1], xs[i], xs[i + 1]
    y0, y1, y2 = ys[i - 1], ys[i], ys[i + 1]
    denom = (y0 - 2.0 * y1 + y2)
    if denom >= 0.0:
        return x1, y1  # no downward curvature at the top: keep the grid point
    shift = 0.5 * (y0 - y2) / denom
    # equal spacing assumed for the vertex formula; fall back otherwise
    h1, h2 = x1 - x0, x2 - x1
    if abs(h1 - h2) > 1e-9 * max(abs(h1), abs(h2)):
        return x1, y1
    xstar = x1 + shift * h1
    ystar = y1 - 0.25 * (y0 - y2) * shift
    return xstar, ystar
