import numpy as np
import pytest
from scipy import stats as sps

from xychain.ensemble import (
    Binning,
    EnsembleStats,
    GridPoint,
    Histogram,
    PointUnreliable,
    _histogram,
    histogram_ln_chi,
    run_point,
)
from xychain.model import Boundary, ChainSpec
from xychain.spectral import DriveAxis, Numerics

FAST = Numerics(method="analytic")


def gp(L=32, lam=1.0, gam=1.0, sigma=0.1, n=64,
       boundary=Boundary.PERIODIC_EVEN_SECTOR, drive=DriveAxis.FIELD):
    return GridPoint(ChainSpec(L, lam, gam, sigma, boundary), drive, n)


def stats_equal(a: EnsembleStats, b: EnsembleStats) -> bool:
    return (
        np.array_equal(a.chi_values, b.chi_values)
        and a.chi_ave == b.chi_ave
        and a.ln_chi_mean == b.ln_chi_mean
        and a.ln_chi_sd == b.ln_chi_sd
        and a.n_failed == b.n_failed
        and np.array_equal(a.histogram.edges, b.histogram.edges)
        and np.array_equal(a.histogram.counts, b.histogram.counts)
    )


def test_zero_sigma_all_values_identical():
    stats = run_point(gp(sigma=0.0, n=16), 1, numerics=FAST)
    assert len(stats.chi_values) == 16
    assert np.all(stats.chi_values == stats.chi_values[0])
    assert stats.ln_chi_sd < 1e-12
    assert stats.histogram.counts.sum() == 16


def test_chi_ave_is_fsum_mean():
    import math

    stats = run_point(gp(n=32), 5, numerics=FAST)
    assert stats.chi_ave == math.fsum(stats.chi_values) / len(stats.chi_values)


def test_all_chi_positive_finite():
    stats = run_point(gp(n=64, sigma=0.3), 9, numerics=FAST)
    assert np.all(stats.chi_values > 0)
    assert np.all(np.isfinite(stats.chi_values))


def test_deterministic_rerun():
    a = run_point(gp(n=32), 123, numerics=FAST)
    b = run_point(gp(n=32), 123, numerics=FAST)
    assert stats_equal(a, b)


def test_master_seed_changes_results():
    a = run_point(gp(n=32), 123, numerics=FAST)
    b = run_point(gp(n=32), 124, numerics=FAST)
    assert not np.array_equal(a.chi_values, b.chi_values)


@pytest.mark.parametrize("workers", [4, 8])
def test_worker_count_bit_identical(workers):
    serial = run_point(gp(n=24, L=16), 77, numerics=FAST)
    parallel = run_point(gp(n=24, L=16), 77, numerics=FAST, workers=workers)
    assert stats_equal(serial, parallel)


def test_stencil_and_analytic_close_at_ensemble_level():
    a = run_point(gp(n=16, L=24), 3, numerics=Numerics(method="stencil"))
    b = run_point(gp(n=16, L=24), 3, numerics=FAST)
    assert abs(a.chi_ave - b.chi_ave) / b.chi_ave < 1e-6


def test_failure_accounting_and_point_unreliable(monkeypatch):
    import xychain.ensemble as ens
    from xychain.spectral import GaplessRealization

    calls = {"n": 0}
    orig = ens.realization_chi

    def flaky(spec, r, drive, numerics, rectify=False):
        calls["n"] += 1
        if calls["n"] % 4 == 0:
            raise GaplessRealization(0.0)
        return orig(spec, r, drive, numerics, rectify)

    monkeypatch.setattr(ens, "realization_chi", flaky)
    with pytest.raises(PointUnreliable) as exc_info:
        run_point(gp(n=16), 1, numerics=FAST, fail_tol=0.01)
    stats = exc_info.value.stats
    assert stats.n_failed == 4
    assert stats.n_gapless == 4
    assert len(stats.chi_values) == 12
    assert list(stats.failed_indices) == [3, 7, 11, 15]

    calls["n"] = 0
    stats = run_point(gp(n=16), 1, numerics=FAST, fail_tol=0.5)
    assert stats.n_failed == 4


def test_histogram_single_bin_for_constant_data():
    stats = run_point(gp(sigma=0.0, n=8), 1, numerics=FAST)
    hist = histogram_ln_chi(stats)
    assert (hist.counts > 0).sum() == 1
    widths = np.diff(hist.edges)
    assert abs((hist.density() * widths).sum() - 1.0) < 1e-12


def test_histogram_requires_two_values():
    stats = run_point(gp(sigma=0.0, n=16), 1, numerics=FAST)
    lone = EnsembleStats(
        chi_values=stats.chi_values[:1], chi_ave=stats.chi_ave,
        ln_chi_mean=stats.ln_chi_mean, ln_chi_sd=0.0, histogram=None,
        n_failed=0, n_gapless=0, n_nonconverged=0,
        failed_indices=np.array([], dtype=int), n_realizations=1, master_seed=1)
    with pytest.raises(ValueError):
        histogram_ln_chi(lone)


def test_histogram_synthetic_normal_injection():
    """Known normal distribution pushed through the ln-chi histogram path:
    recovered mean and sd within 3 standard errors."""
    rng = np.random.default_rng(8)
    n = 50_000
    mu, sd = 2.5, 0.7
    ln_chi = rng.normal(mu, sd, n)
    hist = _histogram(ln_chi, Binning())
    centers = (hist.edges[:-1] + hist.edges[1:]) / 2.0
    density = hist.density()
    widths = np.diff(hist.edges)
    est_mean = float((centers * density * widths).sum())
    est_var = float(((centers - est_mean) ** 2 * density * widths).sum())
    assert abs((density * widths).sum() - 1.0) < 1e-12
    assert abs(est_mean - ln_chi.mean()) < 3 * sd / np.sqrt(n) + widths.max()
    assert abs(est_mean - mu) < 3 * sd / np.sqrt(n) + widths.max()
    assert abs(np.sqrt(est_var) - sd) < 0.05


def test_fixed_width_binning():
    values = np.array([0.0, 0.4, 1.1, 2.9])
    hist = _histogram(values, Binning(method="fixed", width=1.0))
    assert np.allclose(np.diff(hist.edges), 1.0)
    assert hist.counts.sum() == 4
    with pytest.raises(ValueError):
        Binning(method="fixed")


def test_broadening_at_criticality_desk_scale():
    """sd(ln chi) grows with L at the critical point, shrinks off it."""
    sd = {}
    for lam in (1.0, 1.5):
        for L in (32, 64, 128):
            stats = run_point(gp(L=L, lam=lam, n=400), 2024, numerics=FAST)
            sd[lam, L] = stats.ln_chi_sd
    assert sd[1.0, 32] < sd[1.0, 64] < sd[1.0, 128]
    assert sd[1.5, 32] > sd[1.5, 64] > sd[1.5, 128]


def test_lnchi_distribution_more_skewed_at_criticality():
    """Griffiths broadening: the critical ln-chi distribution is more
    asymmetric than the off-critical one at matched (L, sigma, N).  The
    asymmetry points toward small chi (rare locally-off-critical samples),
    so compare magnitudes."""
    crit = run_point(gp(L=64, lam=1.0, n=400), 99, numerics=FAST)
    away = run_point(gp(L=64, lam=1.5, n=400), 99, numerics=FAST)
    skew_crit = sps.skew(np.log(crit.chi_values))
    skew_away = sps.skew(np.log(away.chi_values))
    assert abs(skew_crit) > abs(skew_away)
