"""Polar decomposition, ground-state fidelity, and fidelity susceptibility.

The ground state of a quadratic form is encoded by the orthogonal factor T
of the polar decomposition Z = T P, Z = A - B.  Two states at nearby
parameter values have fidelity

    F = sqrt(|det((T + T~)/2)|)

and the susceptibility is the squared rate of change of T,

    chi = (1/8) ||dT/dx||_F^2 ,

with x the driving parameter (mean field or mean anisotropy).  Three
estimators are provided:

* ``susceptibility``           central finite difference of T with a
                               half-step (Richardson) consistency check;
* ``susceptibility_analytic``  exact dT/dx from first-order perturbation of
                               the singular value decomposition -- one SVD,
                               no step-size parameter;
* ``susceptibility_from_logfidelity``  the defining limit
                               -2 ln F(x, x+dx)/dx^2 at finite dx, kept as
                               a cross-check of the other two.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import Boundary, ChainSpec, QuadraticForm, Realization, _assemble, build_quadratic_form

DEFAULT_SV_TOL = 1e-12
DEFAULT_DELTA = 1e-5
DEFAULT_RICHARDSON_RTOL = 1e-4


class GaplessRealization(Exception):
    """Z is (numerically) singular: the single-particle gap closed.

    Carries the offending relative singular value; callers typically count
    and skip the realization.
    """

    def __init__(self, rel_singular_value: float):
        self.rel_singular_value = rel_singular_value
        super().__init__(
            f"smallest singular value {rel_singular_value:.3e} of Z (relative "
            f"to the largest) is below tolerance; polar factor is unreliable"
        )


class NonConvergedDerivative(Exception):
    """The finite-difference stencil failed its half-step consistency check."""


class DriveAxis(Enum):
    """Which mean parameter is being driven."""

    FIELD = "field"
    ANISOTROPY = "anisotropy"


@dataclass(frozen=True)
class OrthogonalFactor:
    """Orthogonal part T of the polar decomposition of Z."""

    matrix: np.ndarray


@dataclass(frozen=True)
class Numerics:
    """Settings for the susceptibility estimators.

    method : "stencil" or "analytic"
        Derivative evaluation used by ensemble runs.  The stencil is a
        central difference of step ``delta`` verified at delta/2; the
        analytic method differentiates the SVD exactly and has no step.
    """

    method: str = "stencil"
    delta: float = DEFAULT_DELTA
    sv_tol: float = DEFAULT_SV_TOL
    richardson_rtol: float = DEFAULT_RICHARDSON_RTOL
    dx_check: float = 1e-4

    def __post_init__(self):
        if self.method not in ("stencil", "analytic"):
            raise ValueError(f"unknown derivative method {self.method!r}")
        for name in ("delta", "sv_tol", "richardson_rtol", "dx_check"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def polar_unitary(Z: np.ndarray, sv_tol: float = DEFAULT_SV_TOL) -> OrthogonalFactor:
    """Orthogonal factor of the polar decomposition Z = T P.

    T = U V^t from the SVD Z = U S V^t; P = T^t Z is then symmetric PSD.

    Raises
    ------
    GaplessRealization
        If the smallest singular value is below sv_tol times the largest.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError("Z must be a square matrix")
    U, s, Vt = np.linalg.svd(Z)
    if s[-1] < sv_tol * s[0]:
        raise GaplessRealization(float(s[-1] / s[0]) if s[0] > 0 else 0.0)
    return OrthogonalFactor(U @ Vt)


def _polar_T(qf: QuadraticForm, sv_tol: float) -> np.ndarray:
    return polar_unitary(qf.zmatrix(), sv_tol).matrix


def fidelity(qf1: QuadraticForm, qf2: QuadraticForm,
             sv_tol: float = DEFAULT_SV_TOL) -> float:
    """Ground-state fidelity sqrt(|det((T1 + T2)/2)|) of two quadratic forms.

    Evaluated through the log-determinant so that exponentially small
    fidelities at large L do not underflow intermediate products.  States
    whose orthogonal factors have opposite determinant signs live in
    opposite fermion-parity sectors, where det(T1 + T2) vanishes
    identically; returning exactly 0 there avoids the sqrt(roundoff) floor
    of the factorized determinant.
    """
    if qf1.length != qf2.length:
        raise ValueError("quadratic forms have different sizes")
    if qf1.boundary is not qf2.boundary:
        raise ValueError("quadratic forms have different boundary conditions")
    T1 = _polar_T(qf1, sv_tol)
    T2 = _polar_T(qf2, sv_tol)
    s1, _ = np.linalg.slogdet(T1)
    s2, _ = np.linalg.slogdet(T2)
    if s1 * s2 < 0:
        return 0.0
    sign, logabsdet = np.linalg.slogdet((T1 + T2) / 2.0)
    if sign == 0.0:
        return 0.0
    f = float(np.exp(0.5 * logabsdet))
    if f > 1.0:
        if f - 1.0 > 1e-9:
            raise ArithmeticError(f"fidelity {f} exceeds 1 beyond roundoff")
        f = 1.0
    return f


def _shifted_form(spec: ChainSpec, r: Realization, drive: DriveAxis,
                  d: float, rectify: bool = False) -> QuadraticForm:
    """Quadratic form with the driven mean shifted by d, disorder frozen.

    With ``rectify`` the chain's couplings are the absolute values of the
    (shifted) raw samples: the positive-coupling reading of the Gaussian
    model.  The fold is applied after the shift, so the drive remains the
    derivative with respect to the distribution mean.
    """
    shifted = r.shifted(dfield=d) if drive is DriveAxis.FIELD \
        else r.shifted(danisotropy=d)
    if rectify:
        shifted = Realization(np.abs(shifted.fields), np.abs(shifted.anisotropies))
    return build_quadratic_form(spec, shifted)


def _stencil_chi(spec: ChainSpec, r: Realization, drive: DriveAxis,
                 delta: float, sv_tol: float, rectify: bool) -> float:
    Tp = _polar_T(_shifted_form(spec, r, drive, +delta, rectify), sv_tol)
    Tm = _polar_T(_shifted_form(spec, r, drive, -delta, rectify), sv_tol)
    D = (Tp - Tm) / (2.0 * delta)
    return float(np.sum(D * D) / 8.0)


def susceptibility(spec: ChainSpec, r: Realization, drive: DriveAxis,
                   delta: float = DEFAULT_DELTA, *,
                   sv_tol: float = DEFAULT_SV_TOL,
                   richardson_rtol: float | None = DEFAULT_RICHARDSON_RTOL,
                   rectify: bool = False) -> float:
    """Fidelity susceptibility (1/8)||dT/dx||_F^2 by central difference.

    The drive shifts the distribution mean by +-delta with the disorder
    offsets held fixed: every site's field (or anisotropy) moves uniformly,
    and under ``rectify`` the positive-coupling fold is reapplied after the
    shift.  The stencil value at ``delta`` is returned after agreeing with
    the half-step value to relative ``richardson_rtol`` (pass None to skip
    the check).

    Raises
    ------
    GaplessRealization
        If Z is numerically singular at any stencil point.
    NonConvergedDerivative
        If the delta and delta/2 estimates disagree.
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    chi = _stencil_chi(spec, r, drive, delta, sv_tol, rectify)
    if richardson_rtol is not None:
        chi_half = _stencil_chi(spec, r, drive, delta / 2.0, sv_tol, rectify)
        scale = max(abs(chi_half), np.finfo(float).tiny)
        if abs(chi - chi_half) > richardson_rtol * scale:
            raise NonConvergedDerivative(
                f"stencil estimates at delta={delta:g} and delta/2 differ by "
                f"relative {abs(chi - chi_half) / scale:.3e}"
            )
    return chi


def _drive_matrix(spec: ChainSpec, drive: DriveAxis,
                  site_signs: np.ndarray | None = None) -> np.ndarray:
    """dZ/dx for a shift of the driven per-site parameter.

    ``site_signs`` carries the fold orientation of the positive-coupling
    model (d|x|/dx per site); None means the raw model (all +1).
    """
    L = spec.length
    if drive is DriveAxis.FIELD:
        if site_signs is None:
            return 2.0 * np.eye(L)
        return 2.0 * np.diag(site_signs)
    corner = 0.0 if spec.boundary is Boundary.OPEN else -1.0
    weights = np.ones(L) if site_signs is None else site_signs
    unit = _assemble(np.zeros(L), weights, corner, spec.boundary)
    return -unit.B


def susceptibility_analytic(spec: ChainSpec, r: Realization, drive: DriveAxis,
                            sv_tol: float = DEFAULT_SV_TOL,
                            rectify: bool = False) -> float:
    """Fidelity susceptibility from the exact derivative of the polar factor.

    First-order perturbation of Z = U S V^t gives

        dT = U W V^t,   W_ij = (F_ij - F_ji)/(s_i + s_j),   F = U^t dZ V,

    which is well defined also for degenerate singular values; only a
    closing gap (s_i + s_j -> 0) is singular, matching the physical
    divergence.  chi = (1/8)||W||_F^2 by orthogonal invariance.

    With ``rectify`` the couplings are |raw values| and dZ/dx picks up the
    fold sign of each site (the derivative is one-sided exactly at a fold,
    a measure-zero event).
    """
    qf = _shifted_form(spec, r, drive, 0.0, rectify)
    U, s, Vt = np.linalg.svd(qf.zmatrix())
    if s[-1] < sv_tol * s[0]:
        raise GaplessRealization(float(s[-1] / s[0]) if s[0] > 0 else 0.0)
    signs = None
    if rectify:
        driven = r.fields if drive is DriveAxis.FIELD else r.anisotropies
        signs = np.where(driven < 0.0, -1.0, 1.0)
    dZ = _drive_matrix(spec, drive, signs)
    F = U.T @ dZ @ Vt.T
    W = (F - F.T) / (s[:, None] + s[None, :])
    return float(np.sum(W * W) / 8.0)


def susceptibility_from_logfidelity(spec: ChainSpec, r: Realization,
                                    drive: DriveAxis, dx: float,
                                    sv_tol: float = DEFAULT_SV_TOL,
                                    rectify: bool = False) -> float:
    """Finite-dx estimator -2 ln F(x, x+dx)/dx^2 of the susceptibility.

    This is the defining limit evaluated at finite dx; it carries an O(dx)
    bias relative to the derivative-based estimators and is kept as their
    cross-check.
    """
    if dx <= 0:
        raise ValueError("dx must be > 0")
    qf0 = _shifted_form(spec, r, drive, 0.0, rectify)
    qf1 = _shifted_form(spec, r, drive, dx, rectify)
    f = fidelity(qf0, qf1, sv_tol)
    if f == 0.0:
        raise GaplessRealization(0.0)
    return float(-2.0 * np.log(f) / dx ** 2)


def realization_chi(spec: ChainSpec, r: Realization, drive: DriveAxis,
                    numerics: Numerics, rectify: bool = False) -> float:
    """Dispatch to the configured susceptibility estimator."""
    if numerics.method == "analytic":
        return susceptibility_analytic(spec, r, drive, sv_tol=numerics.sv_tol,
                                       rectify=rectify)
    return susceptibility(spec, r, drive, numerics.delta, sv_tol=numerics.sv_tol,
                          richardson_rtol=numerics.richardson_rtol,
                          rectify=rectify)
