"""Quadratic fermion representation of the disordered transverse-field XY chain.

The spin chain

    H = -sum_i [ (1+g_i)/2 X_i X_{i+1} + (1-g_i)/2 Y_i Y_{i+1} + l_i Z_i ]

maps onto quasi-free fermions

    H = sum_ij c+_i A_ij c_j + 1/2 sum_ij (c+_i B_ij c+_j + h.c.) + energy_offset

with A symmetric, B antisymmetric.  The convention used throughout this
package (validated against exact diagonalization in the oracle module):

    A_ii       = 2 l_i
    A_i,i+1    = A_i+1,i = -1            (one entry per bond)
    B_i,i+1    = -g_i ,  B_i+1,i = +g_i
    offset     = -sum_i l_i              (constant from the Z_i mapping)

For a closed chain the fermion problem splits into parity sectors.  Only the
even-parity (antiperiodic) sector is represented here: the boundary bond
(L-1, 0) enters with an extra factor -1 in both A and B.  Open chains simply
omit that bond.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Boundary(Enum):
    """Boundary condition of the chain."""

    OPEN = "open"
    PERIODIC_EVEN_SECTOR = "periodic_even"


@dataclass(frozen=True)
class ChainSpec:
    """Global model parameters.

    Parameters
    ----------
    length : int
        Number of sites L (>= 2).
    mean_field : float
        Mean transverse field, the center of the on-site field distribution.
    mean_anisotropy : float
        Mean bond anisotropy.
    disorder_sigma : float
        Standard deviation of both distributions (>= 0).
    boundary : Boundary
        Open chain or the even-parity sector of the closed chain.
    """

    length: int
    mean_field: float
    mean_anisotropy: float
    disorder_sigma: float
    boundary: Boundary = Boundary.PERIODIC_EVEN_SECTOR

    def __post_init__(self):
        if self.length < 2:
            raise ValueError(f"chain length must be >= 2, got {self.length}")
        if self.disorder_sigma < 0:
            raise ValueError(f"disorder_sigma must be >= 0, got {self.disorder_sigma}")


@dataclass(frozen=True)
class Realization:
    """Per-site parameters of one disorder sample.

    `fields[i]` is the transverse field on site i, `anisotropies[i]` the
    anisotropy of bond (i, i+1).
    """

    fields: np.ndarray
    anisotropies: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "fields", np.asarray(self.fields, dtype=float))
        object.__setattr__(self, "anisotropies", np.asarray(self.anisotropies, dtype=float))
        if self.fields.ndim != 1 or self.anisotropies.ndim != 1:
            raise ValueError("fields and anisotropies must be 1-d vectors")
        if self.fields.shape != self.anisotropies.shape:
            raise ValueError(
                f"fields and anisotropies must have equal length, got "
                f"{self.fields.shape[0]} and {self.anisotropies.shape[0]}"
            )

    def __len__(self) -> int:
        return self.fields.shape[0]

    def shifted(self, dfield: float = 0.0, danisotropy: float = 0.0) -> "Realization":
        """Uniformly shift every site's field and/or anisotropy."""
        return Realization(self.fields + dfield, self.anisotropies + danisotropy)


@dataclass(frozen=True)
class QuadraticForm:
    """The pair (A, B) of the quasi-free fermion Hamiltonian.

    A is symmetric (hopping + on-site), B antisymmetric (pairing).
    `energy_offset` is the additive constant dropped by the quadratic form;
    the spin ground energy is  energy_offset + (tr A - sum_k s_k)/2  with
    s_k the singular values of Z = A - B.
    """

    A: np.ndarray
    B: np.ndarray
    energy_offset: float
    boundary: Boundary = field(default=Boundary.PERIODIC_EVEN_SECTOR, compare=False)

    @property
    def length(self) -> int:
        return self.A.shape[0]

    def zmatrix(self) -> np.ndarray:
        """Z = A - B, the matrix whose polar decomposition defines the state."""
        return self.A - self.B


def _assemble(fields: np.ndarray, anisotropies: np.ndarray, corner_sign: float,
              boundary: Boundary) -> QuadraticForm:
    """Assemble (A, B) with an explicit sign on the (L-1, 0) bond.

    corner_sign = 0 drops the bond (open chain), -1 gives antiperiodic
    fermions (even parity sector), +1 periodic fermions (odd sector, used
    only by the oracle for spectrum reconstruction).
    """
    L = fields.shape[0]
    A = np.zeros((L, L))
    B = np.zeros((L, L))
    A[np.arange(L), np.arange(L)] = 2.0 * fields

    bonds = L - 1 if corner_sign == 0 else L
    for i in range(bonds):
        j = (i + 1) % L
        s = corner_sign if i == L - 1 else 1.0
        A[i, j] += -s
        A[j, i] += -s
        B[i, j] += -s * anisotropies[i]
        B[j, i] += +s * anisotropies[i]
    return QuadraticForm(A=A, B=B, energy_offset=-float(fields.sum()), boundary=boundary)


def build_quadratic_form(spec: ChainSpec, r: Realization) -> QuadraticForm:
    """Construct the quadratic form (A, B) for one disorder realization.

    Parameters
    ----------
    spec : ChainSpec
    r : Realization
        Must have exactly spec.length entries per vector.

    Returns
    -------
    QuadraticForm

    Raises
    ------
    ValueError
        If the realization length does not match the spec.
    """
    if len(r) != spec.length:
        raise ValueError(
            f"realization has {len(r)} sites but spec.length = {spec.length}"
        )
    corner = 0.0 if spec.boundary is Boundary.OPEN else -1.0
    return _assemble(r.fields, r.anisotropies, corner, spec.boundary)


def single_particle_energies(qf: QuadraticForm) -> np.ndarray:
    """Quasiparticle energies: singular values of Z = A - B, ascending.

    The fermionic ground energy is (tr A - sum of these)/2; adding
    qf.energy_offset gives the spin-model ground energy.
    """
    s = np.linalg.svd(qf.zmatrix(), compute_uv=False)
    return np.sort(s)


def ground_energy(qf: QuadraticForm) -> float:
    """Spin-model ground energy of the quadratic form's sector."""
    s = np.linalg.svd(qf.zmatrix(), compute_uv=False)
    return qf.energy_offset + (np.trace(qf.A) - s.sum()) / 2.0
