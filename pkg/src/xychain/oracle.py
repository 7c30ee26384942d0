"""Independent small-scale ground truth for validating the fermionic pipeline.

Three unrelated routes to the same physics:

* dense exact diagonalization of the 2^L spin Hamiltonian, parity resolved;
* the momentum-space closed form of the clean-chain susceptibility;
* reconstruction of the paired ground state from the orthogonal factor T via
  its Cayley transform, expanded in the occupation basis.

Everything here is O(4^L) or worse and guarded to L <= 12; it exists to gate
the production code, not to scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disorder import SeedPolicy, sample_realization
from .model import (
    Boundary,
    ChainSpec,
    QuadraticForm,
    Realization,
    _assemble,
    build_quadratic_form,
    ground_energy,
)
from .spectral import (
    DriveAxis,
    GaplessRealization,
    OrthogonalFactor,
    fidelity,
    polar_unitary,
    susceptibility,
)

ED_MAX_SITES = 12
SPECTRUM_MAX_SITES = 10


class CayleyUndefined(Exception):
    """I + T is singular: the vacuum sits at a parity-sector crossing."""


@dataclass(frozen=True)
class EDResult:
    """Lowest eigenpair of the spin Hamiltonian.

    ground_vector lives in the full 2^L basis; bit i of the basis index set
    means spin down at site i (the Jordan-Wigner occupied state).
    """

    ground_energy: float
    ground_vector: np.ndarray
    parity: str  # "even" | "odd" under the product of all Z_i


def _check_size(L: int, limit: int = ED_MAX_SITES):
    if L > limit:
        raise ValueError(f"exact diagonalization refused for L={L} > {limit}")


def _parity_masks(L: int) -> tuple[np.ndarray, np.ndarray]:
    b = np.arange(2 ** L, dtype=np.int64)
    pc = np.zeros(2 ** L, dtype=np.int64)
    for i in range(L):
        pc += (b >> i) & 1
    even = (pc & 1) == 0
    return even, ~even


def _spin_hamiltonian_dense(spec: ChainSpec, r: Realization) -> np.ndarray:
    """Dense 2^L spin Hamiltonian, built literally from the spin chain."""
    L = spec.length
    dim = 2 ** L
    lams = r.fields
    gams = r.anisotropies
    H = np.zeros((dim, dim))
    b = np.arange(dim, dtype=np.int64)

    for i in range(L):
        sz = 1.0 - 2.0 * ((b >> i) & 1)
        H[b, b] += -lams[i] * sz

    periodic = spec.boundary is not Boundary.OPEN
    bonds = L if periodic else L - 1
    for i in range(bonds):
        j = (i + 1) % L
        bi = (b >> i) & 1
        bj = (b >> j) & 1
        flipped = b ^ ((1 << i) | (1 << j))
        # XX+YY part flips both spins; parallel spins couple through the
        # anisotropy, antiparallel through the plain hopping amplitude
        coef = np.where(bi == bj, -gams[i], -1.0)
        H[flipped, b] += coef
    return H


def _sector_ground(H: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    idx = np.flatnonzero(mask)
    Hs = H[np.ix_(idx, idx)]
    w, v = np.linalg.eigh(Hs)
    full = np.zeros(H.shape[0])
    full[idx] = v[:, 0]
    return float(w[0]), full


def ed_ground_state(spec: ChainSpec, r: Realization) -> EDResult:
    """Global ground state of the spin chain by dense diagonalization.

    Diagonalizes each fermion-parity sector separately (the Hamiltonian is
    block diagonal in the parity of the number of down spins), so the
    returned state has sharp parity even when the two sectors are nearly
    degenerate.
    """
    _check_size(spec.length)
    H = _spin_hamiltonian_dense(spec, r)
    even, odd = _parity_masks(spec.length)
    e_even, v_even = _sector_ground(H, even)
    e_odd, v_odd = _sector_ground(H, odd)
    if e_even <= e_odd:
        return EDResult(e_even, v_even, "even")
    return EDResult(e_odd, v_odd, "odd")


def ed_ground_state_in_sector(spec: ChainSpec, r: Realization,
                              parity: str) -> EDResult:
    """Lowest state of one fermion-parity sector."""
    _check_size(spec.length)
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    H = _spin_hamiltonian_dense(spec, r)
    even, odd = _parity_masks(spec.length)
    e, v = _sector_ground(H, even if parity == "even" else odd)
    return EDResult(e, v, parity)


def ed_spectrum(spec: ChainSpec, r: Realization) -> np.ndarray:
    """All 2^L eigenvalues of the spin Hamiltonian, ascending."""
    _check_size(spec.length, SPECTRUM_MAX_SITES)
    return np.linalg.eigvalsh(_spin_hamiltonian_dense(spec, r))


def ed_overlap(e1: EDResult, e2: EDResult) -> float:
    """Modulus of the ground-state overlap |<v1|v2>|."""
    if e1.ground_vector.shape != e2.ground_vector.shape:
        raise ValueError("ground vectors live in different Hilbert spaces")
    return float(abs(e1.ground_vector @ e2.ground_vector))


# ---------------------------------------------------------------------------
# fermionic many-body reconstruction


def vacuum_parity(qf: QuadraticForm) -> int:
    """Fermion parity (+1/-1) of the Bogoliubov vacuum: sign det(U V^t)."""
    U, s, Vt = np.linalg.svd(qf.zmatrix())
    return int(np.sign(np.linalg.det(U) * np.linalg.det(Vt)))


def _subset_energies(qf: QuadraticForm) -> tuple[np.ndarray, np.ndarray]:
    """All 2^L many-body energies of a quadratic form and their parities."""
    U, s, Vt = np.linalg.svd(qf.zmatrix())
    e0 = qf.energy_offset + (np.trace(qf.A) - s.sum()) / 2.0
    p0 = np.sign(np.linalg.det(U) * np.linalg.det(Vt))
    energies = np.array([e0])
    parities = np.array([p0])
    for lam in s:
        energies = np.concatenate([energies, energies + lam])
        parities = np.concatenate([parities, -parities])
    return energies, parities


def reconstructed_spectrum(spec: ChainSpec, r: Realization) -> np.ndarray:
    """Spin spectrum rebuilt from the free-fermion solution, ascending.

    Open chains map onto a single fermion problem, so all 2^L sign choices
    of the quasiparticle energies appear.  Closed chains combine the
    even-parity states of the antiperiodic form with the odd-parity states
    of the periodic form.
    """
    _check_size(spec.length, SPECTRUM_MAX_SITES)
    if spec.boundary is Boundary.OPEN:
        energies, _ = _subset_energies(build_quadratic_form(spec, r))
        return np.sort(energies)
    qf_even = _assemble(r.fields, r.anisotropies, -1.0, spec.boundary)
    qf_odd = _assemble(r.fields, r.anisotropies, +1.0, spec.boundary)
    e_a, p_a = _subset_energies(qf_even)
    e_p, p_p = _subset_energies(qf_odd)
    return np.sort(np.concatenate([e_a[p_a > 0], e_p[p_p < 0]]))


# ---------------------------------------------------------------------------
# clean-chain closed form


def antiperiodic_momenta(L: int) -> np.ndarray:
    """Positive antiperiodic momenta (2n+1)pi/L, n = 0..L/2-1."""
    if L % 2:
        raise ValueError("closed-form susceptibility requires even L")
    return (2 * np.arange(L // 2) + 1) * np.pi / L


def clean_chain_chi(L: int, mean_field: float, mean_anisotropy: float,
                    drive: DriveAxis) -> float:
    """Susceptibility of the uniform chain from the Bogoliubov angles.

    chi = sum_{k>0} (d theta_k / dx / 2)^2 with
    tan theta_k = g sin k / (l - cos k) over the positive antiperiodic
    momenta; the derivative along the drive is taken analytically.  The grid
    excludes k = 0 and pi, so the value is finite even at the clean critical
    points.
    """
    k = antiperiodic_momenta(L)
    lam, gam = mean_field, mean_anisotropy
    den = (lam - np.cos(k)) ** 2 + (gam * np.sin(k)) ** 2
    if np.any(den == 0.0):
        raise GaplessRealization(0.0)
    if drive is DriveAxis.FIELD:
        dtheta = -gam * np.sin(k) / den
    else:
        dtheta = np.sin(k) * (lam - np.cos(k)) / den
    return float(np.sum((dtheta / 2.0) ** 2))


def clean_chain_energies(L: int, mean_field: float,
                         mean_anisotropy: float) -> np.ndarray:
    """Quasiparticle dispersion 2 sqrt((l-cos k)^2 + g^2 sin^2 k) over the
    full antiperiodic grid (each positive momentum appears twice)."""
    k = antiperiodic_momenta(L)
    e = 2.0 * np.sqrt((mean_field - np.cos(k)) ** 2
                      + (mean_anisotropy * np.sin(k)) ** 2)
    return np.sort(np.concatenate([e, e]))


# ---------------------------------------------------------------------------
# BCS state via the Cayley transform


def bcs_state_from_T(factor: OrthogonalFactor) -> np.ndarray:
    """Ground-state vector rebuilt from the orthogonal factor T.

    The pairing matrix is the Cayley transform G = (T - 1)(T + 1)^{-1}
    (orientation pinned by the exact-diagonalization overlap gate); the
    state N exp(1/2 sum_jk G_jk c+_j c+_k)|0> is expanded over occupation
    bitmasks, which coincide with the spin basis used by the ED routines.

    Raises
    ------
    CayleyUndefined
        If I + T is singular (odd-parity vacuum or sector crossing).
    """
    T = factor.matrix
    L = T.shape[0]
    _check_size(L)
    eye = np.eye(L)
    if np.linalg.matrix_rank(T + eye, tol=1e-10) < L:
        raise CayleyUndefined("I + T is singular; no even-parity pairing form")
    # G = (T - I)(T + I)^-1, antisymmetric for orthogonal T
    G = np.linalg.solve((T + eye).T, (T - eye).T).T

    dim = 2 ** L
    b = np.arange(dim, dtype=np.int64)
    occupied = [(b >> i) & 1 for i in range(L)]
    below = [np.zeros(dim, dtype=np.int64)]
    for i in range(L):
        below.append(below[-1] + occupied[i])  # below[i] = popcount of bits < i

    def apply_pair_creation(vec: np.ndarray) -> np.ndarray:
        """vec -> (1/2 sum G_jk c+_j c+_k) vec in the occupation basis."""
        out = np.zeros(dim)
        for jj in range(L):
            for kk in range(jj + 1, L):
                g = G[jj, kk]
                if g == 0.0:
                    continue
                free = (occupied[jj] == 0) & (occupied[kk] == 0)
                src = b[free]
                # apply c+_kk then c+_jj, each anticommuting past the
                # occupied sites below it (jj < kk, so adding kk first
                # never changes the count below jj)
                signs = 1.0 - 2.0 * ((below[kk][free] + below[jj][free]) & 1)
                dst = src | (1 << jj) | (1 << kk)
                out[dst] += g * signs * vec[src]
        return out

    state = np.zeros(dim)
    state[0] = 1.0
    term = state.copy()
    for order in range(1, L // 2 + 1):
        term = apply_pair_creation(term) / order
        state += term
    return state / np.linalg.norm(state)


# ---------------------------------------------------------------------------
# gate suite: every identity the production code must satisfy at small L


@dataclass(frozen=True)
class GateResult:
    name: str
    error: float
    tolerance: float
    detail: str = ""

    def __post_init__(self):
        object.__setattr__(self, "error", float(self.error))
        object.__setattr__(self, "tolerance", float(self.tolerance))

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


def spectrum_identity_error(spec: ChainSpec, r: Realization,
                            reconstructed: np.ndarray | None = None) -> float:
    """Max deviation between the ED spectrum and the fermionic one.

    ``reconstructed`` may inject a precomputed (possibly corrupted)
    spectrum; by default the free-fermion reconstruction is used.
    """
    ed = ed_spectrum(spec, r)
    ferm = reconstructed_spectrum(spec, r) if reconstructed is None else reconstructed
    return float(np.max(np.abs(np.sort(ed) - np.sort(ferm))))


def _gate_instances(master_seed: int, count: int, L: int, mean_field: float,
                    sigma: float):
    spec = ChainSpec(L, mean_field, 1.0, sigma, Boundary.OPEN)
    for i in range(count):
        yield sample_realization(spec, SeedPolicy(master_seed, i))


def run_gate_suite(master_seed: int = 20240614, n_overlap: int = 100,
                   L: int = 8) -> list[GateResult]:
    """Run every validation gate; returns one result per gate.

    Covers: spectrum identity (both boundaries), ground-energy identity,
    fidelity vs ED overlap (both boundaries, even-parity kept for closed
    chains), the susceptibility Taylor check, the clean-chain closed form
    against the stencil, and the Cayley-transform state reconstruction.
    """
    gates: list[GateResult] = []
    sigma = 0.3
    dx = 0.01

    # spectrum identities, 5 instances each
    for boundary, name in ((Boundary.OPEN, "spectrum-open"),
                           (Boundary.PERIODIC_EVEN_SECTOR, "spectrum-periodic")):
        spec = ChainSpec(L, 0.9, 1.0, sigma, boundary)
        worst = 0.0
        for r in _gate_instances(master_seed + 1, 5, L, 0.9, sigma):
            worst = max(worst, spectrum_identity_error(spec, r))
        gates.append(GateResult(name, worst, 1e-9))

    # ground-energy identity: ED vs offset + (tr A - sum s)/2
    worst = 0.0
    n_odd = 0
    for r in _gate_instances(master_seed + 2, 25, L, 0.9, sigma):
        for boundary in (Boundary.OPEN, Boundary.PERIODIC_EVEN_SECTOR):
            spec = ChainSpec(L, 0.9, 1.0, sigma, boundary)
            qf = build_quadratic_form(spec, r)
            ed = ed_ground_state(spec, r)
            if boundary is Boundary.PERIODIC_EVEN_SECTOR:
                if ed.parity != "even" or vacuum_parity(qf) < 0:
                    n_odd += 1
                    continue
            worst = max(worst, abs(ground_energy(qf) - ed.ground_energy))
    gates.append(GateResult("ground-energy", worst, 1e-10,
                            detail=f"{n_odd} odd-parity instances skipped"))

    # fidelity vs ED overlap
    for boundary, name in ((Boundary.OPEN, "fidelity-open"),
                           (Boundary.PERIODIC_EVEN_SECTOR, "fidelity-periodic")):
        spec = ChainSpec(L, 0.9, 1.0, sigma, boundary)
        worst = 0.0
        kept = 0
        skipped = 0
        for r in _gate_instances(master_seed + 3, n_overlap, L, 0.9, sigma):
            qf1 = build_quadratic_form(spec, r)
            qf2 = build_quadratic_form(spec, r.shifted(dfield=dx))
            e1 = ed_ground_state(spec, r)
            e2 = ed_ground_state(spec, r.shifted(dfield=dx))
            if boundary is Boundary.PERIODIC_EVEN_SECTOR and (
                    e1.parity != "even" or e2.parity != "even"):
                skipped += 1
                continue
            kept += 1
            worst = max(worst, abs(fidelity(qf1, qf2) - ed_overlap(e1, e2)))
        gates.append(GateResult(name, worst, 1e-8,
                                detail=f"{kept} kept, {skipped} odd-parity skipped"))

    # susceptibility vs the Taylor coefficient of -2 ln(overlap)
    spec = ChainSpec(L, 0.9, 1.0, sigma, Boundary.OPEN)
    worst = 0.0
    for r in _gate_instances(master_seed + 4, 20, L, 0.9, sigma):
        chi = susceptibility(spec, r, DriveAxis.FIELD)
        ests = []
        for step in (1e-3, 1e-4):
            e1 = ed_ground_state(spec, r)
            e2 = ed_ground_state(spec, r.shifted(dfield=step))
            ests.append(-2.0 * np.log(ed_overlap(e1, e2)) / step ** 2)
        # the finite-step estimator has an O(step) bias: extrapolate to 0
        chi_ed = (10.0 * ests[1] - ests[0]) / 9.0
        worst = max(worst, abs(chi - chi_ed) / abs(chi_ed))
    gates.append(GateResult("susceptibility-taylor", worst, 1e-3))

    # clean chain: closed form vs the stencil pipeline
    worst = 0.0
    clean = ChainSpec(16, 0.5, 1.0, 0.0, Boundary.PERIODIC_EVEN_SECTOR)
    uniform = Realization(np.full(16, 0.5), np.full(16, 1.0))
    for drive in (DriveAxis.FIELD, DriveAxis.ANISOTROPY):
        ref = clean_chain_chi(16, 0.5, 1.0, drive)
        got = susceptibility(clean, uniform, drive)
        worst = max(worst, abs(got - ref) / ref)
    gates.append(GateResult("clean-chain-chi", worst, 1e-6))

    # Cayley-transform reconstruction (even-parity vacua only: the paired
    # form cannot represent an odd-parity ground state)
    worst = 0.0
    skipped = 0
    spec = ChainSpec(L, 0.5, 1.0, 0.0, Boundary.OPEN)
    instances = [Realization(np.full(L, 0.5), np.full(L, 1.0))]
    instances += list(_gate_instances(master_seed + 5, 10, L, 0.9, sigma))
    for r in instances:
        qf = build_quadratic_form(spec, r)
        if vacuum_parity(qf) < 0:
            skipped += 1
            continue
        psi = bcs_state_from_T(polar_unitary(qf.zmatrix()))
        ed = ed_ground_state(spec, r)
        worst = max(worst, 1.0 - abs(psi @ ed.ground_vector))
    gates.append(GateResult("cayley-overlap", worst, 1e-8,
                            detail=f"{skipped} odd-parity vacua skipped"))

    return gates
