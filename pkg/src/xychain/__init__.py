"""Fidelity susceptibility of the disordered transverse-field XY spin chain.

The chain is solved through its quasi-free-fermion representation: the
ground state at each disorder realization is encoded by the orthogonal
factor of a polar decomposition, fidelities are determinants, and the
susceptibility is the squared parameter-derivative of that factor.
Ensembles over disorder realizations are deterministic for any worker
count, and finite-size scaling fits extract the exponent of
[chi]_ave ~ L^Delta.

Importing this package is lightweight; submodules (and numpy) load on
first attribute access so the CLI can pin BLAS threading beforehand.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "Boundary": "model",
    "ChainSpec": "model",
    "Realization": "model",
    "QuadraticForm": "model",
    "build_quadratic_form": "model",
    "single_particle_energies": "model",
    "ground_energy": "model",
    "SeedPolicy": "disorder",
    "sample_realization": "disorder",
    "DriveAxis": "spectral",
    "OrthogonalFactor": "spectral",
    "Numerics": "spectral",
    "GaplessRealization": "spectral",
    "NonConvergedDerivative": "spectral",
    "polar_unitary": "spectral",
    "fidelity": "spectral",
    "susceptibility": "spectral",
    "susceptibility_analytic": "spectral",
    "susceptibility_from_logfidelity": "spectral",
    "GridPoint": "ensemble",
    "EnsembleStats": "ensemble",
    "Binning": "ensemble",
    "Histogram": "ensemble",
    "PointUnreliable": "ensemble",
    "run_point": "ensemble",
    "histogram_ln_chi": "ensemble",
    "ScalingFit": "scaling",
    "SweepResult": "scaling",
    "fit_scaling_dimension": "scaling",
    "sweep": "scaling",
    "peak_location": "scaling",
    "local_maxima": "scaling",
    "EDResult": "oracle",
    "ed_ground_state": "oracle",
    "ed_overlap": "oracle",
    "clean_chain_chi": "oracle",
    "bcs_state_from_T": "oracle",
    "CayleyUndefined": "oracle",
    "run_gate_suite": "oracle",
    "RunConfig": "config",
    "ConfigError": "config",
    "load_config": "config",
    "preset_config": "config",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    if name in ("model", "disorder", "spectral", "ensemble", "scaling",
                "oracle", "config", "cli"):
        return import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
