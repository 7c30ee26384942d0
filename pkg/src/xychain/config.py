"""Run configuration: JSON schema, defaults, validation, and named presets.

A configuration is a JSON object with blocks ``model``, ``ensemble``,
``numerics``, ``hist`` (only for the hist command) and ``output``.  Every
field has a default except the model block's physics; resolution is total,
so the resolved configuration embedded in output files is self-describing.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .ensemble import Binning
from .model import Boundary, ChainSpec
from .spectral import DriveAxis, Numerics

DEFAULT_MASTER_SEED = 123456789


class ConfigError(Exception):
    """Invalid or unresolvable run configuration."""


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _no_unknown_keys(block: dict, allowed: set[str], name: str):
    unknown = set(block) - allowed
    _require(not unknown, f"unknown keys in {name!r} block: {sorted(unknown)}")


def _resolve_grid(model: dict) -> list[float]:
    has_values = "values" in model and model["values"] is not None
    has_grid = "grid" in model and model["grid"] is not None
    _require(has_values != has_grid,
             "model block needs exactly one of 'values' or 'grid'")
    if has_values:
        values = [float(v) for v in model["values"]]
    else:
        grid = model["grid"]
        _no_unknown_keys(grid, {"start", "stop", "step"}, "model.grid")
        try:
            start, stop, step = (float(grid[k]) for k in ("start", "stop", "step"))
        except KeyError as exc:
            raise ConfigError(f"model.grid is missing {exc}") from None
        _require(step > 0, "model.grid.step must be > 0")
        _require(stop >= start, "model.grid.stop must be >= start")
        values = []
        i = 0
        while True:
            v = round(start + i * step, 12)
            if v > stop + step * 1e-9:
                break
            values.append(v)
            i += 1
    _require(len(values) >= 1, "drive grid is empty")
    _require(all(b > a for a, b in zip(values, values[1:])),
             "drive grid must be strictly increasing")
    return values


@dataclass(frozen=True)
class ModelBlock:
    sizes: tuple[int, ...]
    boundary: Boundary
    drive: DriveAxis
    values: tuple[float, ...]
    fixed_mean: float
    sigmas: tuple[float, ...]


@dataclass(frozen=True)
class EnsembleBlock:
    n_realizations: int
    master_seed: int
    fail_tol: float
    rectify: bool
    n_realizations_by_size: dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class HistPoint:
    drive_value: float
    sizes: tuple[int, ...]
    sigma: float


@dataclass(frozen=True)
class HistBlock:
    points: tuple[HistPoint, ...]
    binning: Binning


@dataclass(frozen=True)
class OutputBlock:
    directory: str
    formats: tuple[str, ...]


@dataclass(frozen=True)
class RunConfig:
    model: ModelBlock
    ensemble: EnsembleBlock
    numerics: Numerics
    output: OutputBlock
    hist: HistBlock | None = None

    def base_spec(self, sigma: float) -> ChainSpec:
        """ChainSpec template at one disorder strength; the driven mean is
        seeded with the first grid value and replaced during sweeps."""
        m = self.model
        if m.drive is DriveAxis.FIELD:
            return ChainSpec(m.sizes[0], m.values[0], m.fixed_mean, sigma, m.boundary)
        return ChainSpec(m.sizes[0], m.fixed_mean, m.values[0], sigma, m.boundary)

    def to_dict(self) -> dict:
        """Fully resolved, JSON-ready mirror of this configuration."""
        m = self.model
        out = {
            "model": {
                "sizes": list(m.sizes),
                "boundary": m.boundary.value,
                "drive": m.drive.value,
                "values": list(m.values),
                "mean_field": None if m.drive is DriveAxis.FIELD else m.fixed_mean,
                "mean_anisotropy": m.fixed_mean if m.drive is DriveAxis.FIELD else None,
                "sigma": list(m.sigmas),
            },
            "ensemble": {
                "n_realizations": self.ensemble.n_realizations,
                "master_seed": self.ensemble.master_seed,
                "fail_tol": self.ensemble.fail_tol,
                "rectify": self.ensemble.rectify,
                "n_realizations_by_size": {
                    str(k): v for k, v in sorted(self.ensemble.n_realizations_by_size.items())
                },
            },
            "numerics": asdict(self.numerics),
            "output": {
                "directory": self.output.directory,
                "formats": list(self.output.formats),
            },
        }
        if self.hist is not None:
            out["hist"] = {
                "points": [
                    {"drive_value": p.drive_value, "sizes": list(p.sizes),
                     "sigma": p.sigma}
                    for p in self.hist.points
                ],
                "binning": {"method": self.hist.binning.method,
                            "width": self.hist.binning.width},
            }
        return out


def resolve_config(raw: dict) -> RunConfig:
    """Validate a raw configuration dict and fill in every default."""
    _require(isinstance(raw, dict), "configuration must be a JSON object")
    _no_unknown_keys(raw, {"model", "ensemble", "numerics", "hist", "output"},
                     "top-level")
    _require("model" in raw, "configuration is missing the 'model' block")

    model = dict(raw["model"])
    _no_unknown_keys(model, {"sizes", "boundary", "drive", "values", "grid",
                             "mean_field", "mean_anisotropy", "sigma"}, "model")
    _require("sizes" in model and model["sizes"], "model.sizes must be nonempty")
    try:
        sizes = tuple(int(s) for s in model["sizes"])
    except (TypeError, ValueError):
        raise ConfigError("model.sizes must be a list of integers") from None
    _require(all(s >= 2 for s in sizes), "every size must be >= 2")

    try:
        boundary = Boundary(model.get("boundary", "periodic_even"))
    except ValueError:
        raise ConfigError(
            f"model.boundary must be one of "
            f"{[b.value for b in Boundary]}, got {model.get('boundary')!r}"
        ) from None
    try:
        drive = DriveAxis(model.get("drive", "field"))
    except ValueError:
        raise ConfigError(
            f"model.drive must be one of {[d.value for d in DriveAxis]}, "
            f"got {model.get('drive')!r}"
        ) from None

    values = _resolve_grid(model)

    fixed_key = "mean_anisotropy" if drive is DriveAxis.FIELD else "mean_field"
    _require(model.get(fixed_key) is not None,
             f"model.{fixed_key} is required when driving the "
             f"{'field' if drive is DriveAxis.FIELD else 'anisotropy'}")
    fixed_mean = float(model[fixed_key])

    sigma_raw = model.get("sigma", 0.0)
    sigmas = tuple(float(s) for s in sigma_raw) if isinstance(sigma_raw, (list, tuple)) \
        else (float(sigma_raw),)
    _require(all(s >= 0 for s in sigmas), "sigma values must be >= 0")
    _require(len(set(sigmas)) == len(sigmas), "sigma values must be distinct")

    ens = dict(raw.get("ensemble", {}))
    _no_unknown_keys(ens, {"n_realizations", "master_seed", "fail_tol",
                           "rectify", "n_realizations_by_size"}, "ensemble")
    n_real = int(ens.get("n_realizations", 2000))
    _require(n_real >= 1, "ensemble.n_realizations must be >= 1")
    master_seed = int(ens.get("master_seed", DEFAULT_MASTER_SEED))
    _require(0 <= master_seed < 2 ** 64, "master_seed must be an unsigned 64-bit integer")
    fail_tol = float(ens.get("fail_tol", 0.01))
    _require(0 < fail_tol <= 1, "ensemble.fail_tol must be in (0, 1]")
    rectify = bool(ens.get("rectify", False))
    by_size_raw = ens.get("n_realizations_by_size", {}) or {}
    try:
        by_size = {int(k): int(v) for k, v in by_size_raw.items()}
    except (TypeError, ValueError, AttributeError):
        raise ConfigError("ensemble.n_realizations_by_size must map sizes to counts") from None
    _require(all(v >= 1 for v in by_size.values()),
             "per-size realization counts must be >= 1")

    num = dict(raw.get("numerics", {}))
    _no_unknown_keys(num, {"method", "delta", "sv_tol", "richardson_rtol",
                           "dx_check"}, "numerics")
    try:
        numerics = Numerics(
            method=str(num.get("method", "stencil")),
            delta=float(num.get("delta", 1e-5)),
            sv_tol=float(num.get("sv_tol", 1e-12)),
            richardson_rtol=float(num.get("richardson_rtol", 1e-4)),
            dx_check=float(num.get("dx_check", 1e-4)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid numerics block: {exc}") from None

    out = dict(raw.get("output", {}))
    _no_unknown_keys(out, {"directory", "formats"}, "output")
    directory = str(out.get("directory", "out"))
    formats = tuple(out.get("formats", ["csv", "json"]))
    _require(formats and set(formats) <= {"csv", "json"},
             "output.formats must be a nonempty subset of ['csv', 'json']")

    hist_block = None
    if raw.get("hist") is not None:
        hist = dict(raw["hist"])
        _no_unknown_keys(hist, {"points", "binning"}, "hist")
        _require(hist.get("points"), "hist.points must be nonempty")
        points = []
        for p in hist["points"]:
            _no_unknown_keys(dict(p), {"drive_value", "sizes", "sigma"}, "hist.points[]")
            _require("drive_value" in p, "hist point needs a drive_value")
            psizes = tuple(int(s) for s in p.get("sizes", sizes))
            if "sigma" in p and p["sigma"] is not None:
                psigma = float(p["sigma"])
            else:
                _require(len(sigmas) == 1,
                         "hist points need an explicit sigma when the model "
                         "block lists several")
                psigma = sigmas[0]
            points.append(HistPoint(float(p["drive_value"]), psizes, psigma))
        b = dict(hist.get("binning", {}))
        _no_unknown_keys(b, {"method", "width"}, "hist.binning")
        try:
            binning = Binning(method=b.get("method", "fd"),
                              width=b.get("width"))
        except ValueError as exc:
            raise ConfigError(f"invalid hist.binning: {exc}") from None
        hist_block = HistBlock(points=tuple(points), binning=binning)

    return RunConfig(
        model=ModelBlock(sizes=sizes, boundary=boundary, drive=drive,
                         values=tuple(values), fixed_mean=fixed_mean,
                         sigmas=sigmas),
        ensemble=EnsembleBlock(n_realizations=n_real, master_seed=master_seed,
                               fail_tol=fail_tol, rectify=rectify,
                               n_realizations_by_size=by_size),
        numerics=numerics,
        output=OutputBlock(directory=directory, formats=formats),
        hist=hist_block,
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return resolve_config(raw)


# ---------------------------------------------------------------------------
# presets reproducing the published figures, each with a desk-scale variant


def _fig1(desk: bool) -> dict:
    cfg = {
        "model": {
            "sizes": [64, 128, 256] if desk else [128, 256, 512],
            "boundary": "periodic_even",
            "drive": "field",
            "grid": {"start": 0.8, "stop": 1.2, "step": 0.02} if desk
            else {"start": 0.6, "stop": 1.4, "step": 0.02},
            "mean_anisotropy": 1.0,
            "sigma": [0.0, 0.1, 0.3],
        },
        "ensemble": {
            "n_realizations": 2000 if desk else 50000,
            "master_seed": 101,
            **({} if desk else {"n_realizations_by_size": {"512": 10000}}),
        },
        "numerics": {"method": "analytic"},
        "hist": {
            "points": [
                {"drive_value": 1.0, "sigma": 0.1},
                {"drive_value": 1.5, "sigma": 0.1},
            ],
        },
    }
    return cfg


def _fig2(desk: bool) -> dict:
    sizes = [64, 128, 256] if desk else list(range(400, 501, 10))
    cfg = {
        "model": {
            "sizes": sizes,
            "boundary": "periodic_even",
            "drive": "anisotropy",
            "grid": {"start": -0.15, "stop": 0.15, "step": 0.01 if desk else 0.005},
            "mean_field": 0.2,
            "sigma": 0.1,
        },
        "ensemble": {
            "n_realizations": 2000 if desk else 50000,
            "master_seed": 202,
            # the split of the susceptibility peak requires the
            # positive-coupling reading of the disorder
            "rectify": True,
            **({} if desk else {
                "n_realizations_by_size": {str(s): 10000 for s in sizes if s > 400}
            }),
        },
        "numerics": {"method": "analytic"},
        "hist": {
            # 0.036 is where the disorder-split susceptibility peaks
            "points": [
                {"drive_value": 0.0},
                {"drive_value": 0.036},
                {"drive_value": 0.15},
            ],
        },
    }
    return cfg


def _fig3(desk: bool) -> dict:
    return {
        "model": {
            "sizes": [200] if desk else [400],
            "boundary": "periodic_even",
            "drive": "anisotropy",
            "grid": {"start": -0.25, "stop": 0.25, "step": 0.01},
            "mean_field": 0.5,
            "sigma": [0.0, 0.1, 0.2, 0.3],
        },
        "ensemble": {
            "n_realizations": 2000 if desk else 10000,
            "master_seed": 303,
            "rectify": True,
        },
        "numerics": {"method": "analytic"},
    }


_PRESETS = {"fig1": _fig1, "fig2": _fig2, "fig3": _fig3}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset_config(name: str, desk_scale: bool = False) -> RunConfig:
    """Named preset as a resolved configuration.

    Paper-scale presets carry the published system sizes and realization
    counts (hours of compute); ``desk_scale=True`` swaps in reduced sizes
    and 2000 realizations for laptop-scale runs of the same physics.
    """
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {preset_names()}")
    return resolve_config(_PRESETS[name](desk_scale))
