"""Command-line interface: sweeps, histograms, and the oracle gate suite.

Emitted tables are CSV with a single leading ``# config=...`` comment line
embedding the resolved configuration and seed; JSON mirrors carry the same
data with full metadata.  All emission is byte-stable: rerunning a command
with the same configuration and seed reproduces every file exactly,
independent of the worker count.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, preset_config, preset_names
from .ensemble import GridPoint, PointUnreliable, histogram_ln_chi, run_point
from .oracle import run_gate_suite
from .scaling import sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE_FAILURE = 3
EXIT_UNRELIABLE = 4


def _fmt(x) -> str:
    """Shortest round-tripping decimal form (repr) for floats."""
    if isinstance(x, float):  # includes numpy double via subclass
        return repr(float(x))
    return str(x)


def _config_comment(cfg: RunConfig, sigma: float) -> str:
    payload = {"sigma": sigma, "config": cfg.to_dict()}
    return "# config=" + json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _write_text(path: Path, text: str):
    path.write_text(text, encoding="utf-8", newline="")


def _write_csv(path: Path, comment: str, header: list[str], rows: list[list]):
    lines = [comment, ",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    _write_text(path, "\n".join(lines) + "\n")


def _write_json(path: Path, obj: dict):
    _write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _sigma_suffix(cfg: RunConfig, sigma: float) -> str:
    if len(cfg.model.sigmas) == 1:
        return ""
    return f"_sigma{_fmt(sigma)}"


def cmd_sweep(cfg: RunConfig, workers: int, out_dir: Path) -> int:
    """Run the configured sweep per disorder strength and emit tables."""
    out_dir.mkdir(parents=True, exist_ok=True)
    m, e = cfg.model, cfg.ensemble
    exit_code = EXIT_OK
    for sigma in m.sigmas:
        result = sweep(
            cfg.base_spec(sigma), m.drive, list(m.values), list(m.sizes),
            e.n_realizations, e.master_seed,
            n_by_size=e.n_realizations_by_size or None,
            numerics=cfg.numerics, rectify=e.rectify,
            fail_tol=e.fail_tol, workers=workers,
        )
        suffix = _sigma_suffix(cfg, sigma)
        comment = _config_comment(cfg, sigma)

        sweep_rows = [
            [r.drive_value, r.length, r.stats.chi_ave, r.stats.ln_chi_mean,
             r.stats.ln_chi_sd, r.stats.n_failed, r.stats.n_realizations]
            for r in result.rows
        ]
        fit_rows = [
            [value,
             fit.delta_chi if fit else float("nan"),
             fit.stderr if fit else float("nan"),
             fit.r_squared if fit else float("nan")]
            for value, fit in result.fits
        ]
        if "csv" in cfg.output.formats:
            _write_csv(out_dir / f"sweep{suffix}.csv", comment,
                       ["drive_value", "L", "chi_ave", "ln_chi_mean",
                        "ln_chi_sd", "n_failed", "n_realizations"],
                       sweep_rows)
            _write_csv(out_dir / f"scaling{suffix}.csv", comment,
                       ["drive_value", "delta_chi", "stderr", "r_squared"],
                       fit_rows)
        if "json" in cfg.output.formats:
            meta = {"sigma": sigma, "config": cfg.to_dict(),
                    "master_seed": e.master_seed}
            _write_json(out_dir / f"sweep{suffix}.json", {
                **meta, "kind": "sweep",
                "rows": [
                    {"drive_value": r.drive_value, "L": r.length,
                     "chi_ave": r.stats.chi_ave,
                     "ln_chi_mean": r.stats.ln_chi_mean,
                     "ln_chi_sd": r.stats.ln_chi_sd,
                     "n_failed": r.stats.n_failed,
                     "n_realizations": r.stats.n_realizations,
                     "reliable": r.reliable}
                    for r in result.rows
                ],
            })
            _write_json(out_dir / f"scaling{suffix}.json", {
                **meta, "kind": "scaling",
                "rows": [
                    {"drive_value": value,
                     "delta_chi": fit.delta_chi if fit else None,
                     "stderr": fit.stderr if fit else None,
                     "r_squared": fit.r_squared if fit else None,
                     "sizes_used": list(fit.sizes_used) if fit else None}
                    for value, fit in result.fits
                ],
            })
        if result.any_unreliable:
            exit_code = EXIT_UNRELIABLE
    return exit_code


def cmd_hist(cfg: RunConfig, workers: int, out_dir: Path) -> int:
    """Run the configured points and emit ln(chi) histograms."""
    if cfg.hist is None:
        raise ConfigError("hist command needs a 'hist' block in the configuration")
    out_dir.mkdir(parents=True, exist_ok=True)
    m, e = cfg.model, cfg.ensemble
    exit_code = EXIT_OK
    summary = []
    for point in cfg.hist.points:
        for L in point.sizes:
            spec = replace(cfg.base_spec(point.sigma), length=L)
            if m.drive.value == "field":
                spec = replace(spec, mean_field=point.drive_value)
            else:
                spec = replace(spec, mean_anisotropy=point.drive_value)
            n = e.n_realizations_by_size.get(L, e.n_realizations)
            gp = GridPoint(spec=spec, drive=m.drive, n_realizations=n)
            try:
                stats = run_point(gp, e.master_seed, numerics=cfg.numerics,
                                  rectify=e.rectify, fail_tol=e.fail_tol,
                                  workers=workers, binning=cfg.hist.binning)
                reliable = True
            except PointUnreliable as exc:
                stats, reliable = exc.stats, False
                exit_code = EXIT_UNRELIABLE
            hist = histogram_ln_chi(stats, cfg.hist.binning)
            density = hist.density()
            label = f"L{L}_x{_fmt(point.drive_value)}"
            if len(m.sigmas) > 1 or point.sigma != m.sigmas[0]:
                label += f"_sigma{_fmt(point.sigma)}"
            comment = _config_comment(cfg, point.sigma)
            if "csv" in cfg.output.formats:
                rows = [[le, ri, de] for le, ri, de in
                        zip(hist.edges[:-1], hist.edges[1:], density)]
                _write_csv(out_dir / f"hist_{label}.csv", comment,
                           ["bin_left", "bin_right", "density"], rows)
            summary.append({
                "label": label, "drive_value": point.drive_value, "L": L,
                "sigma": point.sigma, "chi_ave": stats.chi_ave,
                "ln_chi_mean": stats.ln_chi_mean, "ln_chi_sd": stats.ln_chi_sd,
                "n_failed": stats.n_failed,
                "n_realizations": stats.n_realizations, "reliable": reliable,
            })
    if "json" in cfg.output.formats:
        _write_json(out_dir / "hist_summary.json", {
            "kind": "hist", "config": cfg.to_dict(),
            "master_seed": e.master_seed, "points": summary,
        })
    return exit_code


def cmd_oracle_check(out_dir: Path | None, master_seed: int | None = None) -> int:
    """Run the oracle gate suite and print a pass/fail table."""
    gates = run_gate_suite() if master_seed is None else run_gate_suite(master_seed)
    width = max(len(g.name) for g in gates)
    print(f"{'gate':<{width}}  {'error':>12}  {'tolerance':>10}  status")
    for g in gates:
        status = "PASS" if g.passed else "FAIL"
        line = f"{g.name:<{width}}  {g.error:>12.3e}  {g.tolerance:>10.1e}  {status}"
        if g.detail:
            line += f"  ({g.detail})"
        print(line)
    all_pass = all(g.passed for g in gates)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(out_dir / "oracle_report.json", {
            "kind": "oracle-check",
            "all_pass": all_pass,
            "gates": [
                {"name": g.name, "error": g.error, "tolerance": g.tolerance,
                 "passed": g.passed, "detail": g.detail}
                for g in gates
            ],
        })
    return EXIT_OK if all_pass else EXIT_GATE_FAILURE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xychain",
        description="Fidelity susceptibility of the disordered XY chain",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config: bool):
        if needs_config:
            p.add_argument("--config", type=str, help="path to a JSON config file")
            p.add_argument("--preset", type=str, choices=preset_names(),
                           help="named preset configuration")
            p.add_argument("--desk-scale", action="store_true",
                           help="reduced sizes/realizations variant of the preset")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--workers", type=int, default=1,
                       help="worker processes (results are identical for any count)")
        p.add_argument("--out", type=str, help="output directory")

    add_common(sub.add_parser("sweep", help="drive-grid sweep with scaling fits"), True)
    add_common(sub.add_parser("hist", help="ln(chi) histograms at chosen points"), True)
    add_common(sub.add_parser("oracle-check",
                              help="run the small-L validation gates"), False)
    return parser


def _load(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset_config(args.preset, args.desk_scale)
    else:
        raise ConfigError("a configuration is required: --config or --preset")
    if args.seed is not None:
        cfg = replace(cfg, ensemble=replace(cfg.ensemble, master_seed=args.seed))
    if args.out is not None:
        cfg = replace(cfg, output=replace(cfg.output, directory=args.out))
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "oracle-check":
            out = Path(args.out) if args.out else None
            return cmd_oracle_check(out, args.seed)
        cfg = _load(args)
        out_dir = Path(cfg.output.directory)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.workers, out_dir)
        return cmd_hist(cfg, args.workers, out_dir)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
