"""Command-line entry point.

Subcommands:
  analytic  evaluate the closed-form fringe model and geometry metrics
  simulate  run the speckle ensemble and export g2 slices and singles
  fit       recover fringe parameters from an exported g2 CSV

Exit codes: 0 success, 2 configuration error, 3 input-data error,
4 numeric-validity error (sampling bound, undefined correlation).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import fringe_metrics, g2_model_curve
from .config import RunConfig, load_config
from .engine import run_ensemble
from .errors import ConfigError, GhostFringeError, InputDataError, NumericValidityError
from .fitting import fit as run_fit
from .fitting import seed_fit
from .stats import G2Slice, g2_slice
from .svgplot import render_overlay

G2_HEADER = "x_m,g2,stderr,g2_model"
SINGLES_HEADER = "x_m,intensity,stderr"


def _fmt(v: float) -> str:
    return f"{v:.9e}"


def _write_g2_csv(path: Path, x, g2, stderr, model) -> None:
    lines = [G2_HEADER]
    for row in zip(x, g2, stderr, model):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_singles_csv(path: Path, x, intensity, stderr) -> None:
    lines = [SINGLES_HEADER]
    for row in zip(x, intensity, stderr):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_g2_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Parse a g2 scan CSV; raises InputDataError with the offending line."""
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputDataError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != G2_HEADER:
        raise InputDataError(f"{path}: line 1: expected header {G2_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise InputDataError(f"{path}: line {lineno}: expected 4 columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise InputDataError(f"{path}: line {lineno}: {exc}") from exc
    if not rows:
        raise InputDataError(f"{path}: no data rows")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


def _json_dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _outdir(config: RunConfig, args) -> Path:
    out = Path(args.out) if args.out else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_analytic(args) -> int:
    config = load_config(args.config)
    out = _outdir(config, args)
    layout, slit = config.layout(), config.slit()
    apertures = config.apertures()
    source = config.source().as_broadband()  # closed forms are broadband by definition
    metrics = fringe_metrics(layout, slit)
    x = config.grid().coordinates
    model = g2_model_curve(x, config.probe_position_m, layout, apertures, slit, source)
    if config.emit_json:
        _json_dump(
            out / "fringe_metrics.json",
            {
                "period_m": metrics.period,
                "envelope_first_zero_m": metrics.envelope_first_zero,
                "visibility_v0": metrics.visibility_factor,
            },
        )
    if config.emit_csv:
        _write_g2_csv(out / "analytic_g2.csv", x, model, np.zeros_like(x), model)
    if config.emit_svg:
        render_overlay(
            out / "analytic_g2.svg", x, None, model,
            title="Closed-form g2 slice", ylabel="g2",
        )
    print(f"analytic: period={metrics.period:.6e} m "
          f"envelope_zero={metrics.envelope_first_zero:.6e} m V0={metrics.visibility_factor:.6f}")
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.master_seed = args.seed
    if args.frames is not None:
        config.frames = args.frames
    if args.workers is not None:
        config.workers = args.workers
    out = _outdir(config, args)
    scenario = config.scenario()
    layout, slit = config.layout(), config.slit()
    apertures, source = scenario.apertures, scenario.source

    t0 = time.perf_counter()
    acc = run_ensemble(scenario, workers=config.workers)
    elapsed = time.perf_counter() - t0

    x = scenario.grid.coordinates
    probe_pos = acc.probe_position
    model = g2_model_curve(x, probe_pos, layout, apertures, slit, source.as_broadband())
    n = acc.frame_count
    for arm in (1, 2):
        sl = g2_slice(acc, scan_arm=arm)
        if config.emit_csv:
            _write_g2_csv(out / f"g2_scan_arm{arm}.csv", x, sl.values, sl.stderr, model)
        mean = (acc.sum1 if arm == 1 else acc.sum2) / n
        sq = (acc.sumsq1 if arm == 1 else acc.sumsq2) / n
        stderr = np.sqrt(np.maximum(sq - mean**2, 0.0) / n)
        if config.emit_csv:
            _write_singles_csv(out / f"singles_arm{arm}.csv", x, mean, stderr)
        if config.emit_svg:
            render_overlay(
                out / f"g2_scan_arm{arm}.svg", x, sl.values, model,
                title=f"g2 scan, arm {arm} (probe at {probe_pos:.3e} m)",
            )

    lc = source.correlation_length
    report = {
        "version": __version__,
        "master_seed": scenario.master_seed,
        "frames": n,
        "workers": config.workers,
        "grid": {
            "window_m": scenario.grid.window,
            "samples": scenario.grid.samples,
            "spacing_m": scenario.grid.spacing,
        },
        "probe": {"arm": scenario.fixed_probe[0], "position_m": probe_pos},
        "timing_s": {"total": elapsed, "per_frame": elapsed / max(n, 1)},
        "broadband_validity_bound": (lc / slit.slit_width) ** 2,
        "config": config.as_dict(),
    }
    if config.emit_json:
        _json_dump(out / "run_report.json", report)
    print(f"simulate: {n} frames in {elapsed:.1f} s "
          f"({1e3 * elapsed / max(n, 1):.2f} ms/frame), outputs in {out}")
    return 0


def cmd_fit(args) -> int:
    config = load_config(args.config)
    out = _outdir(config, args)
    x, g2, stderr, _ = read_g2_csv(Path(args.csv))
    defined = np.isfinite(g2)
    slice_ = G2Slice(
        positions=x,
        values=g2,
        stderr=stderr,
        defined=defined,
        probe=(config.probe_arm, config.probe_position_m),
        scan_arm=2,
        frame_count=config.frames,
    )
    seed, confident = seed_fit(slice_)
    result = run_fit(slice_, seed)
    layout = config.layout()
    d_hat, b_hat = result.slit_estimates(layout)
    d_err, b_err = result.slit_estimate_stderr(layout)
    params = result.params
    stderrs = result.parameter_stderr()
    _json_dump(
        out / "fit_report.json",
        {
            "converged": result.converged,
            "iterations": result.iterations,
            "n_points": result.n_points,
            "seed_confident": confident,
            "baseline": params.baseline,
            "visibility_v0": params.visibility,
            "period_m": params.period,
            "envelope_first_zero_m": params.envelope_zero,
            "center_m": params.center,
            "parameter_stderr": stderrs,
            "covariance": result.covariance.tolist(),
            "residual_rms": result.residual_rms,
            "d_hat_m": d_hat,
            "b_hat_m": b_hat,
            "d_hat_stderr_m": d_err,
            "b_hat_stderr_m": b_err,
        },
    )
    print(
        f"fit: converged={result.converged} period={params.period:.6e} m "
        f"d_hat={d_hat * 1e6:.2f} um b_hat={b_hat * 1e6:.2f} um rms={result.residual_rms:.3e}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghostfringe",
        description="Pseudothermal-light nonlocal double-slit simulator and analysis toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analytic", help="evaluate the closed-form model")
    pa.add_argument("--config", required=True, help="path to key=value config file")
    pa.add_argument("--out", default=None, help="output directory (overrides config)")
    pa.set_defaults(func=cmd_analytic)

    ps = sub.add_parser("simulate", help="run the Monte Carlo ensemble")
    ps.add_argument("--config", required=True)
    ps.add_argument("--seed", type=int, default=None, help="override master_seed")
    ps.add_argument("--frames", type=int, default=None, help="override frame count")
    ps.add_argument("--workers", type=int, default=None, help="override worker count")
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_simulate)

    pf = sub.add_parser("fit", help="fit the fringe model to a g2 CSV")
    pf.add_argument("csv", help="g2 scan CSV (header: x_m,g2,stderr,g2_model)")
    pf.add_argument("--config", required=True, help="config providing the layout keys")
    pf.add_argument("--out", default=None)
    pf.set_defaults(func=cmd_fit)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InputDataError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    except NumericValidityError as exc:
        print(f"numeric validity error: {exc}", file=sys.stderr)
        return 4
    except GhostFringeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
