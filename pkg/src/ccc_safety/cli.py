"""Command-line front end.

Subcommands: ``simulate`` (closed-loop runs, one trajectory CSV per
controller variant), ``chart`` (gain-plane classification CSV, optional
SVG), ``critical-lag`` (closed-form evaluation), and ``boundaries``
(stability boundary polylines). Exit codes: 0 ok, 1 computation fault,
2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import safety, stability
from .config import RunConfig, load_config, parse_resolution
from .errors import ComputationFault, ConfigError
from .safety import classify_chart, critical_lag
from .sim import Scenario, simulate

log = logging.getLogger(__name__)

_VARIANTS = {
    "nominal": "nominal",
    "nominal-accel": "nominal_accel",
    "filtered": "filtered",
}


def _out_dir(args) -> str:
    out = args.out or os.environ.get("CCC_SAFETY_OUTDIR") or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, require_scenario=True)
    scenario = cfg.scenario
    assert scenario is not None
    if args.dt is not None:
        scenario = replace(scenario, dt=args.dt)
    out = _out_dir(args)
    variants = args.variant or ["filtered"]
    for name in variants:
        controller = _VARIANTS[name]
        traj = simulate(scenario, cfg.chain, cfg.cbf, controller=controller)
        path = os.path.join(out, f"trajectory_{name.replace('-', '_')}.csv")
        traj.to_csv(path)
        print(
            f"variant={name} rows={len(traj.t)} min_h={traj.min_h:.6g} "
            f"min_D0={traj.min_D0:.6g} filter_active_s={traj.filter_active_seconds:.6g} "
            f"csv={path}"
        )
    return 0


def cmd_chart(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.chart
    plane = args.plane or spec.plane
    if plane not in stability.PLANES:
        raise ConfigError(f"unknown plane {plane!r} (use A-B1 or B1-BN)")
    resolution = parse_resolution(args.resolution) if args.resolution else spec.resolution
    fixed = spec.fixed_BN if plane == stability.PLANE_A_B1 else spec.fixed_A
    t0 = time.perf_counter()
    grid = classify_chart(
        plane,
        cfg.chain,
        cfg.cbf,
        cfg.envelope,
        fixed_gain=fixed,
        x_range=spec.x_range,
        y_range=spec.y_range,
        resolution=resolution,
    )
    elapsed = time.perf_counter() - t0
    out = _out_dir(args)
    base = os.path.join(out, f"chart_{plane}_{resolution[0]}x{resolution[1]}")
    grid.to_csv(base + ".csv")
    with open(base + ".meta.json", "w") as f:
        json.dump(grid.meta, f, indent=2, sort_keys=True)
        f.write("\n")
    written = [base + ".csv", base + ".meta.json"]
    xr = (float(grid.x[0]), float(grid.x[-1]))
    yr = (float(grid.y[0]), float(grid.y[-1]))
    bnames = ("plant", "string_w0", "string_wK", "safe")
    for name, curves in zip(bnames, grid.boundaries):
        p = f"{base}_boundary_{name}.csv"
        stability.write_boundary_csv(p, curves, xr, yr)
        written.append(p)
    if args.svg:
        grid.to_svg(base + ".svg")
        written.append(base + ".svg")
    print(
        f"plane={plane} resolution={resolution[0]}x{resolution[1]} "
        f"cells={grid.safe.size} plant={int(grid.plant.sum())} "
        f"string={int(grid.string.sum())} safe={grid.safe_count} "
        f"lag_free_limit={grid.meta['lag_free_limit']} seconds={elapsed:.2f}"
    )
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_critical_lag(args) -> int:
    cfg = load_config(args.config)
    cav = cfg.chain.cav
    xi_cr = critical_lag(cfg.cbf, cfg.envelope, cav.kappa, cav.D_st)
    print(f"xi_cr = {xi_cr:.4f} s")
    print(f"xi_cr_s={xi_cr!r}")
    if args.sweep:
        margin = cav.kappa * (cav.D_st - cfg.cbf.D_sf)
        print("headway_margin_m_per_s,xi_cr_s")
        for scale in np.linspace(0.5, 2.0, args.sweep):
            m = float(margin * scale)
            rho = math.sqrt(4.0 * cfg.cbf.kappa_sf * cfg.envelope.a_min / m)
            print(f"{m!r},{float(1.0 / (cfg.cbf.kappa_sf + rho))!r}")
    return 0


def cmd_boundaries(args) -> int:
    cfg = load_config(args.config)
    plane = args.plane or cfg.chart.plane
    if plane not in stability.PLANES:
        raise ConfigError(f"unknown plane {plane!r} (use A-B1 or B1-BN)")
    cav = cfg.chain.cav
    n = cfg.chain.n
    if plane == stability.PLANE_A_B1:
        fixed = cfg.chart.fixed_BN
        if fixed is None:
            fixed = cav.B[n + 1] if (n + 1) in cav.Phi else 0.0
    else:
        fixed = cfg.chart.fixed_A if cfg.chart.fixed_A is not None else cav.A
    bd = cfg.boundaries
    if args.type == "plant":
        grid = np.linspace(0.0, bd.omega_plant_max, bd.omega_plant_points)
        curves = stability.plant_boundary(plane, fixed, cfg.chain, Omega_grid=grid)
    elif args.type == "string-w0":
        curves = stability.string_boundary_w0(plane, fixed, cfg.chain)
    elif args.type == "string-wK":
        if bd.K_count <= 0:
            raise ConfigError("[boundaries] k_count must be positive")
        k_grid = np.arange(bd.K_count) * (2.0 * math.pi / bd.K_count)
        w_grid = np.logspace(
            math.log10(bd.omega_min), math.log10(bd.omega_max), bd.omega_points
        )
        curves = stability.string_boundary_wK(plane, fixed, cfg.chain, w_grid, k_grid)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown boundary type {args.type!r}")
    xr = cfg.chart.x_range or safety.DEFAULT_RANGES[plane][0]
    yr = cfg.chart.y_range or safety.DEFAULT_RANGES[plane][1]
    out = _out_dir(args)
    path = os.path.join(out, f"boundaries_{args.type}_{plane}.csv")
    rows = stability.write_boundary_csv(path, curves, xr, yr)
    print(f"type={args.type} plane={plane} rows={rows} csv={path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ccc-safety",
        description="Safety and stability analysis of connected cruise control.",
    )
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the INI config file")
    common.add_argument(
        "--out", default=None, help="output directory (default: $CCC_SAFETY_OUTDIR or .)"
    )

    p = sub.add_parser("simulate", parents=[common], help="closed-loop simulation runs")
    p.add_argument(
        "--variant",
        action="append",
        choices=sorted(_VARIANTS),
        help="controller variant (repeatable; default: filtered)",
    )
    p.add_argument("--dt", type=float, default=None, help="override the scenario step")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("chart", parents=[common], help="gain-plane safety/stability chart")
    p.add_argument("--plane", choices=stability.PLANES, default=None)
    p.add_argument("--resolution", default=None, help="grid resolution NxM")
    p.add_argument("--svg", action="store_true", help="also render an SVG")
    p.set_defaults(fn=cmd_chart)

    p = sub.add_parser("critical-lag", parents=[common], help="closed-form critical lag")
    p.add_argument("--sweep", type=int, default=0, help="print a headway-margin sweep")
    p.set_defaults(fn=cmd_critical_lag)

    p = sub.add_parser("boundaries", parents=[common], help="stability boundary polylines")
    p.add_argument(
        "--type", required=True, choices=("plant", "string-w0", "string-wK")
    )
    p.add_argument("--plane", choices=stability.PLANES, default=None)
    p.set_defaults(fn=cmd_boundaries)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except (ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ComputationFault as e:
        print(f"computation fault: {e}", file=sys.stderr)
        return 1


def console_main() -> None:  # pragma: no cover - thin wrapper
    sys.exit(main())
