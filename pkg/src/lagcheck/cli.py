import argparse
import math
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv
from rich.table import Table

from .services.errors import LagCheckError, OrderOutOfRange
from .services.exporter import ReportDocument, export_csv, export_json, render_csv, write_text
from .services.expsum import DEFAULT_CURVE_POINTS, characteristic_roots, szego_curve, szego_sample
from .services.model import THERMO_MAX_ORDER, LagPair, Mode, identity_tensor, canonical_history
from .services.oracle import compare_all
from .services.plots import roots_animation_html, szego_svg
from .services.settings import console, default_r_max, resolve_output_path
from .services.simulate import DecayOutcome, free_decay, random_initial_conditions
from .services.spectral import (
    DEFAULT_TOL,
    GridClass,
    Interval,
    admissible_region,
    build_positivity_polynomial,
    classify,
    consistency_grid,
    cycle_integral,
    known_region_oracle,
    leading_coefficient_bounds,
    region_text,
    verdict_sweep,
)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2


# ---------------- Output helpers ----------------

def _emit(args, doc: ReportDocument, rows: List[Dict[str, Any]], fields: Sequence[str]) -> None:
    if args.out:
        if args.format == "csv":
            path = export_csv(rows, fields, args.out)
        else:
            path = export_json(doc, args.out)
        console.print(f"[bold]Saved:[/bold] {path}")
    else:
        sys.stdout.write(render_csv(rows, fields) if args.format == "csv" else doc.to_json())
        sys.stdout.flush()


def _interval(iv: Interval) -> Dict[str, Any]:
    return {"low": iv.low, "high": iv.high, "low_kind": iv.low_kind, "high_kind": iv.high_kind}


def _require_thermo(n: int, m: int) -> None:
    for name, value in (("n", n), ("m", m)):
        if isinstance(value, int) and value > THERMO_MAX_ORDER:
            raise OrderOutOfRange(
                f"{name}={value} > {THERMO_MAX_ORDER}: e_{value} has roots with positive real part, "
                f"so the law has no steady periodic regime and the cycle test does not apply"
            )


# ---------------- Commands ----------------

def cmd_roots(args) -> int:
    report = characteristic_roots(args.n)
    tau_q = args.tau_q
    lam = report.roots_lambda(tau_q)
    results = {
        "roots": list(report.roots),
        "roots_lambda": list(lam),
        "spectral_abscissa": report.spectral_abscissa,
        "ek_satisfied": report.ek_satisfied,
        "real_root_count": report.real_root_count,
        "classification": report.classification,
        "max_residual": report.max_residual,
    }
    doc = ReportDocument("roots", {"n": args.n, "tau_q": tau_q}, results)
    rows = [
        {"index": i, "re": x.real, "im": x.imag, "re_lambda": y.real, "im_lambda": y.imag}
        for i, (x, y) in enumerate(zip(report.roots, lam))
    ]

    table = Table(title=f"Roots of e_{report.n}(x), x = tau_q * lambda")
    table.add_column("#", justify="right")
    table.add_column("Re x", justify="right")
    table.add_column("Im x", justify="right")
    for r in rows:
        table.add_row(str(r["index"]), f"{r['re']:.6f}", f"{r['im']:.6f}")
    console.print(table)
    console.print(f"abscissa {report.spectral_abscissa:.6g} -> [bold]{report.classification.value}[/bold]")

    _emit(args, doc, rows, ["index", "re", "im", "re_lambda", "im_lambda"])
    if args.assert_ and report.spectral_abscissa >= 0.0:
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_szego(args) -> int:
    curve = szego_curve(args.samples)
    samples = [szego_sample(n, args.samples) for n in range(1, args.n_max + 1)]
    residual = float(np.max(np.abs(np.abs(curve * np.exp(1.0 - curve)) - 1.0)))
    distances = {s.n: s.max_distance for s in samples}
    checkpoints = [n for n in (10, 25, 50) if n in distances]
    decreasing = all(distances[a] > distances[b] for a, b in zip(checkpoints, checkpoints[1:]))

    results = {
        "max_distance": [{"n": s.n, "max_distance": s.max_distance} for s in samples],
        "curve_points": len(curve),
        "curve_residual": residual,
        "decreasing_at": checkpoints,
        "decreasing": decreasing,
    }
    doc = ReportDocument("szego", {"n_max": args.n_max, "samples": args.samples}, results)

    rows: List[Dict[str, Any]] = []
    for s in samples:
        for z, d in zip(s.scaled_roots, s.distances):
            rows.append({"kind": "root", "n": s.n, "re": z.real, "im": z.imag, "distance": d})
    for z in curve:
        rows.append({"kind": "curve", "n": None, "re": z.real, "im": z.imag, "distance": None})
    fields = ["kind", "n", "re", "im", "distance"]

    if args.out_csv:
        console.print(f"[bold]CSV :[/bold] {export_csv(rows, fields, args.out_csv)}")
    if args.out_svg:
        console.print(f"[bold]SVG :[/bold] {write_text(szego_svg(samples, curve), args.out_svg)}")
    if args.out_html:
        path = roots_animation_html(samples, curve, resolve_output_path(args.out_html))
        console.print(f"[bold]HTML:[/bold] {path}")
    for n in checkpoints:
        console.print(f"n={n}: max distance {distances[n]:.4e}")

    _emit(args, doc, rows, fields)
    if args.assert_ and not decreasing:
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_check(args) -> int:
    _require_thermo(args.n, args.m)
    mode = Mode(args.mode)
    lags = LagPair(args.tau_q, args.tau_t)
    verdict = classify(args.n, args.m, lags, mode)
    poly = build_positivity_polynomial(args.n, args.m, lags.ratio)
    consistent = verdict.is_consistent(mode)
    results = {
        "verdict": verdict.kind,
        "consistent": consistent,
        "ratio": lags.ratio,
        "coefficients": list(poly.coefficients),
        "witness_omega": verdict.witness_omega,
        "witness_u": verdict.witness_u,
        "flux_law_stable": args.n == 0 or characteristic_roots(args.n).spectral_abscissa < 0.0,
    }
    inputs = {"n": args.n, "m": args.m, "tau_q": lags.tau_q, "tau_T": lags.tau_T, "mode": mode}
    doc = ReportDocument("check", inputs, results)
    rows = [{"power": j, "coefficient": c} for j, c in enumerate(poly.coefficients)]

    colour = "green" if consistent else "red"
    console.print(f"({args.n},{args.m}) r={lags.ratio:.6g} [{colour}]{verdict.kind.value}[/{colour}] ({mode.value})")
    if verdict.witness_omega is not None:
        console.print(f"witness omega = {verdict.witness_omega:.6g} 1/s (u' = {verdict.witness_u:.6g})")

    _emit(args, doc, rows, ["power", "coefficient"])
    if args.assert_ and not consistent:
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_region(args) -> int:
    _require_thermo(args.n, args.m)
    mode = Mode(args.mode)
    r_max = args.r_max if args.r_max is not None else default_r_max()
    region = admissible_region(args.n, args.m, r_max=r_max, tol=args.tol, mode=mode, points=args.points)
    published = known_region_oracle(args.n, args.m)
    results = {
        "intervals": [_interval(iv) for iv in region.intervals],
        "empty": region.is_empty,
        "contains_unit_ratio": region.contains(1.0),
        "leading_coefficient_bounds": leading_coefficient_bounds(args.n, args.m),
        "published": None if published is None else [_interval(iv) for iv in published.intervals],
    }
    inputs = {"n": args.n, "m": args.m, "r_max": r_max, "tol": args.tol, "mode": mode}
    doc = ReportDocument("region", inputs, results)
    rows = [_interval(iv) for iv in region.intervals]

    if args.sweep_csv:
        sweep = [{"r": r, "verdict": v} for r, v in verdict_sweep(args.n, args.m, r_max, args.points, mode)]
        console.print(f"[bold]Sweep:[/bold] {export_csv(sweep, ['r', 'verdict'], args.sweep_csv)}")
    console.print(f"({args.n},{args.m}) admissible r = tau_T/tau_q: [bold]{region_text(region.intervals)}[/bold]")
    if published is not None:
        console.print(f"published: {region_text(published.intervals)}")

    _emit(args, doc, rows, ["low", "high", "low_kind", "high_kind"])
    if args.assert_ and region.is_empty:
        return EXIT_NEGATIVE
    return EXIT_OK


def _expected_class(n: int, m: int) -> Optional[GridClass]:
    published = known_region_oracle(n, m)
    if published is None:
        return None
    if published.is_empty:
        return GridClass.NEVER
    iv = published.intervals[0]
    if iv.low == 0.0 and math.isinf(iv.high):
        return GridClass.ALWAYS
    return GridClass.CONDITIONAL


def cmd_grid(args) -> int:
    mode = Mode(args.mode)
    r_max = args.r_max if args.r_max is not None else default_r_max()
    grid = consistency_grid(mode, r_max=r_max, tol=args.tol, points=args.points)

    rows = []
    mismatches = []
    for c in grid.cells:
        expected = _expected_class(c.n, c.m)
        if expected is not None and expected is not c.category:
            mismatches.append((c.n, c.m))
        rows.append({
            "n": c.n,
            "m": c.m,
            "category": c.category,
            "region": region_text(c.region.intervals),
            "witness_omega": c.witness_omega,
            "note": c.note,
        })
    results = {
        "cells": [{**r, "intervals": [_interval(iv) for iv in c.region.intervals]} for r, c in zip(rows, grid.cells)],
        "consistent_pairs": [list(p) for p in grid.consistent_pairs()],
        "mismatches": [list(p) for p in mismatches],
    }
    doc = ReportDocument("grid", {"mode": mode, "r_max": r_max, "tol": args.tol}, results)

    table = Table(title=f"Second-Law consistency ({mode.value}), rows n, columns m")
    table.add_column("n \\ m")
    for m in range(THERMO_MAX_ORDER + 1):
        table.add_column(str(m))
    for n in range(THERMO_MAX_ORDER + 1):
        table.add_row(str(n), *[region_text(grid.cell(n, m).region.intervals) for m in range(THERMO_MAX_ORDER + 1)])
    console.print(table)
    for c in grid.cells:
        if c.note:
            console.print(f"[yellow]({c.n},{c.m})[/yellow] {c.note}")

    _emit(args, doc, rows, ["n", "m", "category", "region", "witness_omega", "note"])
    if args.assert_ and mismatches:
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_integral(args) -> int:
    _require_thermo(args.n, args.m)
    if args.omega is not None:
        if args.tau_q is None:
            raise ValueError("--omega needs --tau-q; use --omega-tau for the scale-free form")
        tau_q = args.tau_q
        omega = args.omega
    else:
        tau_q = args.tau_q if args.tau_q is not None else 1.0
        omega = args.omega_tau / tau_q
    lags = LagPair.from_ratio(args.r, tau_q)

    if args.n == 0:
        # no kernel and no ODE for n = 0: the flux is the gradient operator itself
        value = cycle_integral(args.n, args.m, lags, identity_tensor(), canonical_history(omega))
        results = {"value_spectral": value, "value_kernel": None, "value_ode": None, "max_rel_disagreement": 0.0}
        worst = 0.0
    else:
        cmp = compare_all(args.n, args.m, lags, omega)
        worst = cmp.max_rel_disagreement
        results = {
            "value_spectral": cmp.value_spectral,
            "value_kernel": cmp.value_kernel,
            "value_ode": cmp.value_ode,
            "max_rel_disagreement": worst,
        }
    results["agree"] = worst <= args.rtol
    inputs = {"n": args.n, "m": args.m, "r": args.r, "tau_q": tau_q, "omega": omega, "rtol": args.rtol}
    doc = ReportDocument("integral", inputs, results)
    rows = [{"method": k[len("value_"):], "value": v} for k, v in results.items() if k.startswith("value_")]

    for r in rows:
        shown = "-" if r["value"] is None else f"{r['value']:.12g}"
        console.print(f"{r['method']:>9}: {shown}")
    console.print(f"max relative disagreement {worst:.3e}")

    _emit(args, doc, rows, ["method", "value"])
    if args.assert_ and worst > args.rtol:
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_simulate(args) -> int:
    rng = np.random.default_rng(args.seed)
    ic = random_initial_conditions(args.n, rng, args.tau_q)
    traj = free_decay(args.n, args.tau_q, ic, horizon=args.horizon, step=args.step)
    expected = characteristic_roots(args.n).spectral_abscissa / args.tau_q
    results = {
        "outcome": traj.outcome,
        "fitted_rate": traj.fitted_rate,
        "expected_rate": expected,
        "steps": len(traj.times) - 1,
        "final_time": traj.times[-1],
        "final_abs_q": abs(traj.values[-1]),
        "initial_conditions": list(ic),
    }
    inputs = {"n": args.n, "tau_q": args.tau_q, "seed": args.seed, "horizon": args.horizon, "step": args.step}
    doc = ReportDocument("simulate", inputs, results)
    rows = [{"t": t, "q": q} for t, q in zip(traj.times, traj.values)]

    colour = "green" if traj.outcome is DecayOutcome.DECAYED else "red"
    console.print(f"n={args.n}: [{colour}]{traj.outcome.value}[/{colour}] "
                  f"fitted rate {traj.fitted_rate:.6g}, spectral {expected:.6g}")

    _emit(args, doc, rows, ["t", "q"])
    if args.assert_ and traj.outcome is not DecayOutcome.DECAYED:
        return EXIT_NEGATIVE
    return EXIT_OK


# ---------------- Parser ----------------

def build_parser():
    p = argparse.ArgumentParser(prog="lagcheck", description="Dual-phase-lag stability and Second-Law checks")
    p.add_argument("--debug", action="store_true", help="Enable LAGCHECK_DEBUG=2")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--out", default=None, help="Write the report here instead of stdout")
    common.add_argument("--assert", dest="assert_", action="store_true",
                        help="Exit 1 when the result is negative")
    common.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.WEAK.value,
                        help="strict: a vanishing cycle integral counts as a violation")

    sub = p.add_subparsers(dest="cmd", required=True)

    def add_cmd(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common])

    def add_orders(sp):
        sp.add_argument("--n", type=int, required=True, help="Flux-side order")
        sp.add_argument("--m", type=int, required=True, help="Gradient-side order")

    # roots
    sp = add_cmd("roots", "Roots of the characteristic polynomial e_n")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--tau-q", type=float, default=1.0)
    sp.set_defaults(func=cmd_roots)

    # szego
    sp = add_cmd("szego", "Scaled roots against the limit curve")
    sp.add_argument("--n-max", type=int, default=50)
    sp.add_argument("--samples", type=int, default=DEFAULT_CURVE_POINTS, help="Points on the curve")
    sp.add_argument("--out-csv", default=None)
    sp.add_argument("--out-svg", default=None)
    sp.add_argument("--out-html", default=None)
    sp.set_defaults(func=cmd_szego)

    # check
    sp = add_cmd("check", "Second-Law verdict for one model")
    add_orders(sp)
    sp.add_argument("--tau-q", type=float, default=1.0)
    sp.add_argument("--tau-t", type=float, default=1.0)
    sp.set_defaults(func=cmd_check)

    # region
    sp = add_cmd("region", "Admissible delay ratios tau_T/tau_q")
    add_orders(sp)
    sp.add_argument("--r-max", type=float, default=None)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--points", type=int, default=None)
    sp.add_argument("--sweep-csv", default=None, help="Also write the raw verdict scan")
    sp.set_defaults(func=cmd_region)

    # grid
    sp = add_cmd("grid", "All (n, m) up to 4")
    sp.add_argument("--r-max", type=float, default=None)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--points", type=int, default=None)
    sp.set_defaults(func=cmd_grid)

    # integral
    sp = add_cmd("integral", "Cycle integral by closed form, kernel quadrature and RK4")
    add_orders(sp)
    sp.add_argument("--r", type=float, default=1.0, help="tau_T / tau_q")
    sp.add_argument("--omega-tau", type=float, default=1.0)
    sp.add_argument("--omega", type=float, default=None, help="Dimensional frequency, needs --tau-q")
    sp.add_argument("--tau-q", type=float, default=None)
    sp.add_argument("--rtol", type=float, default=1e-4)
    sp.set_defaults(func=cmd_integral)

    # simulate
    sp = add_cmd("simulate", "Free relaxation from random initial data")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--tau-q", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--step", type=float, default=None)
    sp.set_defaults(func=cmd_simulate)

    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    if args.debug:
        os.environ["LAGCHECK_DEBUG"] = "2"

    try:
        return args.func(args)
    except (LagCheckError, ValueError, OSError) as e:
        console.print(f"[red]{type(e).__name__}: {e}[/red]")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
