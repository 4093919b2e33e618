"""Command-line entry point: ``baxxz <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .chain import ChainSpec
from .exact_diag import entanglement_spectrum
from .free_fermion import GaplessError, berry_phase, free_fermion_spectrum, winding_number
from .recipes import RECIPE_NAMES, figure_recipe
from .scaling import (ScalingError, SweepCurve, argmax_refined, extrapolate, pseudo_critical_S2,
                      pseudo_critical_Sinf)
from .sweep import (BACKENDS, ConfigError, SweepConfig, build_tables, run_sweep,
                    write_tables)
from .tables import FORMATS, emit_table, render_table

log = logging.getLogger("baxxz")

PSEUDO_COLUMNS = ["observable", "N", "L_A", "g_star", "error"]
FIT_COLUMNS = ["observable", "n_sizes", "g_c", "a", "theta", "inv_theta", "residual",
               "g_c_stderr", "error"]
TOPOLOGY_COLUMNS = ["delta", "winding", "berry_phase", "error"]
SPECTRUM_COLUMNS = ["j", "omega", "xi", "Sz_A", "p_A"]


def _load_config(args) -> SweepConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = SweepConfig.load(args.config)
    changes = {}
    if args.out:
        changes["out"] = args.out
    if args.workers:
        changes["workers"] = args.workers
    if args.no_cache:
        changes["cache"] = False
    if args.format:
        changes["format"] = args.format
    if args.seed is not None:
        changes["seed"] = args.seed
    return cfg.replace(**changes) if changes else cfg


def _progress(done, total):
    log.info("evaluated %d/%d", done, total)


def _run(cfg: SweepConfig):
    res = run_sweep(cfg, progress=_progress)
    log.info("%d evaluations, %d cache hits", res.evaluations, res.cache_hits)
    return res


def cmd_sweep(args, tables=None) -> int:
    cfg = _load_config(args)
    res = _run(cfg)
    for p in write_tables(res, names=tables):
        print(p)
    return 0


def pseudo_critical_rows(result, window=None) -> tuple[list[dict], list[dict]]:
    """Pseudo-critical points per size and their power-law extrapolations.

    Uses the maximum of S_2, the stationary point of xi_0 and, when the sweep
    carries curvature, the maximum of chi. ``window`` restricts the search.
    """
    cfg = result.config
    if len(cfg.fixed) != 1:
        raise ConfigError("scaling needs a single fixed coupling")
    axis = cfg.axis
    rows = build_tables(result)["points"]
    observables = ["S_2", "S_inf"] + (["chi"] if cfg.curvature else [])
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["N"], r["L_A"]), []).append(r)
    pseudo, fits = [], []
    for obs in observables:
        sizes, points = [], []
        for (N, L), rs in sorted(groups.items()):
            row = {"observable": obs, "N": N, "L_A": L, "g_star": math.nan, "error": ""}
            g = np.array([r[axis] for r in rs])
            y = np.array([r[obs] for r in rs])
            keep = np.isfinite(y)
            if window is not None:
                keep &= (g >= window[0]) & (g <= window[1])
            try:
                curve = SweepCurve(g[keep], y[keep], observable=obs, meta={"N": N, "L_A": L})
                if obs == "S_2":
                    gs = pseudo_critical_S2(curve)
                elif obs == "S_inf":
                    gs = pseudo_critical_Sinf(curve)
                else:
                    gs = argmax_refined(curve)
                row["g_star"] = gs
                sizes.append(N)
                points.append(gs)
            except ScalingError as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            pseudo.append(row)
        fit = {"observable": obs, "n_sizes": len(sizes), "g_c": math.nan, "a": math.nan,
               "theta": math.nan, "inv_theta": math.nan, "residual": math.nan,
               "g_c_stderr": math.nan, "error": ""}
        try:
            f = extrapolate(sizes, points)
            fit.update(g_c=f.g_c, a=f.a, theta=f.theta, inv_theta=f.inv_theta,
                       residual=f.residual, g_c_stderr=f.g_c_stderr)
        except ScalingError as exc:
            fit["error"] = f"{type(exc).__name__}: {exc}"
        fits.append(fit)
    return pseudo, fits


def cmd_scaling(args) -> int:
    cfg = _load_config(args)
    res = _run(cfg)
    pseudo, fits = pseudo_critical_rows(res, tuple(args.window) if args.window else None)
    out = Path(cfg.out)
    print(emit_table(pseudo, PSEUDO_COLUMNS, out / f"pseudo_critical.{cfg.format}", cfg.format))
    print(emit_table(fits, FIT_COLUMNS, out / f"fits.{cfg.format}", cfg.format))
    return 0


def topology_rows(deltas) -> list[dict]:
    out = []
    for d in sorted(set(float(x) for x in deltas)):
        row = {"delta": d, "winding": 0, "berry_phase": math.nan, "error": ""}
        try:
            row["winding"] = winding_number(d)
            row["berry_phase"] = berry_phase(d)
        except GaplessError as exc:
            row["error"] = f"GaplessError: {exc}"
        out.append(row)
    return out


def cmd_phase_diagram(args) -> int:
    cfg = _load_config(args)
    res = _run(cfg)
    for p in write_tables(res, names=["points"]):
        print(p)
    deltas = cfg.grid if cfg.axis == "delta" else cfg.fixed
    print(emit_table(topology_rows(deltas), TOPOLOGY_COLUMNS,
                     Path(cfg.out) / f"topology.{cfg.format}", cfg.format))
    return 0


def cmd_spectrum(args) -> int:
    if args.backend == "exact-diag":
        _, es = entanglement_spectrum(ChainSpec(args.N, args.delta, args.Delta, L_A=args.L_A),
                                      seed=args.seed or 0)
    else:
        if args.Delta != 0:
            raise ConfigError("free-fermion backends require Delta = 0")
        M = None if args.backend == "free-fermion-thermo" else args.N // 2
        es = free_fermion_spectrum(M, args.delta, args.L_A)
    n = len(es) if args.levels is None else min(args.levels, len(es))
    rows = [{"j": j, "omega": float(es.omega[j]), "xi": float(es.xi[j]),
             "Sz_A": float(es.Sz_A[j]), "p_A": int(es.p_A[j])} for j in range(n)]
    fmt = args.format or "csv"
    if args.out:
        print(emit_table(rows, SPECTRUM_COLUMNS, Path(args.out) / f"spectrum.{fmt}", fmt))
    else:
        sys.stdout.write(render_table(rows, SPECTRUM_COLUMNS, fmt))
    return 0


def cmd_recipe(args) -> int:
    cfg = figure_recipe(args.name)
    text = cfg.to_json()
    if args.out:
        p = Path(args.out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        print(p)
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate(args) -> int:
    from .acceptance import run_all

    numbers = [int(x) for x in args.criteria.split(",")] if args.criteria else None
    results = run_all(numbers)
    return 0 if all(r.passed for r in results) else 1


def _common(p: argparse.ArgumentParser, config=True):
    if config:
        p.add_argument("--config", metavar="PATH", help="sweep configuration (JSON)")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--workers", type=int, metavar="K", help="parallel evaluations")
    p.add_argument("--no-cache", action="store_true", help="ignore and do not fill the cache")
    p.add_argument("--format", choices=FORMATS, help="table format")
    p.add_argument("--seed", type=int, metavar="S", help="Lanczos start-vector seed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="baxxz", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a sweep configuration and write all its tables")
    _common(p)
    p.set_defaults(func=lambda a: cmd_sweep(a))
    p = sub.add_parser("dlc", help="convertibility sign map of a sweep")
    _common(p)
    p.set_defaults(func=lambda a: cmd_sweep(a, tables=["points", "dlc"]))
    p = sub.add_parser("majorize", help="majorization sign map of a sweep")
    _common(p)
    p.set_defaults(func=lambda a: cmd_sweep(a, tables=["points", "majorization"]))

    p = sub.add_parser("spectrum", help="labeled entanglement spectrum at one point")
    _common(p, config=False)
    p.add_argument("--backend", choices=BACKENDS, default="exact-diag")
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--Delta", type=float, default=0.0)
    p.add_argument("--L-A", dest="L_A", type=int, default=4)
    p.add_argument("--levels", type=int, help="number of levels to print")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("scaling", help="pseudo-critical points and extrapolation")
    _common(p)
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"),
                   help="restrict the extremum search to [LO, HI]")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("phase-diagram", help="grid over both couplings plus band topology")
    _common(p)
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("recipe", help="emit a named figure configuration")
    p.add_argument("name", choices=RECIPE_NAMES)
    p.add_argument("--out", metavar="PATH", help="write the config here instead of stdout")
    p.set_defaults(func=cmd_recipe)

    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,3")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
