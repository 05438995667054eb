"""Command-line front end.

Subcommands emit figure *data* (full-precision CSV plus a JSON manifest of
the exact inputs), not rendered images; --gnuplot additionally writes a
plotting script referencing the CSVs. Every run is deterministic given its
config, seed included.

Config precedence: built-in defaults < --config file (flat key=value lines)
< explicit command-line flags. SEASONCHAIN_OUTDIR overrides the default
output directory when --out is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import backend_name
from .distributions import CASE_NAMES, PairDistribution, preset
from .errors import SeasonChainError
from .model import ModelConfig
from . import analytic, simulate, stationary

SCHEMA = "# schema=1"

CONFIG_KEYS = {
    "case": str, "a": float, "b": float, "mu0": float, "mu1": float,
    "sigma2": float, "delta_atom": float, "r": int, "seed": int,
    "seasons": int, "burn_in": int, "grid": int, "out": str, "format": str,
}

DEFAULTS = {
    "case": "case1", "r": 2, "seed": 12345, "seasons": 20000,
    "burn_in": 500, "grid": 512, "format": "csv",
}


def _fmt(v) -> str:
    return f"{v:.17g}"


def write_csv(path: Path, header: list[str], columns) -> Path:
    """Full-precision CSV with the schema comment line and a header row."""
    with open(path, "w") as fh:
        fh.write(SCHEMA + "\n" + ",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_table(outdir: Path, stem: str, header: list[str], columns,
                fmt: str = "csv") -> Path:
    """Tabular export in the configured format (csv default, json optional)."""
    if fmt == "json":
        payload = {"schema": 1, "columns": header,
                   "rows": [[float(v) for v in row] for row in zip(*columns)]}
        return write_json(outdir / f"{stem}.json", payload)
    return write_csv(outdir / f"{stem}.csv", header, columns)


def write_json(path: Path, payload: dict) -> Path:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_manifest(outdir: Path, command: str, settings: dict, outputs: list[Path]):
    payload = {
        "command": command,
        "settings": settings,
        "outputs": sorted(str(p.name) for p in outputs),
        "backend": backend_name(),
        "version": __version__,
    }
    return write_json(outdir / f"{command}_manifest.json", payload)


def read_config_file(path: str) -> dict:
    """Flat key=value config; blank lines and #-comments ignored."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = CONFIG_KEYS[key](val.strip())
    return values


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and explicit flags (flags win)."""
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(read_config_file(args.config))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    if "out" not in settings or settings.get("out") is None:
        settings["out"] = os.environ.get("SEASONCHAIN_OUTDIR", "seasonchain-out")
    return settings


def resolve_distribution(settings: dict) -> PairDistribution:
    """Preset case unless any custom parameter is supplied."""
    custom = {k: settings[k] for k in ("a", "b", "mu0", "mu1", "sigma2", "delta_atom")
              if k in settings}
    if custom:
        base = {"mu1": 0.0, "sigma2": 0.02, "delta_atom": 0.0}
        missing = {"a", "b", "mu0"} - set(custom)
        if missing:
            raise ValueError(f"custom distribution needs a, b, mu0 (missing {sorted(missing)})")
        base.update(custom)
        return PairDistribution(**base)
    return preset(settings["case"])


def _prepare(args):
    settings = resolve_settings(args)
    outdir = Path(settings["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    dist = resolve_distribution(settings)
    return settings, outdir, dist


def _ptag(p: float) -> str:
    return f"{p:g}".replace(".", "_")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_draw(args) -> int:
    settings, outdir, dist = _prepare(args)
    n = args.n
    rng = simulate.season_stream(settings["seed"])
    if n > 0:
        delta, tau = dist.sample_arrays(rng, n)
    else:
        delta = tau = np.array([])
    fmt = settings["format"]
    outs = [write_table(outdir, "draws", ["delta", "tau"], (delta, tau), fmt)]
    summary = {"n": n}
    if n > 1:
        summary.update({
            "mean_delta": float(delta.mean()), "sd_delta": float(delta.std()),
            "mean_tau": float(tau.mean()), "sd_tau": float(tau.std()),
            "corr": float(np.corrcoef(delta, tau)[0, 1]),
        })
    outs.append(write_json(outdir / "draws_summary.json", summary))
    if args.gnuplot:
        _require_csv_for_gnuplot(fmt)
        outs.append(_gnuplot(outdir, "draw", ["plot 'draws.csv' skip 2 using 2:1 with points title 'draws'"]))
    write_manifest(outdir, "draw", {**settings, "n": n}, outs)
    print(f"wrote {len(outs)} files to {outdir}")
    return 0


def cmd_bivariate(args) -> int:
    settings, outdir, dist = _prepare(args)
    if settings["r"] != 2:
        raise ValueError("the joint outcome density is available for r=2 only")
    n2 = args.grid2d
    fmt = settings["format"]
    outs = []
    for k, p in enumerate(args.p):
        z_hi = 1.0 - 1e-6
        re_hi = dist.tau_support_bound(1e-6)
        zs = np.linspace(z_hi / n2, z_hi, n2)
        res = np.linspace(1.0 + 1e-9, re_hi, n2)
        zz, rr = np.meshgrid(zs, res, indexing="ij")
        dens = analytic.outcome_density(dist, p, zz.ravel(), rr.ravel())
        outs.append(write_table(outdir, f"bivariate_p{_ptag(p)}",
                                ["z", "r_e", "density"],
                                (zz.ravel(), rr.ravel(), dens), fmt))
        re_s, z_s = simulate.one_step_outcomes(dist, p, args.overlay,
                                               settings["seed"], chain_id=k + 1)
        outs.append(write_table(outdir, f"overlay_p{_ptag(p)}",
                                ["r_e", "z"], (re_s, z_s), fmt))
    if args.gnuplot:
        _require_csv_for_gnuplot(fmt)
        lines = [f"splot 'bivariate_p{_ptag(p)}.csv' skip 2 using 1:2:3 with pm3d"
                 for p in args.p]
        outs.append(_gnuplot(outdir, "bivariate", lines))
    write_manifest(outdir, "bivariate", {**settings, "p": args.p,
                                         "overlay": args.overlay, "grid2d": n2}, outs)
    print(f"wrote {len(outs)} files to {outdir}")
    return 0


def cmd_transition(args) -> int:
    settings, outdir, dist = _prepare(args)
    if settings["r"] != 2:
        raise ValueError("the transition density is available for r=2 only")
    n = settings["grid"]
    fmt = settings["format"]
    grid = (np.arange(n) + 0.5) / n
    outs = []
    for p in args.p:
        atom = analytic.transition_atom(dist, p)
        dens = analytic.transition_density_grid(dist, p, grid)
        mass = atom + float(np.trapezoid(dens, grid))
        print(f"p={p}: atom={atom:.6f}, atom+integral={mass:.6f}")
        outs.append(write_table(outdir, f"transition_p{_ptag(p)}",
                                ["p_next", "density"], (grid, dens), fmt))
        payload = {"p": p, "atom": atom, "normalization": mass}
        if args.re is not None:
            if args.re <= 1.0:
                payload["conditional"] = {"re": args.re, "atom_at_zero": 1.0}
                print(f"p={p}, re={args.re}: no outbreak (forecast mass at 0)")
            else:
                cond = analytic.conditional_density(dist, p, args.re, grid)
                cmass = float(np.trapezoid(cond, grid))
                payload["conditional"] = {"re": args.re, "integral": cmass}
                print(f"p={p}, re={args.re}: conditional integral={cmass:.6f}")
                outs.append(write_table(
                    outdir, f"conditional_p{_ptag(p)}_re{_ptag(args.re)}",
                    ["z", "density"], (grid, cond), fmt))
        outs.append(write_json(outdir / f"transition_p{_ptag(p)}_summary.json", payload))
    if args.gnuplot:
        _require_csv_for_gnuplot(fmt)
        lines = [f"plot 'transition_p{_ptag(p)}.csv' skip 2 using 1:2 with lines"
                 for p in args.p]
        outs.append(_gnuplot(outdir, "transition", lines))
    write_manifest(outdir, "transition", {**settings, "p": args.p, "re": args.re}, outs)
    print(f"wrote {len(outs)} files to {outdir}")
    return 0


def cmd_stationary(args) -> int:
    settings, outdir, dist = _prepare(args)
    r = settings["r"]
    config = ModelConfig(r=r)
    run = simulate.run_chain(config, dist, settings["seed"], settings["seasons"],
                             settings["burn_in"])
    samples = simulate.stationary_samples(run)
    est = simulate.kde(samples.z, grid_n=settings["grid"])
    fmt = settings["format"]
    outs = []
    outs += _export_kde(outdir, "simulated_kde", est, fmt)
    summary = {"r": r, "simulated_atom": est.defective_mass,
               "n_samples": est.n_samples}
    if r == 2:
        stat = stationary.stationary_solve(dist, grid_n=settings["grid"])
        outs.append(write_table(outdir, "analytic_stationary",
                                ["z", "density"], (stat.grid, stat.values), fmt))
        summary["analytic_atom"] = stat.atom_mass
        summary["analytic_total_mass"] = stat.total_mass()
        print(f"stationary atom: analytic={stat.atom_mass:.4f} "
              f"simulated={est.defective_mass:.4f}")
    else:
        print(f"stationary atom (simulated): {est.defective_mass:.4f}")
    for re_val in args.re_list:
        win = simulate.conditional_window(samples, re_val, args.window)
        if win.n >= 30 and np.count_nonzero(win.z) >= 30:
            west = simulate.kde(win.z, grid_n=settings["grid"])
            outs += _export_kde(outdir, f"simulated_conditional_re{_ptag(re_val)}",
                                west, fmt)
        summary[f"window_count_re{re_val:g}"] = win.n
        if r == 2:
            cond = stationary.stationary_conditional(dist, stat, re_val)
            outs.append(write_table(outdir, f"conditional_re{_ptag(re_val)}",
                                    ["z", "density"], (cond.grid, cond.values), fmt))
            summary[f"conditional_atom_re{re_val:g}"] = {
                "location": cond.atom_location, "mass": cond.atom_mass}
    outs.append(write_json(outdir / "stationary_summary.json", summary))
    if args.gnuplot:
        _require_csv_for_gnuplot(fmt)
        lines = ["plot 'simulated_kde.csv' skip 2 using 1:2 with lines title 'simulated'"]
        if r == 2:
            lines.append("replot 'analytic_stationary.csv' skip 2 using 1:2 with lines title 'analytic'")
        outs.append(_gnuplot(outdir, "stationary", lines))
    write_manifest(outdir, "stationary", {**settings, "re_list": args.re_list,
                                          "window": args.window}, outs)
    print(f"wrote {len(outs)} files to {outdir}")
    return 0


def cmd_scatter(args) -> int:
    settings, outdir, dist = _prepare(args)
    config = ModelConfig(r=settings["r"])
    run = simulate.run_chain(config, dist, settings["seed"], settings["seasons"],
                             settings["burn_in"])
    samples = simulate.stationary_samples(run)
    check = simulate.scatter_support_check(samples)
    fmt = settings["format"]
    outs = [write_table(outdir, "scatter", ["r_e", "z"],
                        (samples.r_e, samples.z), fmt)]
    zs = np.linspace(1e-4, 1.0 - 1e-4, settings["grid"])
    outs.append(write_table(outdir, "curve", ["z", "r_e"],
                            (zs, analytic.curve_re(zs)), fmt))
    report = {"n_positive": check.n_positive, "n_violations": check.n_violations,
              "max_violation": check.max_violation,
              "median_distance": check.median_distance}
    outs.append(write_json(outdir / "support_report.json", report))
    print(f"support check: {check.n_violations} violations "
          f"(max {check.max_violation:.3g}), median distance {check.median_distance:.4f}")
    if args.gnuplot:
        _require_csv_for_gnuplot(fmt)
        outs.append(_gnuplot(outdir, "scatter", [
            "plot 'scatter.csv' skip 2 using 1:2 with points title 'seasons'",
            "replot 'curve.csv' skip 2 using 2:1 with lines title 'no-immunity curve'"]))
    write_manifest(outdir, "scatter", settings, outs)
    print(f"wrote {len(outs)} files to {outdir}")
    return 0


def cmd_forecast(args) -> int:
    settings, outdir, dist = _prepare(args)
    if settings["r"] != 2:
        raise ValueError("the forecast density is available for r=2 only")
    summary = analytic.conditional_summary(dist, args.p, args.re)
    payload = {
        "p": args.p, "re": args.re, "mean": summary.mean, "sd": summary.sd,
        "quantiles": {f"{int(q * 100)}%": v for q, v in summary.quantiles.items()},
    }
    outs = []
    if summary.point_mass is not None:
        payload["point_forecast"] = summary.point_mass
        print(f"forecast: deterministic z = {summary.point_mass:.6f}")
    else:
        outs.append(write_table(outdir, "forecast", ["z", "density"],
                                (summary.grid, summary.pdf), settings["format"]))
        print(f"forecast: mean={summary.mean:.4f} sd={summary.sd:.4f} "
              f"5%={summary.quantiles[0.05]:.4f} 95%={summary.quantiles[0.95]:.4f}")
    outs.append(write_json(outdir / "forecast_summary.json", payload))
    if args.gnuplot and summary.point_mass is None:
        _require_csv_for_gnuplot(settings["format"])
        outs.append(_gnuplot(outdir, "forecast",
                             ["plot 'forecast.csv' skip 2 using 1:2 with lines"]))
    write_manifest(outdir, "forecast", {**settings, "p": args.p, "re": args.re}, outs)
    print(f"wrote {len(outs)} files to {outdir}")
    return 0


def cmd_simulate(args) -> int:
    settings, outdir, dist = _prepare(args)
    config = ModelConfig(r=settings["r"])
    run = simulate.run_chain(config, dist, settings["seed"], settings["seasons"],
                             settings["burn_in"])
    if settings["format"] == "json":
        header = ["season", "delta", "tau", "r_e", "z_overall"] + [
            f"p_{j + 1}" for j in range(run.r)]
        cols = [np.arange(run.n_seasons), run.deltas, run.taus, run.r_e, run.z]
        cols += [run.p_after[:, j] for j in range(run.r)]
        outs = [write_table(outdir, "chain", header, cols, "json")]
    else:
        path = outdir / "chain.csv"
        run.write_csv(path)
        outs = [path]
    frac0 = float(np.mean(run.z[run.burn_in:] == 0.0))
    outs.append(write_json(outdir / "chain_summary.json", {
        "seasons": run.n_seasons, "burn_in": run.burn_in,
        "outbreak_free_fraction": frac0,
        "mean_positive_z": float(run.z[run.z > 0].mean()) if np.any(run.z > 0) else 0.0,
    }))
    write_manifest(outdir, "simulate", settings, outs)
    print(f"wrote {len(outs)} files to {outdir}")
    return 0


def _require_csv_for_gnuplot(fmt: str) -> None:
    if fmt != "csv":
        raise ValueError("--gnuplot reads the CSV outputs; use --format csv")


def _export_kde(outdir: Path, stem: str, est, fmt: str) -> list:
    if fmt == "json":
        payload = {"schema": 1, "columns": ["z", "density"],
                   "rows": [[float(g), float(v)] for g, v in zip(est.grid, est.values)],
                   "atom": est.defective_mass, "bandwidth": est.bandwidth,
                   "n": est.n_samples}
        return [write_json(outdir / f"{stem}.json", payload)]
    est.write_csv(outdir / f"{stem}.csv")
    return [outdir / f"{stem}.csv", outdir / f"{stem}.csv.json"]


def _gnuplot(outdir: Path, name: str, plot_lines: list[str]) -> Path:
    path = outdir / f"{name}.gp"
    body = "\n".join(["set datafile separator ','", "set key outside"]
                     + plot_lines + ["pause -1"])
    path.write_text(body + "\n")
    return path


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="flat key=value config file")
    g.add_argument("--case", choices=CASE_NAMES, help="preset pair distribution")
    for key in ("a", "b", "mu0", "mu1", "sigma2", "delta-atom"):
        g.add_argument(f"--{key}", dest=key.replace("-", "_"), type=float,
                       help="custom pair-distribution parameter")
    g.add_argument("--r", type=int, help="years until immunity is fully lost")
    g.add_argument("--seed", type=int, help="base RNG seed")
    g.add_argument("--seasons", type=int, help="post-burn-in seasons to simulate")
    g.add_argument("--burn-in", dest="burn_in", type=int, help="burn-in seasons")
    g.add_argument("--grid", type=int, help="grid points for 1-D densities")
    g.add_argument("--out", help="output directory (or $SEASONCHAIN_OUTDIR)")
    g.add_argument("--format", choices=("csv", "json"), help="tabular output format")
    g.add_argument("--gnuplot", action="store_true", help="emit a gnuplot script")

    parser = argparse.ArgumentParser(
        prog="seasonchain",
        description="Multi-season epidemic chains with random drift and transmissibility")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("draw", parents=[common], help="sample (delta, tau) pairs")
    p.add_argument("--n", type=int, default=200, help="number of draws")
    p.set_defaults(func=cmd_draw)

    p = sub.add_parser("bivariate", parents=[common],
                       help="joint outcome density grid plus simulated overlay")
    p.add_argument("--p", type=float, nargs="+", default=[0.1, 0.5],
                   help="prior attack ratios")
    p.add_argument("--overlay", type=int, default=500, help="overlay sample count")
    p.add_argument("--grid2d", type=int, default=129, help="2-D grid resolution")
    p.set_defaults(func=cmd_bivariate)

    p = sub.add_parser("transition", parents=[common],
                       help="attack-ratio transition density (and conditionals)")
    p.add_argument("--p", type=float, nargs="+", default=[0.1, 0.5],
                   help="prior attack ratios")
    p.add_argument("--re", type=float, help="also emit the forecast given this R_e")
    p.set_defaults(func=cmd_transition)

    p = sub.add_parser("stationary", parents=[common],
                       help="stationary law: analytic (r=2) and simulated")
    p.add_argument("--re-list", dest="re_list", type=float, nargs="+",
                   default=[1.3, 1.6], help="conditional-forecast R_e values")
    p.add_argument("--window", type=float, default=simulate.DEFAULT_WINDOW,
                   help="R_e window for the simulated conditionals")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("scatter", parents=[common],
                       help="stationary (R_e, z) scatter and the bounding curve")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("forecast", parents=[common],
                       help="forecast this season's attack ratio from (p, R_e)")
    p.add_argument("--p", type=float, required=True, help="last season's attack ratio")
    p.add_argument("--re", type=float, required=True, help="observed R_e")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("simulate", parents=[common], help="export one raw chain run")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SeasonChainError, ValueError, OSError) as exc:
        print(f"error[{type(exc).__name__}] in {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
