"""Command-line entry point: ``vdns {converge-space,converge-time,energy,check}``.

Every flag can also be given in a TOML file passed with ``--config``; keys
use the flag names without leading dashes (``quad-degree`` or
``quad_degree``). Command-line flags win over the file.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .harness import (ExperimentSpec, energy_spec, parse_step, run_experiment, space_spec,
                      time_spec)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("vdns")

KEYS = ("case", "mu", "tau", "h", "T", "quad_degree", "slow", "out", "vtk_every", "t0")


def _steps(text):
    """``"1/8,1/16"`` or a TOML list -> floats."""
    if isinstance(text, (list, tuple)):
        return [parse_step(t) for t in text]
    return [parse_step(t) for t in str(text).split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdns", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every step")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("converge-space", "spatial convergence table (tau = h)"),
                            ("converge-time", "temporal convergence table on a fixed mesh"),
                            ("energy", "discrete energy series without forcing"),
                            ("check", "manufactured-solution and assembly self-checks")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML file with default values for the flags")
        p.add_argument("--case", help="ex41, ex42 or stokes")
        p.add_argument("--mu", type=float, help="viscosity (default 1)")
        p.add_argument("--tau", help="time step(s), comma separated; fractions allowed")
        p.add_argument("--h", help="mesh size(s) 1/n, comma separated, e.g. 1/8,1/16")
        p.add_argument("--T", type=float, help="final time (the run length when --t0 is given)")
        p.add_argument("--quad-degree", dest="quad_degree", type=int, help="quadrature degree")
        p.add_argument("--slow", action="store_true", default=None,
                       help="include the expensive full-scale runs")
        p.add_argument("--out", help="output directory for CSV, manifest and VTK files")
        p.add_argument("--vtk-every", dest="vtk_every", type=int,
                       help="write VTK snapshots every K steps")
        p.add_argument("--t0", type=float, help="initial time of the energy study")
    return parser


def merged_options(args) -> dict:
    opts = {}
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            raw = tomllib.load(fh)
        for key, value in raw.items():
            norm = key.replace("-", "_")
            if norm not in KEYS:
                raise ValueError(f"unknown key {key!r} in {args.config}")
            opts[norm] = value
    for key in KEYS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def spec_from_options(command: str, opts: dict) -> ExperimentSpec:
    kw = {}
    if "case" in opts:
        kw["case"] = opts["case"]
    if "mu" in opts:
        kw["mu"] = float(opts["mu"])
    if "T" in opts:
        kw["T"] = float(opts["T"])
    if "quad_degree" in opts:
        kw["quadrature_degree"] = int(opts["quad_degree"])
    if "slow" in opts:
        kw["slow"] = bool(opts["slow"])
    if "out" in opts:
        kw["out_dir"] = str(opts["out"])
    if "vtk_every" in opts:
        kw["vtk_every"] = int(opts["vtk_every"])
    if "t0" in opts:
        kw["initial_time"] = float(opts["t0"])
    if "h" in opts:
        ns = []
        for h in _steps(opts["h"]):
            n = round(1.0 / h)
            if n < 1 or abs(n * h - 1.0) > 1e-9:
                raise ValueError(f"mesh size {h} is not 1/n for an integer n")
            ns.append(n)
        kw["mesh_schedule"] = ns
    if "tau" in opts:
        kw["tau_schedule"] = _steps(opts["tau"])
    factory = {"converge-space": space_spec, "converge-time": time_spec, "energy": energy_spec}
    if command == "converge-space" and "tau_schedule" in kw:
        raise ValueError("converge-space uses tau = h; --tau is not accepted")
    return factory[command](**kw)


def _run_check(opts) -> bool:
    from .checks import random_energy_suite, run_all_checks

    results = run_all_checks(mu=float(opts.get("mu", 1.0)))
    if opts.get("slow"):
        results.append(random_energy_suite())
    for r in results:
        print(r.line())
    return all(r.passed for r in results)


def _report(result) -> None:
    spec = result.spec
    if spec.kind == "energy":
        e = result.energy
        print(f"energy: {len(e.E)} levels, E0 = {e.E[0]:.10g}, E_N = {e.E[-1]:.10g}")
        for n, t, val in zip(e.n, e.t, e.E):
            if n % max(1, len(e.E) // 10) == 0:
                print(f"  n={n:4d} t={t:8.4f} E={val:.12g}")
    else:
        first = "h" if spec.kind == "converge-space" else "tau"
        print(f"{first:>10} {'err_rho':>11} {'ord':>6} {'err_u':>11} {'ord':>6}")
        for r in result.rows:
            if r.error:
                print(f"{r.param:10.5g} failed: {r.error}")
                continue
            o_r = "" if r.order_rho is None else f"{r.order_rho:.2f}"
            o_u = "" if r.order_u is None else f"{r.order_u:.2f}"
            flag = "  (past spatial floor)" if r.past_floor else ""
            print(f"{r.param:10.5g} {r.err_rho:11.3e} {o_r:>6} {r.err_u:11.3e} {o_u:>6}{flag}")
        if result.floor_baseline is not None:
            print(f"estimated spatial error floor of u: {result.floor_baseline:.3e}")
    for name, ok in result.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = merged_options(args)
        if args.command == "check":
            return 0 if _run_check(opts) else 1
        spec = spec_from_options(args.command, opts)
        result = run_experiment(spec)
    except (ValueError, OSError) as exc:
        print(f"vdns: error: {exc}", file=sys.stderr)
        return 2
    _report(result)
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
