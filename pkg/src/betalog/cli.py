"""Command-line entry point: ``betalog {constants,logz,equilibrium,sample,experiment}``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .ensembles import EnsembleSpec, Kind, Potential
from .equilibrium import entropy_constant_general, entropy_functional, solve_equilibrium, suggest_box
from .harness import ExperimentConfig, draw_configurations, run_experiment
from .partition import (
    asymptotic_coefficients,
    centering_constant,
    clt_variance,
    entropy_constant,
    exact_y_variance,
    expected_x_stat,
    log_z_asymptotic,
    log_z_exact,
)
from .sampler import McmcParams
from .specialfn import CONSTANTS, c_beta, c_tilde, r_coeff
from .statistic import statistics

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _spec_from_args(args) -> EnsembleSpec:
    kind = Kind.parse(args.ensemble)
    if kind is Kind.GENERAL:
        if not args.potential:
            raise ValueError("--potential is required for a general ensemble")
        return EnsembleSpec.general(args.beta, Potential.from_file(args.potential))
    return EnsembleSpec(kind, args.beta, alpha=args.alpha, mu=args.mu, nu=args.nu)


def _add_ensemble_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ensemble", default="hermite",
                   help="hermite, circular, laguerre, jacobi or general")
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--alpha", type=float, help="Laguerre weight exponent")
    p.add_argument("--mu", type=float, help="Jacobi exponent at +1")
    p.add_argument("--nu", type=float, help="Jacobi exponent at -1")
    p.add_argument("--potential", help="coefficient file for a general potential")


def _emit(data: dict) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def cmd_constants(args) -> int:
    spec = _spec_from_args(args)
    b = spec.beta
    out = {
        "ensemble": spec.to_dict(),
        "clt_variance": clt_variance(b),
        "r_coeff": r_coeff(b),
        "c_beta": c_beta(b),
        "c_tilde": c_tilde(b),
        "c_tilde_printed": c_tilde(b, printed_form=True),
        "euler_gamma": CONSTANTS.euler_gamma,
        "zeta_prime_minus1": CONSTANTS.zeta_prime_minus1,
    }
    if spec.closed_form:
        out["entropy_constant"] = entropy_constant(spec)
        out["entropy_constant_printed"] = entropy_constant(spec, printed_form=True)
    if spec.kind is Kind.HERMITE:
        co = asymptotic_coefficients(spec)
        out.update(e0=co.e0, f0=co.f0)
    if args.n:
        n = args.n
        out["n"] = n
        if spec.closed_form:
            out.update(
                expected_x_stat=expected_x_stat(spec, n),
                exact_y_variance=exact_y_variance(spec, n),
                centering=centering_constant(spec, n),
                centering_printed=centering_constant(spec, n, printed_form=True),
            )
    _emit(out)
    return EXIT_OK


def cmd_logz(args) -> int:
    spec = _spec_from_args(args)
    out = {"ensemble": spec.to_dict(), "n": args.n}
    if not args.asymptotic or args.exact:
        ev = log_z_exact(spec, args.n)
        out.update(log_z=ev.log_z, dlog_z_dbeta=ev.dlog_z_dbeta, d2log_z_dbeta2=ev.d2log_z_dbeta2)
    if args.asymptotic:
        out["log_z_asymptotic"] = log_z_asymptotic(spec, args.n)
        if "log_z" in out:
            out["residual"] = out["log_z"] - out["log_z_asymptotic"]
    _emit(out)
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    v = Potential.from_file(args.potential)
    box = args.box or suggest_box(v)
    m = solve_equilibrium(v, args.grid, box, args.tol, method=args.method)
    out = {
        "potential": list(v.coefficients),
        "grid_points": args.grid,
        "box_halfwidth": box,
        "converged": m.converged,
        "status": m.status,
        "iterations": m.iterations,
        "support": m.support,
        "lagrange_l": m.lagrange_l,
        "el_residual": m.el_residual,
        "energy": m.energy,
        "edge_generic": m.edge_generic,
    }
    try:
        out["entropy"] = entropy_functional(m)
        raw, norm = entropy_constant_general(v, args.beta, m)
        out.update(entropy_constant_raw=raw, entropy_constant_normalized=norm)
    except ValueError as exc:
        out["entropy_error"] = str(exc)
    if args.out:
        m.to_csv(args.out)
    _emit(out)
    return EXIT_OK if m.converged else EXIT_FAIL


def cmd_sample(args) -> int:
    spec = _spec_from_args(args)
    mcmc = McmcParams(burn_in=args.burn_in, thinning=args.thinning)
    config = ExperimentConfig(
        ensemble=spec, n_grid=(args.n,), replicas=args.replicas, seed=args.seed,
        mcmc=mcmc, sampler=args.sampler, workers=args.workers,
    )
    configs = draw_configurations(config, args.n)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "samples.csv", "w") as fh:
        for c in configs:
            fh.write(c.to_csv_row() + "\n")
    if spec.closed_form:
        ev = log_z_exact(spec, args.n)
        e_beta = entropy_constant(spec)
        centre = centering_constant(spec, args.n)
        with open(out / "statistics.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["replica", "h", "log_p", "x_stat", "y_stat", "w_stat"])
            for r, c in enumerate(configs):
                s = statistics(c, spec, args.n, ev.log_z, e_beta, centre)
                writer.writerow([r] + [repr(v) for v in (s.h, s.log_p, s.x_stat, s.y_stat, s.w_stat)])
    print(f"wrote {len(configs)} configurations to {out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    config = replace(config, experiment=args.name)
    if args.out:
        config = replace(config, output_dir=args.out)
    if args.workers:
        config = replace(config, workers=args.workers)
    report = run_experiment(config)
    for row in report.rows:
        flag = "-" if row.passed is None else ("PASS" if row.passed else "FAIL")
        print(f"n={row.n:<6d} mc={row.mc_mean:.6g} exact={row.exact_mean:.6g} "
              f"limit={row.limit_value:.6g} {flag}")
    for name, ok in report.checks.items():
        print(f"{name}: {'PASS' if ok else 'FAIL'}")
    print("overall:", "PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="betalog", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="entropy, CLT and asymptotic constants")
    _add_ensemble_args(p)
    p.add_argument("--n", type=int, help="also report finite-n oracles")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("logz", help="exact and/or asymptotic log partition function")
    _add_ensemble_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--asymptotic", action="store_true")
    p.set_defaults(func=cmd_logz)

    p = sub.add_parser("equilibrium", help="equilibrium measure of a polynomial potential")
    p.add_argument("--potential", required=True, help="one coefficient per line, constant first")
    p.add_argument("--grid", type=int, default=2000)
    p.add_argument("--box", type=float, help="half-width of the computational box")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--method", choices=["active_set", "projected_gradient"], default="active_set")
    p.add_argument("--out", help="CSV file for x, density, weight")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("sample", help="draw configurations")
    _add_ensemble_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=int, default=10)
    p.add_argument("--sampler", choices=["auto", "tridiag", "mcmc"], default="auto")
    p.add_argument("--burn-in", type=int, help="MCMC burn-in sweeps")
    p.add_argument("--thinning", type=int, default=10)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("experiment", help="run a configured experiment")
    p.add_argument("name", choices=["aep", "clt", "groundstate", "concentration",
                                    "logz-residual", "equilibrium"])
    p.add_argument("--config", required=True, help="JSON file mirroring ExperimentConfig")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, OSError, KeyError) as exc:
        print(f"betalog: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
