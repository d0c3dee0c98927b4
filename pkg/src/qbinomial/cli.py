"""Command-line surface: evaluation, sampling, asymptotics, solving, sweeps.

Emits CSV (header row, LF endings, 17 significant digits) or JSON
({meta: {subcommand, params, seed}, data: [...]}) for scripts and plotting.
Exit codes: 0 success, 2 invalid parameters, 1 internal numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .asymptotics import (
    ConsistencyError,
    FractionalDrift,
    default_fourier_terms,
    dnorm_alpha,
    limit_law,
    mean_expansion,
)
from .distributions import (
    DiscreteNormal,
    Heine,
    KempBinomial,
    kb_moments,
    kb_sample,
    sample_by_inversion,
)
from .metrics import SCENARIOS, convergence_sweep, tabulate
from .qcalc import QBase, ScaledReal
from .solvers import theta_for_mean, theta_for_poisson, theta_limit_for_mean

__all__ = ["RunConfig", "main", "run"]

_THETA_LITERAL = re.compile(
    r"^\s*([0-9.eE+-]+)\s*\*\s*q\^\(?(-?[0-9.]+)\)?\s*$"
)


@dataclass(frozen=True)
class RunConfig:
    """One validated CLI invocation."""

    subcommand: str
    parameters: dict
    output_format: str = "csv"
    seed: int | None = None
    output_path: str | None = None


def parse_theta(text: str, q: QBase) -> ScaledReal:
    """theta as a plain float or an 'a*q^-b' literal (exponential regimes)."""
    m = _THETA_LITERAL.match(text)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        return ScaledReal.from_float(a, q) * ScaledReal.from_q_power(b, q)
    return ScaledReal.from_float(float(text), q)


def parse_n_list(text: str) -> list[int]:
    """Comma list '10,20,30' and/or 'start:stop:step' ranges."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            pieces = [int(p) for p in part.split(":")]
            if len(pieces) == 2:
                pieces.append(1)
            start, stop, step = pieces
            out.extend(range(start, stop + 1, step))
        elif part:
            out.append(int(part))
    if not out:
        raise ValueError(f"empty n list: {text!r}")
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _emit(config: RunConfig, columns: list[str], rows: list[dict]) -> str:
    if config.output_format == "json":
        doc = {
            "meta": {
                "subcommand": config.subcommand,
                "params": {
                    k: v for k, v in config.parameters.items() if not k.startswith("_")
                },
                "seed": config.seed,
            },
            "data": rows,
        }
        return json.dumps(doc) + "\n"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return out.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def _dist_from_args(args) -> object:
    q = QBase(args.q)
    if args.dist == "kb":
        if args.n is None or args.theta is None:
            raise ValueError("kb needs --n and --theta")
        return KempBinomial(args.n, parse_theta(args.theta, q), q)
    if args.dist == "heine":
        if args.theta is None:
            raise ValueError("heine needs --theta")
        return Heine(float(args.theta), q)
    if args.dist == "dnorm":
        if args.alpha is None:
            raise ValueError("dnorm needs --alpha")
        return DiscreteNormal(args.alpha, q)
    raise ValueError(f"unknown distribution {args.dist!r}")


def _cmd_pmf(config: RunConfig) -> str:
    args = config.parameters["_args"]
    table = tabulate(_dist_from_args(args), args.tol)
    rows = [{"x": int(x), "p": float(p)} for x, p in zip(table.x_values(), table.probs)]
    return _emit(config, ["x", "p"], rows)


def _cmd_moments(config: RunConfig) -> str:
    args = config.parameters["_args"]
    law = _dist_from_args(args)
    if isinstance(law, KempBinomial):
        m = kb_moments(law)
        mean, var = m.mean, m.variance
    else:
        t = tabulate(law, 1e-12)
        xs = t.x_values().astype(float)
        mean = float(np.dot(xs, t.probs))
        var = float(np.dot((xs - mean) ** 2, t.probs))
    return _emit(config, ["mean", "variance"], [{"mean": mean, "variance": var}])


def _cmd_sample(config: RunConfig) -> str:
    args = config.parameters["_args"]
    law = _dist_from_args(args)
    rng = np.random.default_rng(config.seed)
    if isinstance(law, KempBinomial):
        draws = kb_sample(law, rng, size=args.count)
    else:
        draws = sample_by_inversion(tabulate(law, 1e-12), rng, size=args.count)
    rows = [{"index": i, "value": int(v)} for i, v in enumerate(draws)]
    return _emit(config, ["index", "value"], rows)


def _cmd_asym(config: RunConfig) -> str:
    args = config.parameters["_args"]
    q = QBase(args.q)
    drift = FractionalDrift(Fraction(args.slope), args.offset)
    terms = args.terms or default_fourier_terms(q)
    rows = []
    for n in parse_n_list(args.n_list):
        r = mean_expansion(n, drift, q, terms)
        direct = kb_moments(
            KempBinomial(n, ScaledReal.from_q_power(-r.f_value, q), q)
        ).mean
        rows.append(
            {
                "n": n,
                "f": r.f_value,
                "beta": r.beta,
                "c": r.c_value,
                "estimate": r.estimate,
                "mu_direct": direct,
                "abs_error": abs(direct - r.estimate),
                "error_bound": r.error_bound,
                "terms": r.terms_used,
            }
        )
    return _emit(
        config,
        ["n", "f", "beta", "c", "estimate", "mu_direct", "abs_error", "error_bound", "terms"],
        rows,
    )


def _cmd_limit(config: RunConfig) -> str:
    args = config.parameters["_args"]
    q = QBase(args.q)
    beta = float(Fraction(args.beta)) if "/" in args.beta else float(args.beta)
    law = limit_law(beta, q)
    alpha = dnorm_alpha(beta)
    t = law.lattice_probs
    rows = [
        {
            "x": int(x),
            "p": float(p),
            "alpha": alpha,
            "sigma": law.sigma,
            "delta": law.delta,
        }
        for x, p in zip(t.x_values(), t.probs)
    ]
    return _emit(config, ["x", "p", "alpha", "sigma", "delta"], rows)


def _cmd_solve_theta(config: RunConfig) -> str:
    args = config.parameters["_args"]
    q = QBase(args.q)
    if (args.mu is None) == (args.lam is None):
        raise ValueError("give exactly one of --mu / --lambda")
    if args.lam is not None:
        if args.n is None:
            raise ValueError("--lambda needs --n")
        theta = theta_for_poisson(args.n, q, args.lam)
        rows = [{"theta": theta, "residual": 0.0, "iterations": 0}]
    elif args.n is not None:
        sol = theta_for_mean(args.n, q, args.mu)
        rows = [{"theta": sol.theta, "residual": sol.residual, "iterations": sol.iterations}]
    else:
        sol = theta_limit_for_mean(q, args.mu)
        rows = [{"theta": sol.theta, "residual": sol.residual, "iterations": sol.iterations}]
    return _emit(config, ["theta", "residual", "iterations"], rows)


def _cmd_converge(config: RunConfig) -> str:
    args = config.parameters["_args"]
    params: dict = {"q": QBase(args.q)}
    if args.threshold is not None:
        params["threshold"] = args.threshold
    if args.lam is not None:
        params["lam"] = args.lam
    if args.mu is not None:
        params["mu"] = args.mu
    if args.theta is not None:
        params["theta"] = float(args.theta)
    if args.slope is not None:
        params["slope"] = Fraction(args.slope)
        params["offset"] = args.offset
    if args.fn is not None:
        params["fn"] = args.fn
    if args.n is not None:
        params["n"] = args.n
    if args.q_list:
        params["q_list"] = [float(s) for s in args.q_list.split(",")]
    n_list = parse_n_list(args.n_list) if args.n_list else []
    report = convergence_sweep(args.scenario, params, n_list)
    keys = report.aux_keys()
    rows = [
        {
            "n": r.n,
            "distance": r.distance,
            **{k: r.auxiliary.get(k, math.nan) for k in keys},
            "threshold": report.threshold,
            "verdict": report.verdict,
        }
        for r in report.rows
    ]
    return _emit(config, ["n", "distance", *keys, "threshold", "verdict"], rows)


_COMMANDS = {
    "pmf": _cmd_pmf,
    "moments": _cmd_moments,
    "sample": _cmd_sample,
    "asym": _cmd_asym,
    "limit": _cmd_limit,
    "solve-theta": _cmd_solve_theta,
    "converge": _cmd_converge,
}


def run(config: RunConfig) -> int:
    """Execute a validated config; returns the process exit status."""
    try:
        document = _COMMANDS[config.subcommand](config)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConsistencyError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1
    if config.output_path:
        with open(config.output_path, "w", newline="") as fh:
            fh.write(document)
    else:
        sys.stdout.write(document)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbinomial",
        description="Kemp q-binomial distribution toolkit: pmf tables, moments, "
        "sampling, mean asymptotics, limit laws, and convergence sweeps.",
    )
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--output", help="output file (default: stdout)")
    parser.add_argument("--seed", type=int, help="64-bit RNG seed")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_dist_flags(p):
        p.add_argument("--dist", choices=("kb", "heine", "dnorm"), required=True)
        p.add_argument("--n", type=int)
        p.add_argument("--theta", help="float or 'a*q^-b' literal")
        p.add_argument("--alpha", type=float)
        p.add_argument("--q", type=float, required=True)
        p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("pmf", help="tabulate a pmf")
    add_dist_flags(p)

    p = sub.add_parser("moments", help="mean and variance")
    add_dist_flags(p)

    p = sub.add_parser("sample", help="seeded draws")
    add_dist_flags(p)
    p.add_argument("--count", type=int, default=1)

    p = sub.add_parser("asym", help="mean expansion vs direct sum")
    p.add_argument("--slope", required=True, help="rational p/r")
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--n-list", required=True)
    p.add_argument("--terms", type=int)

    p = sub.add_parser("limit", help="constant-beta limit law lattice")
    p.add_argument("--beta", required=True, help="fractional part, float or p/r")
    p.add_argument("--q", type=float, required=True)

    p = sub.add_parser("solve-theta", help="invert the mean map")
    p.add_argument("--n", type=int)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--mu", type=float)
    p.add_argument("--lambda", dest="lam", type=float)

    p = sub.add_parser("converge", help="convergence sweep for one theorem")
    p.add_argument("--scenario", choices=SCENARIOS, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--n-list")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--theta")
    p.add_argument("--slope")
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--fn", help="'sqrt' for the degenerate scenario")
    p.add_argument("--n", type=int)
    p.add_argument("--q-list", help="comma list of q values (q-to-1 scenario)")
    p.add_argument("--threshold", type=float)
    return parser


def _public_params(args: argparse.Namespace) -> dict:
    skip = {"subcommand", "format", "output", "seed"}
    return {
        k: v for k, v in vars(args).items() if k not in skip and v is not None
    }


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse already printed the diagnostic
        return int(exc.code or 0)
    params = _public_params(args)
    params["_args"] = args
    config = RunConfig(
        subcommand=args.subcommand,
        parameters=params,
        output_format=args.format,
        seed=args.seed,
        output_path=args.output,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
