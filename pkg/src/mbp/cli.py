"""Command-line harness: simulate, fit, diagnose and experiment subcommands."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig, load_config
from .estimator import FitConfig, fit, lambda_policy
from .experiments import run_experiment
from .link import sigmoid_link
from .simulate import random_sparse_theta, read_path, simulate, write_path
from .tensor import read_tensor, write_tensor

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def _add_link_flags(parser):
    parser.add_argument("--alpha", type=float, default=1.0, help="sigmoid gain")
    parser.add_argument("--eps", type=float, default=0.05, help="probability clamp level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbp",
        description="Binary autoregressive process toolkit: simulation, "
        "l1-penalized fitting, and mixing diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a sample path and write it to a file")
    group = sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--theta", help="tensor file with the generating weights")
    group.add_argument(
        "--random",
        metavar="N,P,S",
        help="generate a random s-sparse N x N x p truth instead",
    )
    sim.add_argument("--n", type=int, required=True, help="number of recorded samples")
    sim.add_argument("--burn-in", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output path file")
    sim.add_argument("--theta-out", help="also write the generating tensor here")
    _add_link_flags(sim)

    fit_p = sub.add_parser("fit", help="fit the penalized estimator to a path file")
    fit_p.add_argument("--data", required=True, help="sample path file")
    lam_group = fit_p.add_mutually_exclusive_group(required=True)
    lam_group.add_argument("--lambda", dest="lam", type=float, help="penalty weight")
    lam_group.add_argument(
        "--lambda-policy",
        metavar="MODE[,C2]",
        help="derive the weight from a policy: simulation or theorem, "
        "optionally with the constant, e.g. 'simulation,0.25'",
    )
    fit_p.add_argument("--tol", type=float, default=1e-8)
    fit_p.add_argument("--max-iters", type=int, default=5000)
    fit_p.add_argument("--no-accelerate", action="store_true")
    fit_p.add_argument("--out", required=True, help="output tensor file")
    _add_link_flags(fit_p)

    diag = sub.add_parser("diagnose", help="run one named diagnostic check")
    diag.add_argument("--config", help="config file (experiment = diagnose)")
    diag.add_argument("--check", help="check name when no config file is given")
    diag.add_argument("--theta", help="tensor file the check should use")
    diag.add_argument("--out", help="output directory", default="out")
    diag.add_argument("--n-dims", type=int, default=2)
    diag.add_argument("--n-lags", type=int, default=1)
    diag.add_argument("--samples", type=int)
    diag.add_argument("--n", type=int)
    diag.add_argument("--seed", type=int, default=0)
    _add_link_flags(diag)

    exp = sub.add_parser("experiment", help="run a config-driven sweep")
    exp.add_argument("--config", required=True, help="config file")
    return parser


def _cmd_simulate(args) -> int:
    link = sigmoid_link(args.alpha, args.eps)
    if args.theta:
        theta = read_tensor(args.theta)
    else:
        parts = args.random.split(",")
        if len(parts) != 3:
            print("--random expects N,P,S", file=sys.stderr)
            return EXIT_ERROR
        n_dims, p, s = (int(x) for x in parts)
        theta = random_sparse_theta(n_dims, p, s, seed=args.seed)
    path = simulate(theta, link, args.n, burn_in=args.burn_in, seed=args.seed)
    write_path(path, args.out)
    if args.theta_out:
        write_tensor(theta, args.theta_out)
    print(f"wrote {args.out}: n={path.n} N={path.n_dims} p={path.n_lags}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    link = sigmoid_link(args.alpha, args.eps)
    path = read_path(args.data)
    if args.lam is not None:
        lam = args.lam
    else:
        parts = args.lambda_policy.split(",")
        mode = parts[0]
        c2 = float(parts[1]) if len(parts) > 1 else None
        lam = lambda_policy(path.n, path.n_dims, path.n_lags, link=link, c2=c2, mode=mode)
    result = fit(
        path,
        link,
        FitConfig(
            lam=lam,
            max_iters=args.max_iters,
            tol=args.tol,
            accelerate=not args.no_accelerate,
        ),
    )
    write_tensor(result.theta_hat, args.out)
    status = "converged" if result.converged else "max-iters reached"
    print(
        f"wrote {args.out}: lambda={lam:.6g} iterations={result.iterations} "
        f"objective={result.objective_trace[-1]:.8f} ({status})"
    )
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _cmd_diagnose(args) -> int:
    if args.config:
        config = load_config(args.config)
    else:
        if not args.check:
            print("either --config or --check is required", file=sys.stderr)
            return EXIT_ERROR
        mapping = {
            "experiment": "diagnose",
            "N": str(args.n_dims),
            "p": str(args.n_lags),
            "link.alpha": str(args.alpha),
            "link.eps": str(args.eps),
            "output_dir": args.out,
            "master_seed": str(args.seed),
            "diagnose.check": args.check,
        }
        if args.theta:
            mapping["diagnose.theta"] = args.theta
        if args.samples is not None:
            mapping["diagnose.samples"] = str(args.samples)
        if args.n is not None:
            mapping["diagnose.n"] = str(args.n)
        config = ExperimentConfig.from_mapping(mapping)
    files = run_experiment(config)
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    config = load_config(args.config)
    files = run_experiment(config)
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "diagnose":
            return _cmd_diagnose(args)
        if args.command == "experiment":
            return _cmd_experiment(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
