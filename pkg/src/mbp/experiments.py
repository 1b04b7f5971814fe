"""Configuration-driven experiment sweeps with CSV artifacts.

Every sweep point (sparsity s, sample size n) runs ``replicates``
independent repetitions: a fresh ground-truth tensor, a fresh simulated
path, one penalized fit, and the error metrics, all recorded as one CSV row.
Per-replicate seeds are derived from (master_seed, s, n, replicate) only, so
sweeps that share a point reuse identical draws and a grid row reproduces
the corresponding single-axis sweep exactly. Summary files hold per-point
means and standard deviations. Plotting is left to external tools.
"""

from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ExperimentConfig
from .estimator import FitConfig, error_metrics, fit, lambda_policy
from .likelihood import concentration_trial, grad_bound_trial, rsc_probe
from .markov import (
    contraction_check,
    kl_chain_decomposition,
    mixing_coefficients,
)
from .simulate import random_sparse_theta, simulate
from .spectral import (
    ConstantDecay,
    ExponentialDecay,
    PolynomialDecay,
    decay_scaling_report,
    psd_estimate,
)
from .tensor import ParamTensor, mixing_norm, read_tensor

__all__ = [
    "RunRecord",
    "RECORD_COLUMNS",
    "run_experiment",
    "run_error_vs_n",
    "run_error_vs_sparsity",
    "run_grid",
    "run_support_recovery",
    "run_diagnose",
]

RECORD_COLUMNS = (
    "experiment",
    "replicate",
    "N",
    "p",
    "s",
    "n",
    "lambda",
    "frob_error",
    "frob_error_sq",
    "support_fraction",
    "iterations",
    "converged",
    "wall_seconds",
    "seed",
)


@dataclass(frozen=True)
class RunRecord:
    """One (sweep point, replicate) outcome."""

    experiment: str
    replicate: int
    n_dims: int
    n_lags: int
    s: int
    n: int
    lam: float
    frob_error: float
    frob_error_sq: float
    support_fraction: float
    iterations: int
    converged: bool
    wall_seconds: float
    seed: int

    def row(self):
        return [
            self.experiment,
            self.replicate,
            self.n_dims,
            self.n_lags,
            self.s,
            self.n,
            _fmt(self.lam),
            _fmt(self.frob_error),
            _fmt(self.frob_error_sq),
            _fmt(self.support_fraction),
            self.iterations,
            int(self.converged),
            _fmt(self.wall_seconds),
            self.seed,
        ]


def _fmt(x) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def _point_seeds(master_seed: int, s: int, n: int, replicate: int):
    # seeds depend only on (master_seed, point, replicate): sweeps sharing a
    # point share draws, so a grid row equals the matching 1-D sweep
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(s), int(n), int(replicate)))
    theta_ss, path_ss = ss.spawn(2)
    return (
        int(theta_ss.generate_state(1, np.uint64)[0]),
        int(path_ss.generate_state(1, np.uint64)[0]),
    )


def _effective_lambda(config: ExperimentConfig, n: int) -> float:
    if config.lambda_mode == "fixed":
        return float(config.lambda_value)
    return lambda_policy(
        n,
        config.n_dims,
        config.n_lags,
        link=config.link,
        c2=config.effective_c2(),
        mode=config.lambda_mode,
    )


def _run_point_replicate(config: ExperimentConfig, s: int, n: int, rep: int) -> RunRecord:
    theta_seed, path_seed = _point_seeds(config.master_seed, s, n, rep)
    start = time.perf_counter()
    theta_star = random_sparse_theta(
        config.n_dims,
        config.n_lags,
        s,
        config.magnitude_low,
        config.magnitude_high,
        seed=theta_seed,
    )
    path = simulate(theta_star, config.link, n, burn_in=config.burn_in, seed=path_seed)
    lam = _effective_lambda(config, n)
    result = fit(
        path,
        config.link,
        FitConfig(
            lam=lam,
            max_iters=config.fit_max_iters,
            tol=config.fit_tol,
            accelerate=config.fit_accelerate,
        ),
    )
    metrics = error_metrics(result.theta_hat, theta_star, s)
    return RunRecord(
        experiment=config.experiment,
        replicate=rep,
        n_dims=config.n_dims,
        n_lags=config.n_lags,
        s=s,
        n=n,
        lam=lam,
        frob_error=metrics.frob_error,
        frob_error_sq=metrics.frob_error_sq,
        support_fraction=metrics.support_fraction,
        iterations=result.iterations,
        converged=result.converged,
        wall_seconds=time.perf_counter() - start,
        seed=path_seed,
    )


def _timeout_record(config: ExperimentConfig, s: int, n: int, rep: int) -> RunRecord:
    _, path_seed = _point_seeds(config.master_seed, s, n, rep)
    return RunRecord(
        experiment=config.experiment,
        replicate=rep,
        n_dims=config.n_dims,
        n_lags=config.n_lags,
        s=s,
        n=n,
        lam=_effective_lambda(config, n),
        frob_error=math.nan,
        frob_error_sq=math.nan,
        support_fraction=math.nan,
        iterations=0,
        converged=False,
        wall_seconds=math.nan,
        seed=path_seed,
    )


def _sweep(config: ExperimentConfig, points):
    """Run all replicates over the (s, n) points; points stay in given order."""
    records = []
    for s, n in points:
        point_start = time.perf_counter()
        for rep in range(config.replicates):
            timed_out = (
                config.point_timeout > 0
                and time.perf_counter() - point_start > config.point_timeout
            )
            if timed_out:
                records.append(_timeout_record(config, s, n, rep))
            else:
                records.append(_run_point_replicate(config, s, n, rep))
    return records


def _write_records(records, fname) -> None:
    with open(fname, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for rec in records:
            writer.writerow(rec.row())


def _summaries(records, key):
    """Group records by the given attribute and average the metrics."""
    groups = {}
    for rec in records:
        groups.setdefault(getattr(rec, key), []).append(rec)
    rows = []
    for value in sorted(groups):
        recs = groups[value]
        errs = np.array([r.frob_error for r in recs])
        fracs = np.array([r.support_fraction for r in recs])
        rows.append(
            {
                key: value,
                "replicates": len(recs),
                "mean_frob_error": float(np.mean(errs)),
                "std_frob_error": float(np.std(errs, ddof=1)) if len(recs) > 1 else 0.0,
                "mean_frob_error_sq": float(np.mean(errs**2)),
                "mean_support_fraction": float(np.mean(fracs)),
                "lambda": recs[0].lam,
            }
        )
    return rows


def _write_dict_rows(rows, fname, columns) -> None:
    with open(fname, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [_fmt(row[c]) if isinstance(row[c], float) else row[c] for c in columns]
            )


def _out(config, name) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    return os.path.join(config.output_dir, name)


def run_error_vs_n(config: ExperimentConfig):
    """Error against sample size at a single sparsity level."""
    if len(config.s_values) != 1:
        raise ConfigError("key 'sweep.s_values': error_vs_n needs exactly one s")
    s = config.s_values[0]
    records = _sweep(config, [(s, n) for n in config.n_values])
    runs = _out(config, "error_vs_n_runs.csv")
    _write_records(records, runs)
    summary = _out(config, "error_vs_n_summary.csv")
    _write_dict_rows(
        _summaries(records, "n"),
        summary,
        ["n", "replicates", "mean_frob_error", "std_frob_error",
         "mean_frob_error_sq", "mean_support_fraction", "lambda"],
    )
    return [runs, summary]


def run_error_vs_sparsity(config: ExperimentConfig):
    """Error against sparsity at a single sample size, with a linear trend fit."""
    if len(config.n_values) != 1:
        raise ConfigError("key 'sweep.n_values': error_vs_sparsity needs exactly one n")
    n = config.n_values[0]
    records = _sweep(config, [(s, n) for s in config.s_values])
    runs = _out(config, "error_vs_sparsity_runs.csv")
    _write_records(records, runs)
    rows = _summaries(records, "s")
    summary = _out(config, "error_vs_sparsity_summary.csv")
    _write_dict_rows(
        rows,
        summary,
        ["s", "replicates", "mean_frob_error", "std_frob_error",
         "mean_frob_error_sq", "mean_support_fraction", "lambda"],
    )
    if len(rows) >= 2:
        slope, intercept = np.polyfit(
            [r["s"] for r in rows], [r["mean_frob_error"] for r in rows], deg=1
        )
    else:
        slope, intercept = math.nan, rows[0]["mean_frob_error"]
    trend = _out(config, "error_vs_sparsity_trend.csv")
    _write_dict_rows(
        [{"slope": float(slope), "intercept": float(intercept)}],
        trend,
        ["slope", "intercept"],
    )
    return [runs, summary, trend]


def run_grid(config: ExperimentConfig):
    """Full (s, n) product sweep plus a pivoted mean-error matrix."""
    points = [(s, n) for s in config.s_values for n in config.n_values]
    records = _sweep(config, points)
    runs = _out(config, "grid_runs.csv")
    _write_records(records, runs)
    means = {}
    for rec in records:
        means.setdefault((rec.s, rec.n), []).append(rec.frob_error)
    matrix = _out(config, "grid_matrix.csv")
    with open(matrix, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s_by_n"] + [str(n) for n in config.n_values])
        for s in config.s_values:
            writer.writerow(
                [str(s)]
                + [_fmt(float(np.mean(means[(s, n)]))) for n in config.n_values]
            )
    return [runs, matrix]


def run_support_recovery(config: ExperimentConfig):
    """Support-recovery fraction across (s, n), with n / log(N^2 p) columns."""
    points = [(s, n) for s in config.s_values for n in config.n_values]
    records = _sweep(config, points)
    runs = _out(config, "support_recovery_runs.csv")
    _write_records(records, runs)
    log_dim = math.log(config.n_dims**2 * config.n_lags)
    rows = []
    for s in config.s_values:
        for n in config.n_values:
            recs = [r for r in records if r.s == s and r.n == n]
            fracs = np.array([r.support_fraction for r in recs])
            rows.append(
                {
                    "s": s,
                    "n": n,
                    "n_over_log": n / log_dim,
                    "mean_support_fraction": float(np.mean(fracs)),
                    "std_support_fraction": float(np.std(fracs, ddof=1))
                    if len(recs) > 1
                    else 0.0,
                }
            )
    summary = _out(config, "support_recovery_summary.csv")
    _write_dict_rows(
        rows, summary, ["s", "n", "n_over_log", "mean_support_fraction", "std_support_fraction"]
    )
    return [runs, summary]


# ---------------------------------------------------------------------------
# diagnostics dispatch
# ---------------------------------------------------------------------------


def _diag_theta(config: ExperimentConfig):
    spec = config.diagnose
    if "theta" in spec:
        return read_tensor(spec["theta"])
    s = int(spec.get("s", config.s_values[0] if config.s_values else 0))
    seed = int(spec.get("theta_seed", config.master_seed))
    return random_sparse_theta(
        config.n_dims, config.n_lags, s,
        config.magnitude_low, config.magnitude_high, seed=seed,
    )


def _random_mixing_theta(n_dims, n_lags, link, rng):
    """Dense random tensor rescaled to a mixing norm uniform in (0.05, 0.95)."""
    values = rng.standard_normal((n_dims, n_dims, n_lags))
    base = ParamTensor(values)
    target = rng.uniform(0.05, 0.95)
    m = mixing_norm(base, link)
    return ParamTensor(values * (target / m))


def run_diagnose(config: ExperimentConfig):
    """Run the configured checks (comma separated) and write their CSVs.

    An empty check list writes only the index file with its header row.
    """
    names = [c.strip() for c in config.diagnose.get("check", "").split(",") if c.strip()]
    files = []
    index_rows = []
    for name in names:
        written = _run_one_check(config, name)
        files.extend(written)
        index_rows.append({"check": name, "files": ";".join(written)})
    index = _out(config, "diagnose_index.csv")
    _write_dict_rows(index_rows, index, ["check", "files"])
    return files + [index]


def _run_one_check(config: ExperimentConfig, check: str):
    spec = config.diagnose
    rng = np.random.default_rng(config.master_seed)
    samples = int(spec.get("samples", 100))
    seed = int(spec.get("seed", config.master_seed))

    if check == "gf-bound":
        out = _out(config, "diagnose_gf_bound.csv")
        rows = []
        for i in range(samples):
            theta = _random_mixing_theta(config.n_dims, config.n_lags, config.link, rng)
            res = contraction_check(theta, config.link)
            rows.append(
                {"sample": i, "tau1_p_step": res.tau1_p_step,
                 "mixing_norm": res.mixing_norm_value, "holds": int(res.holds)}
            )
        _write_dict_rows(rows, out, ["sample", "tau1_p_step", "mixing_norm", "holds"])
        return [out]

    if check == "eta-bound":
        n = int(spec.get("n", 6))
        out = _out(config, "diagnose_eta_bound.csv")
        rows = []
        for i in range(samples):
            theta = _random_mixing_theta(config.n_dims, config.n_lags, config.link, rng)
            res = contraction_check(theta, config.link)
            eta = mixing_coefficients(theta, config.link, n)
            for k in range(1, n + 1):
                for l in range(k, n + 1):
                    bound = res.tau1_p_step ** (1 + (l - k - 1) // config.n_lags)
                    rows.append(
                        {"sample": i, "k": k, "l": l, "eta": float(eta[k - 1, l - 1]),
                         "bound": bound, "holds": int(eta[k - 1, l - 1] <= bound + 1e-10)}
                    )
        _write_dict_rows(rows, out, ["sample", "k", "l", "eta", "bound", "holds"])
        return [out]

    if check == "kl-decomp":
        out = _out(config, "diagnose_kl_decomp.csv")
        rows = []
        n_states = 1 << (config.n_dims * config.n_lags)
        for i in range(samples):
            theta = _random_mixing_theta(config.n_dims, config.n_lags, config.link, rng)
            for z in range(n_states):
                for y in range(n_states):
                    res = kl_chain_decomposition(theta, config.link, z, y)
                    rows.append(
                        {"sample": i, "z": z, "y": y, "lhs": res.lhs, "rhs": res.rhs,
                         "agree": int(res.agree)}
                    )
        _write_dict_rows(rows, out, ["sample", "z", "y", "lhs", "rhs", "agree"])
        return [out]

    if check == "psd":
        n = int(spec.get("n", 200_000))
        segments = int(spec.get("segments", 50))
        freq_points = int(spec.get("freq_points", 256))
        theta = _diag_theta(config)
        path = simulate(theta, config.link, n, burn_in=config.burn_in, seed=seed)
        report = psd_estimate(path, segments, freq_points)
        out = _out(config, "diagnose_psd.csv")
        rows = [
            {"freq": float(f), "min_eig": float(e)}
            for f, e in zip(report.freq_grid, report.min_eigs)
        ]
        _write_dict_rows(rows, out, ["freq", "min_eig"])
        summary = _out(config, "diagnose_psd_summary.csv")
        _write_dict_rows([{"spectral_floor": report.spectral_floor}], summary, ["spectral_floor"])
        return [out, summary]

    if check == "decay-table":
        family_name = spec.get("family", "polynomial")
        c = float(spec.get("c", 0.1))
        if family_name == "constant":
            family = ConstantDecay(c)
        elif family_name == "polynomial":
            family = PolynomialDecay(c, float(spec.get("alpha", 2.0)))
        elif family_name == "exponential":
            family = ExponentialDecay(c, float(spec.get("beta", 1.0)))
        else:
            raise ConfigError(f"key 'diagnose.family': unknown family {family_name!r}")
        p_values = [int(x) for x in spec.get("p_values", "1,2,4,8,16,32,64,128").split(",")]
        rows = decay_scaling_report(family, config.n_dims, p_values, config.link)
        out = _out(config, "diagnose_decay_table.csv")
        _write_dict_rows(
            [
                {"p": r.p, "inner_norm": r.inner_norm, "mixing_norm": r.mixing_norm,
                 "concentration": r.concentration, "diverged": int(r.diverged)}
                for r in rows
            ],
            out,
            ["p", "inner_norm", "mixing_norm", "concentration", "diverged"],
        )
        return [out]

    if check == "grad-bound":
        theta = _diag_theta(config)
        report = grad_bound_trial(
            theta, config.link,
            n=int(spec.get("n", 500)),
            c1=float(spec.get("c1", 4.0)),
            replicates=int(spec.get("replicates", 200)),
            seed=seed,
            burn_in=config.burn_in,
        )
        out = _out(config, "diagnose_grad_bound.csv")
        report.write_csv(out)
        summary = _out(config, "diagnose_grad_bound_summary.csv")
        _write_dict_rows(
            [{"rate": report.rate, "bound_rate": report.bound_rate}],
            summary, ["rate", "bound_rate"],
        )
        return [out, summary]

    if check == "concentration":
        theta = _diag_theta(config)
        delta = ParamTensor(
            np.random.default_rng(seed + 1).standard_normal(theta.values.shape)
        )
        n = int(spec.get("n", 2000))
        t_dev = float(spec.get("t", 0.1))
        report = concentration_trial(
            theta, config.link, delta, n=n, t=t_dev,
            replicates=int(spec.get("replicates", 300)),
            seed=seed, burn_in=config.burn_in,
        )
        out = _out(config, "diagnose_concentration.csv")
        report.write_csv(out)
        summary = _out(config, "diagnose_concentration_summary.csv")
        _write_dict_rows(
            [{"rate": report.rate, "bound_rate": report.bound_rate}],
            summary, ["rate", "bound_rate"],
        )
        return [out, summary]

    if check == "rsc":
        theta = _diag_theta(config)
        n = int(spec.get("n", 2000))
        path = simulate(theta, config.link, n, burn_in=config.burn_in, seed=seed)
        value = rsc_probe(
            theta, config.link, path,
            s=int(spec.get("s", max(1, config.s_values[0] if config.s_values else 1))),
            n_directions=int(spec.get("directions", 64)),
            seed=seed,
        )
        out = _out(config, "diagnose_rsc.csv")
        _write_dict_rows([{"curvature": value}], out, ["curvature"])
        return [out]

    raise ConfigError(f"key 'diagnose.check': unknown check {check!r}")


_RUNNERS = {
    "error_vs_n": run_error_vs_n,
    "error_vs_sparsity": run_error_vs_sparsity,
    "grid": run_grid,
    "support_recovery": run_support_recovery,
    "diagnose": run_diagnose,
}


def run_experiment(config: ExperimentConfig):
    """Dispatch on config.experiment; returns the list of files written."""
    return _RUNNERS[config.experiment](config)
