"""End-to-end runs of the command-line interface."""

import numpy as np
from mbp.cli import EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main
from mbp.simulate import read_path
from mbp.tensor import read_tensor


def test_simulate_writes_path_and_theta(tmp_path):
    out = tmp_path / "path.txt"
    theta_out = tmp_path / "theta.txt"
    code = main(
        [
            "simulate", "--random", "3,2,4", "--n", "120", "--seed", "9",
            "--out", str(out), "--theta-out", str(theta_out),
        ]
    )
    assert code == EXIT_OK
    path = read_path(out)
    assert (path.n, path.n_dims, path.n_lags) == (120, 3, 2)
    theta = read_tensor(theta_out)
    assert int((theta.values != 0).sum()) == 4


def test_simulate_from_tensor_file(tmp_path):
    theta_out = tmp_path / "theta.txt"
    main(
        ["simulate", "--random", "2,1,2", "--n", "50", "--seed", "3",
         "--out", str(tmp_path / "a.txt"), "--theta-out", str(theta_out)]
    )
    code = main(
        ["simulate", "--theta", str(theta_out), "--n", "50", "--seed", "3",
         "--out", str(tmp_path / "b.txt")]
    )
    assert code == EXIT_OK
    a = read_path(tmp_path / "a.txt")
    b = read_path(tmp_path / "b.txt")
    assert np.array_equal(a.data, b.data)


def test_fit_converged_exit_code(tmp_path):
    data = tmp_path / "path.txt"
    out = tmp_path / "fit.txt"
    main(["simulate", "--random", "2,1,3", "--n", "400", "--seed", "2", "--out", str(data)])
    code = main(["fit", "--data", str(data), "--lambda", "0.05", "--out", str(out)])
    assert code == EXIT_OK
    assert read_tensor(out).values.shape == (2, 2, 1)


def test_fit_max_iters_exit_code(tmp_path):
    data = tmp_path / "path.txt"
    main(["simulate", "--random", "2,1,3", "--n", "400", "--seed", "2", "--out", str(data)])
    code = main(
        ["fit", "--data", str(data), "--lambda", "0.001", "--out",
         str(tmp_path / "f.txt"), "--max-iters", "2", "--tol", "1e-14"]
    )
    assert code == EXIT_NOT_CONVERGED


def test_fit_lambda_policy_flag(tmp_path):
    data = tmp_path / "path.txt"
    main(["simulate", "--random", "2,1,2", "--n", "300", "--seed", "4", "--out", str(data)])
    code = main(
        ["fit", "--data", str(data), "--lambda-policy", "simulation,0.25",
         "--out", str(tmp_path / "f.txt")]
    )
    assert code == EXIT_OK


def test_diagnose_direct_flags(tmp_path):
    out_dir = tmp_path / "diag"
    code = main(
        ["diagnose", "--check", "gf-bound", "--n-dims", "1", "--n-lags", "2",
         "--samples", "4", "--out", str(out_dir)]
    )
    assert code == EXIT_OK
    assert (out_dir / "diagnose_gf_bound.csv").exists()


def test_experiment_config_file(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "experiment = error_vs_n\nN = 3\np = 1\nsweep.s_values = 2\n"
        f"sweep.n_values = 80,160\nreplicates = 2\noutput_dir = {tmp_path / 'out'}\n"
        "master_seed = 1\nfit.tol = 1e-6\n"
    )
    code = main(["experiment", "--config", str(cfg)])
    assert code == EXIT_OK
    assert (tmp_path / "out" / "error_vs_n_runs.csv").exists()
    assert (tmp_path / "out" / "error_vs_n_summary.csv").exists()


def test_bad_config_reports_error(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("experiment = bogus\nN = 2\np = 1\n")
    assert main(["experiment", "--config", str(cfg)]) == EXIT_ERROR


def test_diagnose_without_check_or_config():
    assert main(["diagnose"]) == EXIT_ERROR


def test_bad_random_spec(tmp_path):
    code = main(
        ["simulate", "--random", "3,2", "--n", "10", "--out", str(tmp_path / "x.txt")]
    )
    assert code == EXIT_ERROR
