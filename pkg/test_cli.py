"""Tests for the command line and the async tool layer behind it."""
import asyncio
import csv
import io
import json
import math

import pytest

from boundbayes import normal_model
from boundbayes.config import settings
from boundbayes.main import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, run
from boundbayes.normal_model import BoundPrior, NormalConfig
from boundbayes.tools.estimation import estimation_tools
from boundbayes.tools.risk import risk_tools

SUBCOMMANDS = [
    "estimate-normal",
    "estimate-poisson",
    "posterior",
    "sample",
    "risk-curve",
    "dominance",
    "minimax-check",
]


def _json(capsys, argv):
    code = run(argv)
    captured = capsys.readouterr()
    assert code == EXIT_OK, captured.err
    return json.loads(captured.out)


def _fails(capsys, argv, option):
    code = run(argv)
    captured = capsys.readouterr()
    assert code == EXIT_USAGE
    assert option in captured.err
    assert captured.out == ""


def test_estimate_normal_katz_example(capsys):
    result = _json(capsys, ["estimate-normal", "--x", "1.0", "--sigma2", "1", "--flat-prior", "--alpha-sigma2", "0"])
    assert result["estimate"] == pytest.approx(1.2876, abs=1e-4)
    assert result["alpha_estimate"] == 0.0
    assert result["delta_c"] == 1.0


def test_estimate_normal_with_interval(capsys):
    argv = ["estimate-normal", "--x", "2", "--sigma2", "1", "--tau2", "1", "--alpha-sigma2", "1", "--level", "0.9"]
    result = _json(capsys, argv)
    cfg = NormalConfig(sigma2=1.0, prior={"tau2": 1.0}, alpha=BoundPrior(sigma2=1.0))
    assert result["estimate"] == normal_model.theta_bayes_estimate(cfg, 2.0)
    assert result["mu_hat"] == 1.0
    lo, hi = result["credible_interval"]
    assert lo < result["estimate"] < hi
    assert "delta_c" not in result


def test_estimate_normal_reads_config_and_flags_override(capsys, tmp_path):
    path = tmp_path / "normal.json"
    path.write_text(json.dumps({"sigma2": 4, "prior": {"mu": 0, "tau2": "flat"}, "alpha": {"mu": 0, "sigma2": 5}}))
    result = _json(capsys, ["estimate-normal", "--x", "1", "--config", str(path)])
    assert result["delta_c"] == pytest.approx(2.0 / 3.0)
    result = _json(capsys, ["estimate-normal", "--x", "1", "--config", str(path), "--alpha-sigma2", "0"])
    assert result["delta_c"] == 1.0


def test_estimate_poisson_flat_bound(capsys):
    result = _json(capsys, ["estimate-poisson", "--x", "3", "--a", "1", "--b", "0", "--c", "1", "--d", "0"])
    assert result["alpha_estimate"] == pytest.approx(2.5, rel=1e-15)
    assert result["theta_estimate"] == pytest.approx(5.0, rel=1e-15)


def test_estimate_poisson_config_uses_c_key(capsys, tmp_path):
    path = tmp_path / "poisson.json"
    path.write_text(json.dumps({"a": 2, "b": 0, "c": 2, "d": 1}))
    mixture = _json(capsys, ["estimate-poisson", "--x", "3", "--config", str(path)])
    numeric = _json(capsys, ["estimate-poisson", "--x", "3", "--config", str(path), "--method", "quadrature"])
    assert mixture["alpha_estimate"] == pytest.approx(numeric["alpha_estimate"], abs=1e-8)


def test_posterior_normal_alpha(capsys):
    argv = [
        "posterior", "--model", "normal", "--parameter", "alpha", "--x", "2",
        "--sigma2", "1", "--tau2", "1", "--alpha-sigma2", "1", "--points=-1,0,0.5",
    ]
    result = _json(capsys, argv)
    assert result["family"] == "extended_skew_normal"
    assert result["params"]["orientation"] == -1
    assert result["params"]["psi1"] == pytest.approx(math.sqrt(2.0))
    assert len(result["density"]) == 3
    cfg = NormalConfig(sigma2=1.0, prior={"tau2": 1.0}, alpha=BoundPrior(sigma2=1.0))
    assert result["mean"] == pytest.approx(normal_model.alpha_bayes_estimate(cfg, 2.0), rel=1e-12)


def test_posterior_normal_fixed_bound(capsys):
    base = ["posterior", "--model", "normal", "--x", "-1", "--sigma2", "1", "--alpha-sigma2", "0"]
    theta = _json(capsys, base)
    assert theta["family"] == "truncated_normal"
    assert theta["mean"] == pytest.approx(0.5251, abs=1e-4)
    alpha = _json(capsys, base + ["--parameter", "alpha"])
    assert alpha == {"family": "point_mass", "mean": 0.0, "var": 0.0}


def test_posterior_poisson_alpha_mixture(capsys):
    argv = ["posterior", "--model", "poisson", "--parameter", "alpha", "--x", "3", "--a", "2", "--c", "2", "--d", "1"]
    result = _json(capsys, argv)
    assert result["family"] == "gamma_mixture"
    assert len(result["mixture"]["weights"]) == 5
    assert sum(result["mixture"]["weights"]) == pytest.approx(1.0, abs=1e-12)


def test_sample_csv_is_deterministic(capsys):
    argv = ["sample", "--psi1", "0", "--psi2", "2", "--n", "50", "--seed", "7"]
    assert run(argv) == EXIT_OK
    first = capsys.readouterr().out
    assert run(argv) == EXIT_OK
    assert capsys.readouterr().out == first
    rows = list(csv.reader(io.StringIO(first)))
    assert rows[0] == ["index", "value"]
    assert len(rows) == 51
    assert all(math.isfinite(float(value)) for _, value in rows[1:])


def test_sample_theta_posterior(capsys):
    argv = ["sample", "--x", "1", "--sigma2", "1", "--alpha-sigma2", "1", "--n", "10", "--seed", "3"]
    assert run(argv) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 11


def test_risk_curve_csv(capsys):
    argv = ["risk-curve", "--estimators", "delta_c:0.5,mle+", "--from", "-1", "--to", "1", "--step", "0.5"]
    assert run(argv) == EXIT_OK
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "estimator,theta,risk,method,std_err"
    assert len(lines) == 1 + 2 * 5
    assert lines[1].startswith("delta_c:0.5,-1,")
    assert lines[-1].startswith("mle+,1,")


def test_risk_curve_monte_carlo_needs_seed(capsys):
    argv = ["risk-curve", "--estimators", "katz", "--from", "0", "--to", "0.1", "--step", "0.1", "--method", "monte_carlo"]
    _fails(capsys, argv, "--seed")
    assert run(argv + ["--seed", "5", "--n", "2000"]) == EXIT_OK
    first = capsys.readouterr().out
    assert run(argv + ["--seed", "5", "--n", "2000"]) == EXIT_OK
    assert capsys.readouterr().out == first


def test_dominance(capsys):
    result = _json(capsys, ["dominance", "--c", "0.5"])
    assert -0.944 <= result["theta0"] <= -0.934


def test_minimax_check_passes(capsys):
    result = _json(capsys, ["minimax-check", "--c", "0.75"])
    assert result["dominates_on_nonneg"] is True
    assert result["sup_risk_on_nonneg"] <= 1.0 + 1e-6


def test_minimax_check_violation_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(settings, "MINIMAX_TOL", -0.5)
    code = run(["minimax-check", "--c", "0.5"])
    captured = capsys.readouterr()
    assert code == EXIT_VIOLATION
    assert json.loads(captured.out)["dominates_on_nonneg"] is False


def test_minimax_check_unsettled_tail_is_not_a_violation(capsys):
    for argv in (["minimax-check", "--c", "0.25"], ["minimax-check", "--c", "0.5", "--sigma2", "4"]):
        result = _json(capsys, argv)
        assert result["dominates_on_nonneg"] is True
        assert "tail_settled" in result


@pytest.mark.parametrize(
    "argv,option",
    [
        (["estimate-normal", "--x", "nan", "--sigma2", "1"], "--x"),
        (["estimate-normal", "--x", "1", "--sigma2", "inf"], "--sigma2"),
        (["risk-curve", "--estimators", "katz", "--to", "inf"], "--to"),
        (["risk-curve", "--estimators", "katz", "--from", "nan"], "--from"),
        (["posterior", "--model", "normal", "--x", "1", "--sigma2", "1", "--points=0,nan"], "--points"),
        (["minimax-check", "--c", "0.5", "--theta-max=-inf"], "--theta-max"),
    ],
)
def test_non_finite_numbers_are_usage_errors(capsys, argv, option):
    _fails(capsys, argv, option)


def test_non_finite_config_values_are_rejected(capsys, tmp_path):
    path = tmp_path / "normal.json"
    path.write_text('{"sigma2": NaN, "alpha": {"sigma2": 1}}')
    _fails(capsys, ["estimate-normal", "--x", "1", "--config", str(path)], "--config")


@pytest.mark.parametrize(
    "argv,option",
    [
        (["estimate-normal", "--x", "1", "--sigma2", "-1"], "--sigma2"),
        (["estimate-normal", "--x", "1", "--sigma2", "1", "--alpha-sigma2", "-1"], "--alpha-sigma2"),
        (["estimate-normal", "--x", "1", "--sigma2", "1", "--tau2", "0"], "--tau2"),
        (["estimate-poisson", "--x", "3", "--a", "1", "--b", "-2", "--c", "1"], "--b"),
        (["estimate-poisson", "--x", "3", "--a", "1", "--c", "0"], "--c"),
        (["estimate-poisson", "--x", "2.5", "--a", "1", "--c", "1"], "--x"),
        (["sample", "--psi1", "0", "--psi2", "1", "--n", "5"], "--seed"),
        (["sample", "--psi1", "0", "--psi2", "-1", "--n", "5", "--seed", "1"], "--psi2"),
        (["estimate-normal", "--x", "1", "--config", "/nonexistent/boundbayes.json"], "--config"),
    ],
)
def test_usage_errors_name_the_option(capsys, argv, option):
    _fails(capsys, argv, option)


@pytest.mark.parametrize(
    "argv",
    [
        ["risk-curve", "--estimators", "median"],
        ["risk-curve", "--step", "0"],
        ["dominance", "--c", "0"],
        ["minimax-check", "--c", "0.5", "--theta-max", "5"],
        ["sample", "--psi1", "-10", "--psi2", "0", "--n", "5", "--seed", "1"],
    ],
)
def test_domain_errors_exit_2(capsys, argv):
    assert run(argv) == EXIT_USAGE
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "error" in captured.err


def test_unknown_subcommand_and_missing_option(capsys):
    assert run(["fit"]) == EXIT_USAGE
    assert run(["dominance"]) == EXIT_USAGE
    capsys.readouterr()


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_help_exits_zero(capsys, command):
    assert run([command, "--help"]) == EXIT_OK
    assert "usage" in capsys.readouterr().out


def test_logs_stay_off_stdout(capsys):
    result = _json(capsys, ["--log-level", "debug", "dominance", "--c", "1"])
    assert abs(result["theta0"]) <= 1e-4


def test_tools_report_errors_as_dicts():
    async def scenario():
        cfg = NormalConfig(sigma2=1.0, alpha=BoundPrior(sigma2=0.0))
        estimate = await estimation_tools.estimate_normal(cfg, 0.0)
        bad_sample = await estimation_tools.sample(0, seed=1, psi1=0.0, psi2=1.0)
        bad_cutoff = await risk_tools.dominance(0.0)
        curve = await risk_tools.risk_curve(["unbiased", "katz"], theta_min=0.0, theta_max=1.0, step=0.5)
        return estimate, bad_sample, bad_cutoff, curve

    estimate, bad_sample, bad_cutoff, curve = asyncio.run(scenario())
    assert estimate["estimate"] == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-14)
    assert "error" in bad_sample
    assert "error" in bad_cutoff
    assert curve["estimators"] == ["unbiased", "katz"]
    assert curve["points"] == 3
