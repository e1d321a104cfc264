"""Command-line entry point: estimation, posteriors, sampling and risk analysis."""
import argparse
import asyncio
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from boundbayes.config import settings
from boundbayes.esn import LocScaleESN
from boundbayes.exceptions import BoundBayesError
from boundbayes.normal_model import FLAT, NormalConfig
from boundbayes.poisson_model import PoissonPrior
from boundbayes.tools.estimation import estimation_tools
from boundbayes.tools.risk import risk_tools

logger = logging.getLogger("boundbayes")

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2

# pydantic error locations -> command-line options
_OPTION_NAMES = {
    "sigma2": "--sigma2",
    "prior": "--tau2",
    "prior.mu": "--mu",
    "prior.tau2": "--tau2",
    "alpha.mu": "--alpha-mu",
    "alpha.sigma2": "--alpha-sigma2",
    "a": "--a",
    "b": "--b",
    "c": "--c",
    "c_alpha": "--c",
    "d": "--d",
    "psi1": "--psi1",
    "psi2": "--psi2",
    "standard": "--psi1",
    "standard.psi1": "--psi1",
    "standard.psi2": "--psi2",
    "location": "--location",
    "scale": "--scale",
}


class UsageError(Exception):
    """A command-line value failed validation; ``option`` names the flag."""

    def __init__(self, option: str, message: str):
        super().__init__(f"{option}: {message}")
        self.option = option


def _option_for(loc: Sequence[Any]) -> str:
    parts = [str(part) for part in loc]
    for end in range(len(parts), 0, -1):
        key = ".".join(parts[:end])
        if key in _OPTION_NAMES:
            return _OPTION_NAMES[key]
    return "--" + "-".join(parts).replace("_", "-") if parts else "--config"


def _usage_from_validation(e: ValidationError) -> UsageError:
    first = e.errors()[0]
    return UsageError(_option_for(first["loc"]), first["msg"])


def _finite_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def _float_list(text: str) -> List[float]:
    return [_finite_float(v) for v in text.split(",") if v.strip()]


def _reject_constant(name: str) -> float:
    raise ValueError(f"non-finite number {name} is not allowed")


def _load_config(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle, parse_constant=_reject_constant)
    except (OSError, ValueError) as e:
        raise UsageError("--config", f"cannot read {path}: {e}") from None
    if not isinstance(data, dict):
        raise UsageError("--config", "the configuration must be a JSON object")
    return data


def _normal_config(args: argparse.Namespace) -> NormalConfig:
    data = _load_config(args.config)
    prior = dict(data.get("prior", {}))
    alpha = dict(data.get("alpha", {}))
    if args.sigma2 is not None:
        data["sigma2"] = args.sigma2
    if args.mu is not None:
        prior["mu"] = args.mu
    if args.flat_prior:
        prior["tau2"] = FLAT
    elif args.tau2 is not None:
        prior["tau2"] = args.tau2
    if args.alpha_mu is not None:
        alpha["mu"] = args.alpha_mu
    if args.alpha_sigma2 is not None:
        alpha["sigma2"] = args.alpha_sigma2
    data["prior"], data["alpha"] = prior, alpha
    try:
        return NormalConfig.model_validate(data)
    except ValidationError as e:
        raise _usage_from_validation(e) from None


def _poisson_prior(args: argparse.Namespace) -> PoissonPrior:
    data = _load_config(args.config)
    for key in ("a", "b", "c", "d"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    try:
        return PoissonPrior.model_validate(data)
    except ValidationError as e:
        raise _usage_from_validation(e) from None


def _count(args: argparse.Namespace) -> int:
    if args.x is None or args.x < 0 or args.x != int(args.x):
        raise UsageError("--x", "the Poisson observation must be a nonnegative integer")
    return int(args.x)


def _check_esn(args: argparse.Namespace) -> None:
    try:
        LocScaleESN.model_validate(
            {"standard": {"psi1": args.psi1, "psi2": args.psi2}, "location": args.location, "scale": args.scale}
        )
    except ValidationError as e:
        raise _usage_from_validation(e) from None


def _require_seed(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise UsageError("--seed", "this command is stochastic and needs an explicit seed")
    return args.seed


def _add_normal_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_argument_group("normal model")
    group.add_argument("--sigma2", type=_finite_float, help="sampling variance of X")
    group.add_argument("--mu", type=_finite_float, help="prior mean of theta")
    group.add_argument("--tau2", type=_finite_float, help="prior variance of theta")
    group.add_argument("--flat-prior", action="store_true", help="flat prior on theta (default)")
    group.add_argument("--alpha-mu", type=_finite_float, help="prior mean of the bound")
    group.add_argument("--alpha-sigma2", type=_finite_float, help="prior variance of the bound (0 fixes it)")


def _add_poisson_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_argument_group("Poisson model")
    group.add_argument("--a", type=_finite_float, help="theta prior shape")
    group.add_argument("--b", type=_finite_float, help="theta prior rate offset (> -1)")
    group.add_argument("--c", type=_finite_float, help="bound prior shape")
    group.add_argument("--d", type=_finite_float, help="bound prior rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boundbayes",
        description="Hierarchical Bayes estimation of a parameter bounded below by an uncertain bound.",
    )
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help=f"log level (default {settings.LOG_LEVEL})",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("estimate-normal", help="Bayes estimates of theta and alpha, normal model")
    p.add_argument("--x", type=_finite_float, required=True, help="observed value")
    p.add_argument("--level", type=_finite_float, help="also report an equal-tailed credible interval")
    p.add_argument("--config", help="NormalConfig JSON file")
    _add_normal_flags(p)

    p = sub.add_parser("estimate-poisson", help="posterior means of theta and alpha, Poisson model")
    p.add_argument("--x", type=_finite_float, required=True, help="observed count")
    p.add_argument("--method", choices=["auto", "mixture", "quadrature"], default="auto")
    p.add_argument("--config", help="PoissonPrior JSON file")
    _add_poisson_flags(p)

    p = sub.add_parser("posterior", help="posterior family, moments and density values")
    p.add_argument("--model", choices=["normal", "poisson"], required=True)
    p.add_argument("--parameter", choices=["theta", "alpha"], default="theta")
    p.add_argument("--x", type=_finite_float, required=True)
    p.add_argument("--points", type=_float_list, default=[], help="comma-separated evaluation points")
    p.add_argument("--level", type=_finite_float, default=0.95)
    p.add_argument("--crosscheck", action="store_true", help="add a brute-force quadrature mean")
    p.add_argument("--config", help="NormalConfig or PoissonPrior JSON file")
    _add_normal_flags(p)
    _add_poisson_flags(p)

    p = sub.add_parser("sample", help="draws from an extended skew-normal or the theta posterior (CSV)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--psi1", type=_finite_float)
    p.add_argument("--psi2", type=_finite_float)
    p.add_argument("--location", type=_finite_float, default=0.0)
    p.add_argument("--scale", type=_finite_float, default=1.0)
    p.add_argument("--x", type=_finite_float, help="sample the normal theta posterior at this observation")
    p.add_argument("--config", help="NormalConfig JSON file")
    _add_normal_flags(p)

    p = sub.add_parser("risk-curve", help="squared-error risk curves (CSV)")
    p.add_argument("--estimators", default=",".join(settings.CURVE_ESTIMATORS))
    p.add_argument("--from", dest="theta_min", type=_finite_float, default=settings.CURVE_THETA_MIN)
    p.add_argument("--to", dest="theta_max", type=_finite_float, default=settings.CURVE_THETA_MAX)
    p.add_argument("--step", type=_finite_float, default=settings.CURVE_THETA_STEP)
    p.add_argument("--method", choices=["quadrature", "monte_carlo"], default="quadrature")
    p.add_argument("--n", type=int, default=100_000, help="Monte Carlo draws per grid point")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="NormalConfig JSON file (for the 'bayes' estimator)")
    _add_normal_flags(p)

    p = sub.add_parser("dominance", help="cutoff theta0(c) below which delta_c loses to X")
    p.add_argument("--c", type=_finite_float, required=True)

    p = sub.add_parser("minimax-check", help="verify risk(delta_c) <= sigma2 on [0, theta_max]")
    p.add_argument("--c", type=_finite_float, required=True)
    p.add_argument("--theta-max", type=_finite_float, default=10.0)
    p.add_argument("--step", type=_finite_float, default=0.05)
    p.add_argument("--sigma2", type=_finite_float, default=1.0)
    return parser


async def _dispatch(args: argparse.Namespace) -> Dict[str, Any]:
    asyncio.get_running_loop().set_default_executor(ThreadPoolExecutor(max_workers=settings.MAX_WORKERS))
    command = args.command
    logger.debug("dispatching %s", command)

    if command == "estimate-normal":
        return await estimation_tools.estimate_normal(_normal_config(args), args.x, args.level)

    elif command == "estimate-poisson":
        return await estimation_tools.estimate_poisson(_poisson_prior(args), _count(args), args.method)

    elif command == "posterior":
        if args.model == "normal":
            return await estimation_tools.posterior(
                "normal", args.parameter, args.x, config=_normal_config(args),
                points=args.points, level=args.level, crosscheck=args.crosscheck,
            )
        return await estimation_tools.posterior(
            "poisson", args.parameter, _count(args), prior=_poisson_prior(args),
            points=args.points, crosscheck=args.crosscheck,
        )

    elif command == "sample":
        seed = _require_seed(args)
        if args.x is not None:
            return await estimation_tools.sample(args.n, seed, config=_normal_config(args), x=args.x)
        if args.psi1 is None or args.psi2 is None:
            raise UsageError("--psi1", "give --psi1 and --psi2, or --x with the normal model flags")
        _check_esn(args)
        return await estimation_tools.sample(
            args.n, seed, psi1=args.psi1, psi2=args.psi2, location=args.location, scale=args.scale
        )

    elif command == "risk-curve":
        ids = [i.strip() for i in args.estimators.split(",") if i.strip()]
        seed = _require_seed(args) if args.method == "monte_carlo" else None
        config = _normal_config(args) if "bayes" in ids else None
        sigma2 = config.sigma2 if config is not None else (1.0 if args.sigma2 is None else args.sigma2)
        return await risk_tools.risk_curve(
            ids, sigma2, args.theta_min, args.theta_max, args.step,
            method=args.method, n=args.n if args.method == "monte_carlo" else None, seed=seed, config=config,
        )

    elif command == "dominance":
        return await risk_tools.dominance(args.c)

    elif command == "minimax-check":
        return await risk_tools.minimax_check(args.c, args.theta_max, args.step, args.sigma2)

    raise UsageError(command, "unknown command")


def _write(command: str, result: Dict[str, Any]) -> None:
    if command == "risk-curve":
        sys.stdout.write(result["csv"])
    elif command == "sample":
        lines = ["index,value"] + [f"{i},{v:.{settings.CSV_DIGITS}g}" for i, v in enumerate(result["values"])]
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        sys.stdout.write(json.dumps(result, indent=2) + "\n")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run one command and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    logging.basicConfig(
        stream=sys.stderr,
        level=(args.log_level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    try:
        result = asyncio.run(_dispatch(args))
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BoundBayesError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if "error" in result:
        print(f"error: {result['error']}", file=sys.stderr)
        return EXIT_USAGE
    _write(args.command, result)
    if args.command == "minimax-check" and not result["dominates_on_nonneg"]:
        return EXIT_VIOLATION
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
