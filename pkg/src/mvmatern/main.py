"""
Command-line entry point: ``python -m src.mvmatern.main <command> [flags]``.

Package errors print one line ``ERROR <code>: <message>`` on stderr and exit
with status 2; anything else exits 1 with code E_INTERNAL.
"""
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from src.mvmatern.cli import commands
from src.mvmatern.config import settings
from src.mvmatern.errors import MaternError
from src.mvmatern.logging_setup import configure_logging
from src.mvmatern.models.fit_dto import MODEL_PRESETS

logger = logging.getLogger(__name__)


def _add_fit_flags(parser: argparse.ArgumentParser, default_preset: str = "SMM-C") -> None:
    parser.add_argument("--preset", default=default_preset, choices=sorted(MODEL_PRESETS),
                        help="Model preset: variant plus which parameters are free.")
    parser.add_argument("--backend", default="fft", choices=["auto", "closed", "fft"])
    parser.add_argument("--starts", type=int, default=None, help="Number of optimizer starts.")
    parser.add_argument("--seed", type=int, default=0, help="Seed for start perturbations and folds.")
    parser.add_argument("--mean", default="empirical", choices=["empirical", "zero"], help="Mean handling.")
    parser.add_argument("--nugget", action="store_true", help="Estimate a nugget per variable.")


def _model_data(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, help="Model file (key = value).")
    parser.add_argument("--data", required=True, help="Dataset CSV with columns x1[,x2],var,value.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvmatern",
                                     description="Multivariate Matérn fields from complex spectral measures.")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (overrides MVMATERN_THREADS).")
    parser.add_argument("--log-level", default=None, help="Logging level (default MVMATERN_LOG_LEVEL).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("covgrid", help="Cross-covariances of a model on a lag grid.")
    p.add_argument("--model", required=True)
    p.add_argument("--lags", required=True, help="start:stop:num or v1,v2,... (both axes when d=2).")
    p.add_argument("--backend", default="auto", choices=["auto", "closed", "fft"])
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.covgrid)

    p = sub.add_parser("simulate", help="Gaussian realizations at a point set.")
    p.add_argument("--model", required=True)
    p.add_argument("--points", required=True, help="CSV with columns x1[,x2].")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", default="exact", choices=["exact", "spectral"])
    p.add_argument("--frequencies", type=int, default=None, help="Frequencies for the spectral method.")
    p.add_argument("--no-nugget", action="store_true", help="Simulate the latent field without measurement error.")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.simulate_cmd)

    p = sub.add_parser("fit", help="Maximum-likelihood fit.")
    _model_data(p)
    _add_fit_flags(p)
    p.add_argument("--out", required=True, help="Key = value summary of the fit.")
    p.add_argument("--out-model", default=None, help="Write the estimates as a model file.")
    p.add_argument("--row-out", default=None, help="Also write the summary as a one-row CSV.")
    p.set_defaults(handler=commands.fit_cmd)

    p = sub.add_parser("test-imag", help="Likelihood-ratio test of Im(sigma_12) = 0.")
    _model_data(p)
    _add_fit_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--row-out", default=None, help="Also write the summary as a one-row CSV.")
    p.set_defaults(handler=commands.test_imag)

    p = sub.add_parser("predict", help="Cokriging at new locations.")
    _model_data(p)
    p.add_argument("--points", required=True)
    p.add_argument("--var", type=int, required=True, help="Target variable (1-based).")
    p.add_argument("--mode", default="both", choices=["both", "univariate", "other"])
    p.add_argument("--mean", default="empirical", choices=["empirical", "zero"])
    p.add_argument("--include-nugget", action="store_true", help="Predict the noisy observation, not the latent field.")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.predict_cmd)

    p = sub.add_parser("cv", help="5-fold and leave-one-out cokriging RMSE table.")
    _model_data(p)
    _add_fit_flags(p)
    p.add_argument("--refit", action="store_true", help="Refit the preset on every training set.")
    p.add_argument("--include-nugget", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.cv)

    p = sub.add_parser("benchmark", help="Speed/accuracy of the exponential covariance routes.")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=commands.benchmark)

    p = sub.add_parser("validate", help="Oracle suite with a pass/fail table.")
    p.add_argument("--out", default=None)
    p.add_argument("--check", action="append", default=None, help="Run only this check (repeatable).")
    p.set_defaults(handler=commands.validate)

    p = sub.add_parser("sim-study", help="Monte-Carlo test, estimation and prediction designs.")
    p.add_argument("--design", required=True, choices=["lrt-d1", "est-d1", "pred-d1", "lrt-d2"])
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--n", type=int, default=300, help="Training points per replicate.")
    p.add_argument("--n-test", type=int, default=100, help="Held-out points (pred-d1).")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", default="real", choices=["real", "imag", "complex"])
    p.add_argument("--axis", default="e1", choices=["e1", "diag"], help="theta* of the d=2 truth.")
    p.add_argument("--estimate-axes", action="store_true", help="Estimate theta* in the d=2 design.")
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None, help="Summary path (default <out>.summary.txt).")
    p.set_defaults(handler=commands.sim_study)
    return parser


def _one_line(exc: Exception) -> str:
    return " ".join(str(exc).split())


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.threads is not None:
        if args.threads < 1:
            print("ERROR E_CONFIG: --threads must be >= 1", file=sys.stderr)
            return 2
        settings.THREADS = args.threads
    try:
        return args.handler(args)
    except MaternError as exc:
        print(f"ERROR {exc.code}: {_one_line(exc)}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"ERROR E_CONFIG: {_one_line(exc)}", file=sys.stderr)
        return 2
    except Exception as exc:
        logger.exception("unexpected failure in %s", args.command)
        print(f"ERROR E_INTERNAL: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
