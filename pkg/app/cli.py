"""
Command-line entry point.

Example usage:
    python -m app.cli ingest data/sample_corpus --out runs/demo
    python -m app.cli profile --out runs/demo --tau 0.7 --augmented
    python -m app.cli spectral --out runs/demo --k-max 3 --bootstrap-poets all
    python -m app.cli sample --out runs/demo --sample-size 20
    python -m app.cli validate --out runs/demo --sheet data/validation_sheet.csv
    python -m app.cli report --out runs/demo --svg
    python -m app.cli annotate-mock verses.txt --poet HAFEZ \
        --fixture tests/fixtures/mock_responses.jsonl

Exit codes: 0 success, 1 usage, 2 data validation, 3 internal.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path
from typing import Any, Callable, NoReturn, Sequence

from dotenv import load_dotenv

from annotation.backends import BACKEND_REGISTRY
from app import stages
from app.config import CONFIG_FILE, RunConfig, default_out_dir
from app.logs import setup_logging
from corpus.errors import DataValidationError, UsageError

load_dotenv()

logger = logging.getLogger("eigenmood")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

_CONFIG_FIELDS = {f.name for f in fields(RunConfig)}


class EigenmoodArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _common_flags() -> argparse.ArgumentParser:
    # no defaults: only flags given on the command line override the config
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--out", dest="out_dir", help="Run directory (default: runs/latest).")
    p.add_argument("--config", type=Path, help="Replay a run from its run_config.yaml.")
    p.add_argument("--log-level", help="DEBUG, INFO, WARNING (env EIGENMOOD_LOG_LEVEL).")
    p.add_argument("--workers", type=int, help="Thread pool size for parallel stages.")
    p.add_argument("--seed", type=int, help="Seed for bootstrap and sampling.")
    p.add_argument("--tau", type=float, help="Keep label instances with confidence >= tau.")
    p.add_argument("--weight", choices=["confidence", "uniform"], help="Label weighting.")
    return p


def build_parser() -> EigenmoodArgumentParser:
    parser = EigenmoodArgumentParser(
        prog="eigenmood",
        description="Uncertainty-aware poet profiles from verse-level concept annotations.",
    )
    sub = parser.add_subparsers(
        dest="cmd", required=True, parser_class=EigenmoodArgumentParser
    )
    common = _common_flags()

    p = sub.add_parser("ingest", parents=[common], help="Load and validate annotation files")
    p.add_argument("inputs", nargs="*", help="<POET>_labels.jsonl files or directories")
    p.add_argument("--strict", dest="strict", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--lenient", dest="strict", action="store_false", default=argparse.SUPPRESS)
    p.add_argument("--dedup", action="store_true", default=argparse.SUPPRESS)
    p.add_argument(
        "--strip-diacritics",
        dest="strip_diacritics_for_dedup",
        action="store_true",
        default=argparse.SUPPRESS,
        help="Ignore combining marks when comparing verses for dedup.",
    )
    p.set_defaults(func=lambda cfg, args: stages.cmd_ingest(cfg))

    p = sub.add_parser("profile", parents=[common], help="Poet distributions and divergence")
    p.add_argument("--augmented", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--replicates", type=int, default=argparse.SUPPRESS)
    p.set_defaults(func=lambda cfg, args: stages.cmd_profile(cfg))

    p = sub.add_parser("spectral", parents=[common], help="Co-occurrence graph and embedding")
    p.add_argument("--laplacian", choices=["unnorm", "sym"], default=argparse.SUPPRESS)
    p.add_argument("--min-share", type=float, default=argparse.SUPPRESS)
    p.add_argument("--k-max", type=int, default=argparse.SUPPRESS)
    p.add_argument("--top-n", type=int, default=argparse.SUPPRESS)
    p.add_argument("--replicates", type=int, default=argparse.SUPPRESS)
    p.add_argument(
        "--bootstrap-poets",
        nargs="+",
        default=argparse.SUPPRESS,
        help="Poets to bootstrap ('all' for every poet).",
    )
    p.set_defaults(func=lambda cfg, args: stages.cmd_spectral(cfg))

    p = sub.add_parser("validate", parents=[common], help="Two-annotator validation metrics")
    p.add_argument("--sheet", default=argparse.SUPPRESS, help="Completed validation CSV.")
    p.add_argument("--min-prevalence", type=float, default=argparse.SUPPRESS)
    p.set_defaults(func=lambda cfg, args: stages.cmd_validate(cfg))

    p = sub.add_parser("report", parents=[common], help="Figure data series (and SVG)")
    p.add_argument("--svg", dest="render_svg", action="store_true", default=argparse.SUPPRESS)
    p.set_defaults(func=lambda cfg, args: stages.cmd_report(cfg))

    p = sub.add_parser("sample", parents=[common], help="Stratified validation sample")
    p.add_argument("--sample-size", type=int, default=argparse.SUPPRESS)
    p.set_defaults(func=lambda cfg, args: stages.cmd_sample(cfg))

    p = sub.add_parser("annotate-mock", parents=[common], help="Annotate with a mock backend")
    p.add_argument("inputs", nargs="*", help="Plain-text file, one verse per line")
    p.add_argument("--poet", default=None, help="Poet id (default: file stem)")
    p.add_argument("--fixture", default=None, help="Canned responses (JSON list or JSONL)")
    p.add_argument("--backend", choices=sorted(BACKEND_REGISTRY), default="scripted_mock")
    p.set_defaults(func=_annotate)

    return parser


def _annotate(cfg: RunConfig, args: argparse.Namespace) -> Path:
    poet = args.poet or (Path(cfg.inputs[0]).stem if cfg.inputs else "")
    return stages.cmd_annotate_mock(cfg, poet, fixture=args.fixture, backend_name=args.backend)


def build_config(args: argparse.Namespace) -> RunConfig:
    """
    Defaults < the run directory's saved config < --config file < explicit flags.

    Later stages therefore keep the ingest settings of the run they extend.
    """
    config_path = getattr(args, "config", None)
    if config_path is not None:
        base = RunConfig.load(config_path).to_dict()
    else:
        out_dir = getattr(args, "out_dir", None) or default_out_dir()
        saved = Path(out_dir) / CONFIG_FILE
        if saved.exists():
            base = {**RunConfig.load(saved).to_dict(), "out_dir": out_dir}
        else:
            base = RunConfig(out_dir=out_dir).to_dict()
    overrides: dict[str, Any] = {
        k: v for k, v in vars(args).items() if k in _CONFIG_FIELDS and v is not None
    }
    if not overrides.get("inputs"):
        overrides.pop("inputs", None)
    return RunConfig.from_dict({**base, **overrides})


def main(argv: Sequence[str] | None = None) -> int:
    setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "log_level", None):
            setup_logging(args.log_level)
        cfg = build_config(args)
        cfg.save()
        func: Callable[[RunConfig, argparse.Namespace], object] = args.func
        func(cfg, args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        logger.error("usage: %s", exc)
        return EXIT_USAGE
    except (DataValidationError, OSError) as exc:
        logger.error("data: %s", exc)
        return EXIT_DATA
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
