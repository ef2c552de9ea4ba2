import argparse
import logging
import os
import sys

from siegelzak.config import settings
from siegelzak.core.errors import EXIT_FAIL, EXIT_PASS
from siegelzak.core.output import write_json_atomic
from siegelzak.models.experiment import ExperimentConfig, load_config
from siegelzak.services.experiments import run_experiment

logger = logging.getLogger("cli")


def report_path(cfg: ExperimentConfig, override: str = None) -> str:
    if override:
        return override
    if cfg.output.report:
        return cfg.output.report
    return os.path.join(settings.setup_output_dir(), f"{cfg.experiment.value}.json")


def run(args: argparse.Namespace) -> int:
    """Run one experiment config and write its JSON report."""
    cfg = load_config(args.config)
    report = run_experiment(cfg, args.workers)
    path = write_json_atomic(report_path(cfg, args.output), report)
    status = "PASS" if report["pass"] else "FAIL"
    print(f"{status} {cfg.experiment.value} -> {path}", file=sys.stdout)
    return EXIT_PASS if report["pass"] else EXIT_FAIL


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Run the experiment described by a TOML config")
    parser.add_argument("config", help="Path to the experiment config (TOML)")
    parser.add_argument("--output", default=None, help="Report path (default: [output].report or OUTPUT_DIR)")
    parser.set_defaults(func=run)
