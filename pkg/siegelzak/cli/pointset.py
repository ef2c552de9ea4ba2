import argparse
import logging
import os
import sys

from siegelzak.config import settings
from siegelzak.core.errors import EXIT_PASS
from siegelzak.core.output import write_csv_atomic
from siegelzak.models.experiment import load_config
from siegelzak.services.cps import pointset_to_csv
from siegelzak.services.experiments import build_pointset

logger = logging.getLogger("cli")


def emit_pointset(args: argparse.Namespace) -> int:
    """Write the configured point set as CSV."""
    cfg = load_config(args.config)
    ps = build_pointset(cfg)
    header, rows = pointset_to_csv(ps, internal=args.internal or cfg.output.include_internal)
    path = args.output or cfg.output.pointset
    if not path:
        path = os.path.join(settings.setup_output_dir(), f"{cfg.scheme.name}_points.csv")
    write_csv_atomic(path, header, rows)
    print(f"{len(rows)} points -> {path}", file=sys.stdout)
    return EXIT_PASS


def register(subparsers) -> None:
    parser = subparsers.add_parser("emit-pointset", help="Write the configured point set as CSV")
    parser.add_argument("config", help="Path to the experiment config (TOML)")
    parser.add_argument("--output", default=None, help="CSV path (default: [output].pointset or OUTPUT_DIR)")
    parser.add_argument("--internal", action="store_true", help="Append the internal coordinates y1..ym")
    parser.set_defaults(func=emit_pointset)
