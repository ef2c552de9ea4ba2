import argparse
import sys

from siegelzak.core.errors import EXIT_PASS
from siegelzak.services.experiments import EXPERIMENTS


def list_experiments(args: argparse.Namespace) -> int:
    for name, fn in EXPERIMENTS.items():
        summary = (fn.__doc__ or "").strip().splitlines()
        line = f"{name:<28}{summary[0]}" if summary else name
        print(line.rstrip(), file=sys.stdout)
    return EXIT_PASS


def register(subparsers) -> None:
    parser = subparsers.add_parser("list-experiments", help="List the registered experiments")
    parser.set_defaults(func=list_experiments)
