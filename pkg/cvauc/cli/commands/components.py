import argparse
from pathlib import Path

from cvauc.cli.deps import load_study_cells
from cvauc.cli.error_handler import EXIT_OK, handle_errors
from cvauc.config import settings
from cvauc.exceptions import InvalidInputError
from cvauc.services import report_service, simulation
import logging

logger = logging.getLogger(__name__)

ROWS = (
    ("sigma2", None),
    ("omega", "se_omega"),
    ("gamma", "se_gamma"),
    ("predicted_bias", "se_gamma"),
    ("observed_bias", "se_observed_bias"),
    ("mean_naive_var", "se_mean_naive_var"),
    ("mc_var", "se_mc_var"),
    ("reconstructed_var", None),
)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("components", help="Estimate sigma2, omega, gamma of the CVK error rate")
    parser.add_argument("config", help="study config with a single cell")
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--out", default=None, help="output JSON path")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--progress", action="store_true", default=None)
    parser.set_defaults(handler=run)


@handle_errors
def run(args: argparse.Namespace) -> int:
    cells = load_study_cells(args.config, seed=args.seed)
    if len(cells) != 1:
        raise InvalidInputError("components takes a single study cell", {"cells": len(cells)})
    report = simulation.estimate_components(cells[0], workers=args.workers, progress=args.progress)
    out = Path(args.out) if args.out else Path(settings.output_dir) / "components.json"
    report_service.write_json(out, report)
    for name, se_name in ROWS:
        value = getattr(report, name)
        if se_name:
            print(f"{name:>18} {value: .6f} (MC SE {getattr(report, se_name):.6f})")
        else:
            print(f"{name:>18} {value: .6f}")
    return EXIT_OK
