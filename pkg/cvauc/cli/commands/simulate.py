import argparse
from pathlib import Path

from cvauc.cli.deps import load_study_cells
from cvauc.cli.error_handler import EXIT_OK, handle_errors
from cvauc.config import settings
from cvauc.services import report_service, simulation
import logging

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="Run a Monte-Carlo study from a JSON config")
    parser.add_argument("config", help="study config (one cell or {\"cells\": [...]})")
    parser.add_argument("--seed", type=int, required=True, help="seed applied to every cell")
    parser.add_argument("--out", default=None, help=f"output directory (default {settings.output_dir})")
    parser.add_argument("--workers", type=int, default=None, help="worker processes (0 = all CPUs)")
    parser.add_argument("--progress", action="store_true", default=None, help="show a progress bar")
    parser.set_defaults(handler=run)


@handle_errors
def run(args: argparse.Namespace) -> int:
    """Run every cell, write report.csv, report.json and trials.csv"""
    cells = load_study_cells(args.config, seed=args.seed)
    out_dir = Path(args.out or settings.output_dir)
    reports, trials = [], []
    for index, cell in enumerate(cells):
        logger.info(f"Cell {index + 1}/{len(cells)}")
        frame, failed = simulation.run_trials(cell, workers=args.workers, progress=args.progress)
        trials.append(frame)
        reports.append(simulation.summarize_trials(cell, frame, failed))

    batch = report_service.build_batch_report(cells, reports)
    report_service.write_study_outputs(out_dir, batch, trials)
    print(report_service.report_table(batch).T.to_string(header=False))
    return EXIT_OK
