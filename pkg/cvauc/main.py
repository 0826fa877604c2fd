import argparse
import logging
from typing import List, Optional
from cvauc.config import settings
from cvauc.cli.commands import components, estimate, ratio, simulate

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper()),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvauc",
        description="Cross-validation AUC and error-rate estimators with influence-function standard errors"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (simulate, estimate, components, ratio):
        command.add_parser(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors, 0 on --help
        return int(e.code or 0)
    logger.debug(f"Running {args.command} (environment={settings.environment})")
    return args.handler(args)


if __name__ == "__main__":
    raise SystemExit(main())
