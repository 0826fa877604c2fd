import argparse

import pandas as pd

from cvauc.cli.error_handler import EXIT_OK, handle_errors
from cvauc.exceptions import InvalidInputError
from cvauc.services import report_service
from cvauc.services.simulation import permutation_ratio


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("ratio", help="C(n, n/2) / n^n for even n up to n_max")
    parser.add_argument("n_max", type=int)
    parser.add_argument("--out", default=None, help="CSV path (printed to stdout otherwise)")
    parser.set_defaults(handler=run)


def ratio_table(n_max: int) -> pd.DataFrame:
    if n_max < 2:
        raise InvalidInputError("n_max must be at least 2", {"n_max": n_max})
    sizes = list(range(2, n_max + 1, 2))
    return pd.DataFrame({"n": sizes, "ratio": [permutation_ratio(n) for n in sizes]})


@handle_errors
def run(args: argparse.Namespace) -> int:
    table = ratio_table(args.n_max)
    if args.out:
        report_service.write_ratio_table(args.out, table)
    else:
        print(table.to_csv(index=False, float_format=report_service.FLOAT_FORMAT), end="")
    return EXIT_OK
