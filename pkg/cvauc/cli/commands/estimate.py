import argparse
from pathlib import Path

from cvauc.cli.deps import load_dataset
from cvauc.cli.error_handler import EXIT_OK, handle_errors
from cvauc.config import settings
from cvauc.core import CvMode, Pairing
from cvauc.schemas.study import ClassifierSpec
from cvauc.services import estimation_service, report_service


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("estimate", help="Estimate the CV AUC and its SE on a CSV dataset")
    parser.add_argument("data", help="CSV with a header, one label column (1/2) and feature columns")
    parser.add_argument("--label-column", default="label")
    parser.add_argument("--classifier", choices=["lda", "qda"], default="lda")
    parser.add_argument("--ridge", type=float, default=0.0)
    parser.add_argument("--mode", choices=[mode.value for mode in CvMode], default=CvMode.CVKM.value)
    parser.add_argument("-K", "--folds", type=int, default=10)
    parser.add_argument("--reps", type=int, default=200, help="M for cvkm, R for cvkr")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--pairing", choices=[pairing.value for pairing in Pairing], default=Pairing.FULL.value)
    parser.add_argument("--policy", choices=["strict", "skip"], default=None)
    parser.add_argument("--ragged", action="store_true", help="allow K not dividing the class sizes")
    parser.add_argument("--out", default=None, help="output JSON path")
    parser.set_defaults(handler=run)


@handle_errors
def run(args: argparse.Namespace) -> int:
    data = load_dataset(args.data, args.label_column)
    spec = ClassifierSpec(kind=args.classifier, ridge=args.ridge)
    report = estimation_service.estimate(
        data,
        spec,
        CvMode(args.mode),
        n_folds=args.folds,
        n_reps=args.reps,
        seed=args.seed,
        pairing=Pairing(args.pairing),
        policy=args.policy,
        ragged=args.ragged
    )
    out = Path(args.out) if args.out else Path(settings.output_dir) / "estimate.json"
    report_service.write_json(out, report)
    print(report.model_dump_json(indent=2))
    return EXIT_OK
