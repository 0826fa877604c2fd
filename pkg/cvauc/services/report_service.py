from pathlib import Path
from typing import Dict, List, Sequence, Union

import pandas as pd

from cvauc.schemas.report import BatchReport, ComponentsReport, EstimateReport, StudyReport
from cvauc.schemas.study import StudyConfig
from cvauc.utils.fingerprint import hash_document
import logging

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
CONFIG_COLUMNS = ("n1", "n2", "p", "K", "M", "R", "n_mc", "seed", "pairing")


def build_batch_report(cells: Sequence[StudyConfig], reports: List[StudyReport]) -> BatchReport:
    """Schema-versioned batch report fingerprinted by its echoed configuration"""
    fingerprint = hash_document([cell.model_dump(mode="json") for cell in cells])
    return BatchReport(fingerprint=fingerprint, cells=reports)


def report_row(index: int, report: StudyReport) -> Dict[str, object]:
    """One flat CSV row for a study cell"""
    config = report.config
    row: Dict[str, object] = {"cell": index}
    row.update({name: config.get(name) for name in CONFIG_COLUMNS})
    row["classifier"] = config["classifier"]["kind"]
    row["estimators"] = "+".join(config["estimators"])
    row["c"] = report.separation
    row["bayes_auc"] = report.bayes_auc
    row["true_auc"] = report.true_auc_mean
    row["n_trials"] = report.n_trials
    row["n_failed"] = report.n_failed
    for point in report.points:
        row[f"{point.name}_mean"] = point.mean
        row[f"{point.name}_true_sd"] = point.true_sd
        row[f"{point.name}_mc_se"] = point.mc_se
    for se in report.se_estimators:
        for stat in ("mean", "sd", "bias", "rms", "normalized_bias", "normalized_sd", "normalized_rms", "mc_se"):
            row[f"{se.name}_{stat}"] = getattr(se, stat)
    return row


def report_table(batch: BatchReport) -> pd.DataFrame:
    return pd.DataFrame([report_row(index, report) for index, report in enumerate(batch.cells)])


def trials_table(trials: Sequence[pd.DataFrame]) -> pd.DataFrame:
    """Long format: cell, trial, metric, value"""
    frames = []
    for index, frame in enumerate(trials):
        if frame.empty:
            continue
        long = frame.melt(id_vars="trial", var_name="metric", value_name="value")
        long.insert(0, "cell", index)
        frames.append(long)
    if not frames:
        return pd.DataFrame(columns=["cell", "trial", "metric", "value"])
    return pd.concat(frames, ignore_index=True).sort_values(["cell", "trial", "metric"], kind="stable")


def _prepare(out_dir) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_study_outputs(out_dir, batch: BatchReport, trials: Sequence[pd.DataFrame]) -> Dict[str, Path]:
    """Write report.csv, report.json and trials.csv"""
    path = _prepare(out_dir)
    files = {
        "report_csv": path / "report.csv",
        "report_json": path / "report.json",
        "trials_csv": path / "trials.csv",
    }
    report_table(batch).to_csv(files["report_csv"], index=False, float_format=FLOAT_FORMAT)
    files["report_json"].write_text(batch.model_dump_json(indent=2) + "\n")
    trials_table(trials).to_csv(files["trials_csv"], index=False, float_format=FLOAT_FORMAT)
    for name, file in files.items():
        logger.info(f"Wrote {name} to {file}")
    return files


def write_json(path, document: Union[EstimateReport, ComponentsReport]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2) + "\n")
    logger.info(f"Wrote {path}")
    return path


def write_ratio_table(path, table: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {path}")
    return path
