import json
from pathlib import Path
from typing import List, Optional

import pandas as pd

from cvauc.core import TwoClassDataset
from cvauc.exceptions import InvalidInputError
from cvauc.schemas.study import StudyBatch, StudyConfig
import logging

logger = logging.getLogger(__name__)


def load_study_cells(config_path, seed: Optional[int] = None) -> List[StudyConfig]:
    """Study cells from a JSON file holding one cell or {"cells": [...]}.

    A seed given here replaces the seed of every cell.
    """
    path = Path(config_path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise InvalidInputError(f"Cannot read config file: {e.strerror}", {"path": str(path)})
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"Config file is not valid JSON: {e.msg}", {"path": str(path), "line": e.lineno})
    if not isinstance(document, dict):
        raise InvalidInputError("Config file must hold a JSON object", {"path": str(path)})

    if "cells" in document:
        cells = StudyBatch.model_validate(document).cells
    else:
        cells = [StudyConfig.model_validate(document)]
    if seed is not None:
        cells = [StudyConfig.model_validate({**cell.model_dump(), "seed": seed}) for cell in cells]
    logger.info(f"Loaded {len(cells)} study cell(s) from {path}")
    return cells


def load_dataset(data_path, label_column: str = "label") -> TwoClassDataset:
    """Two-class dataset from a CSV with a header, one 1/2 label column and numeric features"""
    path = Path(data_path)
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InvalidInputError(f"Cannot read dataset: {e}", {"path": str(path)})
    if label_column not in frame.columns:
        raise InvalidInputError(
            "Label column not found",
            {"label_column": label_column, "columns": list(frame.columns)[:10]}
        )
    features = frame.drop(columns=[label_column])
    if features.shape[1] == 0:
        raise InvalidInputError("The dataset has no feature columns", {"path": str(path)})
    non_numeric = [name for name in features.columns if not pd.api.types.is_numeric_dtype(features[name])]
    if non_numeric:
        raise InvalidInputError("Feature columns must be numeric", {"columns": non_numeric[:5]})
    data = TwoClassDataset.from_labeled(features.to_numpy(dtype=float), frame[label_column].to_numpy())
    logger.info(f"Loaded dataset {path}: n1={data.n1}, n2={data.n2}, p={data.p}")
    return data
