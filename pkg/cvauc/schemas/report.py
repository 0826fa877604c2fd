from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional


class PointSummary(BaseModel):
    name: str
    mean: float
    true_sd: float
    mc_se: float
    n_trials: int


class SeSummary(BaseModel):
    name: str
    target: str
    mean: float
    sd: float
    bias: float
    rms: float
    normalized_mean: float
    normalized_bias: float
    normalized_sd: float
    normalized_rms: float
    mc_se: float


class StudyReport(BaseModel):
    """Summary of one cell of the Monte-Carlo study"""
    config: Dict[str, Any]
    separation: float
    bayes_auc: float
    true_auc_mean: Optional[float] = None
    n_trials: int
    n_failed: int = 0
    points: List[PointSummary]
    se_estimators: List[SeSummary]


class BatchReport(BaseModel):
    schema_version: int = 1
    fingerprint: str
    cells: List[StudyReport]


class ComponentsReport(BaseModel):
    """Covariance components of the CVK error and the naive-variance bias check"""
    schema_version: int = 1
    config: Dict[str, Any]
    n_trials: int
    n_failed: int = 0
    n: int
    fold_size: int
    mu: float
    sigma2: float
    omega: float
    gamma: float
    se_omega: float
    se_gamma: float
    mean_naive_var: float
    se_mean_naive_var: float
    mc_var: float
    se_mc_var: float
    observed_bias: float
    se_observed_bias: float
    predicted_bias: float
    reconstructed_var: float
    expected_naive_var: float


class EstimateReport(BaseModel):
    """Point estimate, standard errors and diagnostics for one dataset"""
    schema_version: int = 1
    mode: str
    pairing: str
    n1: int
    n2: int
    classifier: Dict[str, Any]
    settings: Dict[str, Any]
    auc: float
    se: Dict[str, Optional[float]] = Field(default_factory=dict)
    err: Optional[float] = None
    per_obs_auc1: List[float]
    per_obs_auc2: List[float]
    per_fold_auc: Optional[List[List[List[Optional[float]]]]] = None
    matched_auc: Optional[List[List[Optional[float]]]] = None
    influence: Optional[Dict[str, List[float]]] = None
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
