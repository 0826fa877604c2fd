import math
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ClassifierSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["lda", "qda"] = "lda"
    ridge: float = Field(default=0.0, ge=0.0)
    orientation_policy: Literal["train-mean"] = "train-mean"


class StudyConfig(BaseModel):
    """One cell of the Monte-Carlo study"""
    model_config = ConfigDict(extra="forbid")

    n1: int = Field(..., ge=2)
    n2: int = Field(..., ge=2)
    p: int = Field(default=2, ge=1)
    c: Optional[float] = Field(default=None, ge=0.0)
    classifier: ClassifierSpec = Field(default_factory=ClassifierSpec)
    K: int = Field(default=10, ge=2)
    M: int = Field(default=200, ge=1)
    R: int = Field(default=200, ge=1)
    n_mc: int = Field(default=500, ge=2)
    seed: Optional[int] = Field(default=None, ge=0)
    estimators: List[Literal["cvkm", "cvkr"]] = Field(default_factory=lambda: ["cvkm"])
    pairing: Literal["full", "matched"] = "full"
    zero_den_policy: Optional[Literal["strict", "skip"]] = None
    true_auc: bool = True

    @model_validator(mode="after")
    def check_folds(self) -> "StudyConfig":
        for name, n in (("n1", self.n1), ("n2", self.n2)):
            if self.K > n:
                raise ValueError(f"K={self.K} exceeds {name}={n}")
            if n % self.K:
                raise ValueError(f"K={self.K} must divide {name}={n}")
        if not self.estimators:
            raise ValueError("estimators must name at least one CV version")
        return self

    @property
    def separation(self) -> float:
        """Mean-shift scalar; defaults to a Bayes AUC of about 0.80"""
        if self.c is not None:
            return self.c
        return 1.19 / math.sqrt(self.p)


class StudyBatch(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: int = 1
    cells: List[StudyConfig] = Field(..., min_length=1)
