from pydantic_settings import BaseSettings
from pydantic import Field, ConfigDict
from typing import Literal
from dotenv import load_dotenv

load_dotenv()


class Settings(BaseSettings):
    model_config = ConfigDict(
        env_file=".env",
        case_sensitive=False,
        env_parse_none_str="None",
        extra="ignore"  # Ignore unrelated variables found in .env
    )

    # Environment
    environment: str = Field(default="development", alias="CVAUC_ENVIRONMENT")
    log_level: str = Field(default="INFO", alias="CVAUC_LOG_LEVEL")

    # Execution
    workers: int = Field(default=1, ge=0, alias="CVAUC_WORKERS")
    progress: bool = Field(default=False, alias="CVAUC_PROGRESS")
    output_dir: str = Field(default="out", alias="CVAUC_OUTPUT_DIR")

    # AUC kernel
    tie_tolerance: float = Field(default=0.0, ge=0.0, alias="CVAUC_TIE_TOLERANCE")
    zero_den_policy: Literal["strict", "skip"] = Field(
        default="strict",
        alias="CVAUC_ZERO_DEN_POLICY"
    )

    # Classifier regularization
    ridge_eig_ratio: float = Field(default=1e-10, gt=0.0, alias="CVAUC_RIDGE_EIG_RATIO")
    ridge_scale: float = Field(default=1e-6, gt=0.0, alias="CVAUC_RIDGE_SCALE")

    # Influence-function oracle
    fd_step: float = Field(default=1e-5, gt=0.0, alias="CVAUC_FD_STEP")

    # Simulation harness
    max_failure_rate: float = Field(default=0.01, ge=0.0, le=1.0, alias="CVAUC_MAX_FAILURE_RATE")
    true_auc_test_size: int = Field(default=2000, ge=10, alias="CVAUC_TRUE_AUC_TEST_SIZE")

    @property
    def resolved_workers(self) -> int:
        """Worker count with 0 resolved to the CPU count"""
        if self.workers > 0:
            return self.workers
        import os
        return os.cpu_count() or 1


settings = Settings()
