"""Configuration for the ALDP toolkit."""
from pathlib import Path
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Toolkit settings, overridable through ALDP_* environment variables."""

    # Paths
    output_dir: Path = Path("results")

    # Reproducibility
    seed: int = 42
    workers: int = 1
    log_level: str = "INFO"

    # Desk-scale experiment sizes
    numeric_users: int = 400_000
    categorical_users: int = 100_000
    repetitions: int = 10
    quick_users: int = 50_000
    quick_repetitions: int = 5
    default_epsilons: str = "0.5,1,2,4"
    default_deltas: str = "1e-6"

    # Synthetic data
    gaussian_sd: float = 0.25
    zipf_exponent: float = 1.3

    # Mechanisms
    tie_rule: str = "STRICT"
    domain_tolerance: float = 1e-9
    olh_delta_threshold: float = 1e-12

    # Gaussian calibration
    bisection_width: float = 1e-14
    bisection_max_iter: int = 200
    bracket_limit: float = 50.0

    # Private SGD
    training_users: int = 200_000
    learning_rate: float = 0.1
    batch_size: int = 1000
    test_fraction: float = 0.1

    # Exhaustive privacy audit
    audit_max_dims: int = 3
    audit_max_domain: int = 8
    audit_tolerance: float = 1e-12

    class Config:
        env_file = ".env"
        env_prefix = "ALDP_"


settings = Settings()
