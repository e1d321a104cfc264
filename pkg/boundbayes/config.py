"""Configuration management for the boundbayes toolkit."""
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical configuration from environment variables."""

    # Logging (stderr only; stdout carries data)
    LOG_LEVEL: str = "WARNING"

    # Gauss-Hermite expectations under a normal law
    GH_NODES: int = 128
    GH_MAX_NODES: int = 512
    GH_TOL: float = 1e-10

    # Adaptive quadrature (scipy.integrate.quad)
    QUAD_EPSABS: float = 1e-13
    QUAD_EPSREL: float = 1e-12
    QUAD_LIMIT: int = 200
    # Half-width, in standard deviations, of finite integration windows
    QUAD_HALF_WIDTH: float = 40.0

    # Rejection sampler for the extended skew-normal
    ESN_MIN_ACCEPTANCE: float = 1e-12
    SAMPLER_BATCH: int = 65536

    # Risk engine
    SIGN_ZERO_TOL: float = 1e-13
    BISECT_XTOL: float = 1e-7
    CUTOFF_SCAN_MIN: float = -20.0
    CUTOFF_SCAN_MAX: float = 20.0
    CUTOFF_SCAN_STEP: float = 0.05
    MINIMAX_TOL: float = 1e-6
    MINIMAX_TAIL_TOL: float = 1e-3
    MC_MIN_DRAWS: int = 1000

    # default risk-curve grid
    CURVE_THETA_MIN: float = -3.0
    CURVE_THETA_MAX: float = 4.0
    CURVE_THETA_STEP: float = 0.01
    CURVE_ESTIMATORS: list[str] = ["delta_c:0.5", "delta_c:0.75", "delta_c:1"]

    # Output
    CSV_DIGITS: int = 17
    MAX_WORKERS: Optional[int] = None

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="BOUNDBAYES_",
        case_sensitive=True,
        extra="ignore",
    )


settings = Settings()
