from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Numerical tolerance (QSYS_TOL); the --tol flag wins over the environment
    qsys_tol: float = 1e-9
    qsys_rel_tol: float = 0.0

    # Seeds for eigen-splitting and search starts
    qsys_seed: int = 0
    max_seed_retries: int = 8

    # Linear algebra thresholds
    eigen_cluster_tol: float = 1e-6
    null_space_rcond: float = 1e-10
    null_space_atol: float = 1e-8

    # Memoization bounds; identity-keyed engine caches and per-presentation tensor data
    engine_cache_size: int = 2048
    presentation_cache_size: int = 4096

    # Q-system search
    search_starts: int = 24
    search_max_nfev: int = 4000

    # Logging
    log_level: str = "WARNING"
    log_file: str | None = None

    class Config:
        env_file = ".env"
        case_sensitive = False
        extra = "ignore"


settings = Settings()
