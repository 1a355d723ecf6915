import os
from functools import lru_cache


class Settings:
    # Special functions
    SERIES_TOL: float = float(os.getenv("MVMATERN_SERIES_TOL", "1e-16"))
    MAX_SERIES_TERMS: int = int(os.getenv("MVMATERN_MAX_SERIES_TERMS", "500"))
    ASYMPTOTIC_SWITCH: float = float(os.getenv("MVMATERN_ASYMPTOTIC_SWITCH", "20.0"))

    # Quadrature oracle
    QUAD_ABS_TOL: float = float(os.getenv("MVMATERN_QUAD_ABS_TOL", "1e-12"))
    QUAD_REL_TOL: float = float(os.getenv("MVMATERN_QUAD_REL_TOL", "1e-10"))
    QUAD_LIMIT: int = int(os.getenv("MVMATERN_QUAD_LIMIT", "500"))

    # FFT covariance grids
    FFT_POINTS_D1: int = int(os.getenv("MVMATERN_FFT_POINTS_D1", str(2**14)))
    FFT_POINTS_D2: int = int(os.getenv("MVMATERN_FFT_POINTS_D2", str(2**10)))
    FFT_MIN_HALF_WIDTH: float = float(os.getenv("MVMATERN_FFT_MIN_HALF_WIDTH", "10.0"))

    # Simulation / factorization
    SPECTRAL_FREQUENCIES: int = int(os.getenv("MVMATERN_SPECTRAL_FREQUENCIES", "4096"))
    JITTER_START: float = float(os.getenv("MVMATERN_JITTER_START", "1e-12"))
    JITTER_MAX: float = float(os.getenv("MVMATERN_JITTER_MAX", "1e-8"))

    # Inference
    N_STARTS: int = int(os.getenv("MVMATERN_N_STARTS", "3"))
    GRADIENT_STEP: float = float(os.getenv("MVMATERN_GRADIENT_STEP", "1e-5"))
    MAX_ITER: int = int(os.getenv("MVMATERN_MAX_ITER", "200"))

    # Runtime
    THREADS: int = int(os.getenv("MVMATERN_THREADS", "1"))
    LOG_LEVEL: str = os.getenv("MVMATERN_LOG_LEVEL", "INFO")


@lru_cache()
def get_settings():
    return Settings()


settings = get_settings()
