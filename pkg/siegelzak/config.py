import os
from typing import List
from dotenv import load_dotenv

load_dotenv()


def _float_list(raw: str) -> List[float]:
    return [float(part) for part in raw.split(",") if part.strip()]


class Settings:

    PROJECT_NAME: str = "siegel-zak"
    VERSION: str = "0.1.0"

    LOG_LEVEL: str = os.environ.get("LOG_LEVEL", "INFO").upper()
    LOG_FILE: str = os.environ.get("LOG_FILE", "siegelzak.log")

    MAX_WORKERS: int = int(os.environ.get("MAX_WORKERS", "4"))
    CHUNK_SIZE: int = int(os.environ.get("CHUNK_SIZE", "250"))

    MC_Z_MULTIPLIER: float = float(os.environ.get("MC_Z_MULTIPLIER", "3.0"))
    QUADRATURE_TOL: float = float(os.environ.get("QUADRATURE_TOL", "1e-6"))
    GAUSSIAN_CUTOFF: float = float(
        os.environ.get("GAUSSIAN_CUTOFF", "1e-12")
    )  # value below which a Gaussian is treated as zero
    MIN_QUADRATURE_GRID: int = int(os.environ.get("MIN_QUADRATURE_GRID", "16"))

    MAX_CANDIDATES: int = int(os.environ.get("MAX_CANDIDATES", "10000000"))
    REJECTION_CAP: int = int(os.environ.get("REJECTION_CAP", "10000"))
    DEDUP_TOL: float = float(os.environ.get("DEDUP_TOL", "1e-9"))
    MEYER_DIFF_RADIUS: float = float(os.environ.get("MEYER_DIFF_RADIUS", "10.0"))

    DUAL_GRID_SPACING: float = float(
        os.environ.get("DUAL_GRID_SPACING", str(1.0 / 256.0))
    )
    FOLNER_SIDES: List[float] = _float_list(os.environ.get("FOLNER_SIDES", "2,4,8"))
    FOLNER_MAX_EXCLUDED: float = float(os.environ.get("FOLNER_MAX_EXCLUDED", "0.01"))
    MIN_FOLNER_GRID: int = int(os.environ.get("MIN_FOLNER_GRID", "8"))

    OUTPUT_DIR: str = os.environ.get("OUTPUT_DIR", "results")

    @classmethod
    def setup_output_dir(cls):
        os.makedirs(cls.OUTPUT_DIR, exist_ok=True)
        return cls.OUTPUT_DIR


settings = Settings()
