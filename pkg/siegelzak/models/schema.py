from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from siegelzak.models.geometry import ARRAY_CONFIG, FloatArray

# --- Enums ---


class TestFunctionKind(str, Enum):
    __test__ = False

    GAUSSIAN = "gaussian"
    BOX = "box"
    TRIANGLE = "triangle"
    MODULATED_GAUSSIAN = "modulated-gaussian"


class SiegelMode(str, Enum):
    TRIVIAL_H = "trivial_H"
    COMPATIBLE_PAIR = "compatible_pair"
    LATTICE = "lattice"


class PointMode(str, Enum):
    ALL = "all"
    VISIBLE = "visible"


class PsiMode(str, Enum):
    EXACT = "exact"
    FOLNER = "folner"


# --- Test functions ---


class TestFunction(BaseModel):
    """
    Symbolic test function on ℝ^d with closed-form integral and L² norm.

    gaussian            a·exp(−π|x−c|²/s²)
    box                 a·1{|x_i − c_i| ≤ s for all i}
    triangle            a·∏ max(0, 1 − |x_i − c_i|/s)
    modulated-gaussian  gaussian · exp(2πi⟨ω, x − c⟩)
    """

    __test__ = False

    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "kind": "gaussian",
                "dimension": 1,
                "center": [0.0],
                "scale": 1.0,
            }
        },
    )

    kind: TestFunctionKind = TestFunctionKind.GAUSSIAN
    dimension: int = Field(1, ge=1)
    center: Optional[List[float]] = None
    scale: float = Field(1.0, gt=0.0)
    frequency: Optional[List[float]] = None
    amplitude: float = 1.0

    @model_validator(mode="after")
    def _check_vectors(self):
        if self.center is not None and len(self.center) != self.dimension:
            raise ValueError(f"center has length {len(self.center)}, expected {self.dimension}")
        if self.kind == TestFunctionKind.MODULATED_GAUSSIAN:
            if self.frequency is None or len(self.frequency) != self.dimension:
                raise ValueError("modulated-gaussian needs a frequency of matching length")
        elif self.frequency is not None:
            raise ValueError(f"frequency is only meaningful for modulated-gaussian, not {self.kind.value}")
        return self

    @property
    def center_array(self) -> np.ndarray:
        if self.center is None:
            return np.zeros(self.dimension)
        return np.asarray(self.center, dtype=float)

    @property
    def frequency_array(self) -> np.ndarray:
        if self.frequency is None:
            return np.zeros(self.dimension)
        return np.asarray(self.frequency, dtype=float)

    @property
    def is_complex(self) -> bool:
        return self.kind == TestFunctionKind.MODULATED_GAUSSIAN


# --- Reports ---


class McReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    n_samples: int = Field(ge=1)
    mean_re: float
    mean_im: float = 0.0
    stderr: float = Field(ge=0.0)
    reference_re: float
    reference_im: float = 0.0
    z_score: Optional[float] = None
    multiplier: float = Field(3.0, gt=0.0)
    slack: float = Field(0.0, ge=0.0)
    passed: bool = Field(alias="pass")

    @property
    def mean(self) -> complex:
        return complex(self.mean_re, self.mean_im)

    @property
    def reference(self) -> complex:
        return complex(self.reference_re, self.reference_im)


class SiegelReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    experiment: str
    seed: int
    estimate: McReport
    reference: float
    second_moment: float
    passed: bool = Field(alias="pass")

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "n_samples": self.estimate.n_samples,
            "mean_re": self.estimate.mean_re,
            "mean_im": self.estimate.mean_im,
            "stderr": self.estimate.stderr,
            "reference": self.reference,
            "z": self.estimate.z_score,
            "pass": self.passed,
            "second_moment": self.second_moment,
        }


class MeyerReport(BaseModel):
    uniformly_discrete: bool
    meyer: bool
    min_gap: float
    difference_set_min_gap: float
    r_test: float
    diff_radius: float
    n_differences: int


class AbcReport(BaseModel):
    lhs: int = Field(ge=0)
    rhs: int = Field(ge=0)
    rhs_bc: int = Field(ge=0)
    covering_verified: bool
    uncovered_cosets: int = 0
    holds: bool


class HittingBoundReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    n_samples: int
    max_count: int
    bound: int
    passed: bool = Field(alias="pass")


class StabilizerReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    s: float
    n_checked: int
    violations: List[float] = Field(default_factory=list)
    witness_u: Optional[float] = None
    passed: bool = Field(alias="pass")


class DualFrequency(BaseModel):
    model_config = ARRAY_CONFIG

    frequency: FloatArray
    defect: float = Field(ge=0.0)
    truncation_radius: float


class EpsDualQuery(BaseModel):
    model_config = ARRAY_CONFIG

    lambda_points: FloatArray
    epsilon: float = Field(gt=0.0, lt=1.0)
    candidates: FloatArray
    truncation_radius: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _check_truncation(self):
        pts = np.atleast_2d(self.lambda_points.reshape(self.lambda_points.shape[0], -1))
        if pts.size and np.max(np.linalg.norm(pts, axis=1)) > self.truncation_radius * (1 + 1e-12):
            raise ValueError("lambda_points exceed the truncation radius")
        return self


class SectionEntry(BaseModel):
    model_config = ARRAY_CONFIG

    sample_id: int
    point: FloatArray
    element: FloatArray
    tied: bool = False


class FolnerResult(BaseModel):
    value_re: float
    value_im: float
    excluded_fraction: float = Field(ge=0.0, le=1.0)
    n_translates: int
    side: float
    return_defect: float = Field(0.0, ge=0.0)

    @property
    def value(self) -> complex:
        return complex(self.value_re, self.value_im)


class IsometryReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    experiment: str = "zak_isometry"
    seed: int
    n_samples: int
    ratio: float
    ratio_stderr: float
    tolerance: float
    mean_zero: McReport
    epsilon: float
    psi_defect: float
    sigma_Y: float
    folner_box: Optional[float] = None
    l2_norm_sq: float
    second_moment: float
    passed: bool = Field(alias="pass")
