import sys
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from siegelzak.core.errors import ConfigError
from siegelzak.models.geometry import Box, Window
from siegelzak.models.schema import PointMode, PsiMode, SiegelMode, TestFunction

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STRICT = ConfigDict(extra="forbid")


class ExperimentName(str, Enum):
    CLASSICAL_SIEGEL = "classical_siegel"
    CPS_DENSITY = "cps_density"
    HULL_INTENSITY = "hull_intensity"
    SIEGEL_FORMULA = "siegel_formula"
    TWISTED_SIEGEL = "twisted_siegel"
    SIEGEL_DUALITY = "siegel_duality"
    COMPATIBLE_PAIR_INTENSITY = "compatible_pair_intensity"
    PERIODIZATION = "periodization"
    HITTING_BOUND = "hitting_bound"
    ZAK_UNITARITY = "zak_unitarity"
    ABC_BOUND = "abc_bound"
    EPSILON_DUAL = "epsilon_dual"
    EIGEN_BOUNDS = "eigen_bounds"
    TWISTED_MEAN_ZERO = "twisted_mean_zero"
    ZAK_ISOMETRY = "zak_isometry"


class BoxSection(BaseModel):
    model_config = STRICT

    lo: List[float]
    hi: List[float]

    @model_validator(mode="after")
    def _check_bounds(self):
        if len(self.lo) != len(self.hi):
            raise ValueError(f"lo has {len(self.lo)} entries but hi has {len(self.hi)}")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("lo must not exceed hi")
        return self

    def to_box(self) -> Box:
        return Box(lo=self.lo, hi=self.hi)


class SchemeSection(BaseModel):
    model_config = STRICT

    name: str = "zsqrt2"


class WindowSection(BaseModel):
    """A single box via lo/hi, a union via [[window.boxes]], or `empty = true`."""

    model_config = STRICT

    lo: Optional[List[float]] = None
    hi: Optional[List[float]] = None
    boxes: List[BoxSection] = Field(default_factory=list)
    empty: bool = False

    @model_validator(mode="after")
    def _one_form(self):
        single = self.lo is not None or self.hi is not None
        if single and (self.lo is None or self.hi is None):
            raise ValueError("window needs both lo and hi")
        if sum([single, bool(self.boxes), self.empty]) > 1:
            raise ValueError("window takes exactly one of lo/hi, boxes or empty")
        return self

    def to_window(self, dimension: int) -> Window:
        if self.empty:
            return Window.empty(dimension)
        if dimension == 0:
            return Window.everything()
        if self.lo is not None:
            return Window(dimension=dimension, boxes=[Box(lo=self.lo, hi=self.hi)])
        if self.boxes:
            return Window(dimension=dimension, boxes=[b.to_box() for b in self.boxes])
        return Window.from_bounds([-1.0] * dimension, [1.0] * dimension)


class TolerancesSection(BaseModel):
    model_config = STRICT

    z_multiplier: Optional[float] = Field(None, gt=0.0)
    quadrature: Optional[float] = Field(None, ge=0.0)
    relative: float = Field(0.005, gt=0.0)


class OutputSection(BaseModel):
    model_config = STRICT

    report: Optional[str] = None
    pointset: Optional[str] = None
    csv: Optional[str] = None
    include_internal: bool = False


class ThinningSection(BaseModel):
    model_config = STRICT

    p: float = Field(1.0, ge=0.0, le=1.0)


class HittingSection(BaseModel):
    model_config = STRICT

    box: BoxSection


class MeyerSection(BaseModel):
    model_config = STRICT

    r_test: float = Field(0.25, gt=0.0)
    diff_radius: Optional[float] = Field(None, gt=0.0)
    restrict: Optional[BoxSection] = None


class Lattice2dSection(BaseModel):
    model_config = STRICT

    mode: PointMode = PointMode.ALL
    oracle_radius: float = Field(500.0, gt=0.0)
    oracle_tolerance: float = Field(0.01, gt=0.0)


class TwistedSection(BaseModel):
    model_config = STRICT

    k: List[int]


class DualitySection(BaseModel):
    """φ(c) = 1 + amplitude·cos(2π⟨k, c⟩) on hull coefficients."""

    model_config = STRICT

    mode: SiegelMode = SiegelMode.TRIVIAL_H
    k: List[int]
    amplitude: float = 0.5
    window_grid: int = Field(128, ge=1)
    quotient_grid: int = Field(256, ge=1)


class PeriodizationSection(BaseModel):
    model_config = STRICT

    internal_scale: Optional[float] = Field(None, gt=0.0)


class HeisenbergSection(BaseModel):
    model_config = STRICT

    n: int = 1
    grid_per_axis: int = Field(64, ge=1)
    abs_tolerance: float = Field(1e-3, gt=0.0)
    noise_floor: float = Field(1e-10, ge=0.0)


class AbcSection(BaseModel):
    model_config = STRICT

    instances: int = Field(100, ge=1)
    half_width: int = Field(3, ge=1)
    size: int = Field(12, ge=1)
    strict: bool = False


class EigenSection(BaseModel):
    model_config = STRICT

    epsilon: float = Field(0.5, gt=0.0, lt=1.0)
    truncation_radius: float = Field(200.0, gt=0.0)
    freq_lo: float = -20.0
    freq_hi: float = 20.0
    method: str = Field("dual", pattern="^(dual|grid)$")
    min_frequencies: int = Field(5, ge=0)
    gap_bound: float = Field(3.0, gt=0.0)
    frequency: Optional[float] = None
    sides: Optional[List[float]] = None
    shift: float = Field(1.0, gt=0.0)
    grid_spacing: float = Field(0.25, gt=0.0)


class AzakSection(BaseModel):
    model_config = STRICT

    c_u: float = Field(1.0, gt=0.0)
    c_z: float = Field(1.0, gt=0.0)
    c_v: float = Field(1.0, gt=0.0)
    trunc: float = Field(6.0, gt=0.0)
    # explicit dual character (m, k); otherwise the smallest ε-dual frequency
    m: Optional[int] = None
    k: Optional[int] = None
    epsilon: float = Field(0.5, gt=0.0, lt=1.0)
    freq_hi: float = Field(20.0, gt=0.0)
    truncation_radius: float = Field(100.0, gt=0.0)
    psi_mode: PsiMode = PsiMode.EXACT
    folner_side: float = Field(8.0, gt=0.0)
    folner_grid: Optional[int] = Field(None, ge=1)


class ExperimentConfig(BaseModel):
    """One experiment invocation, as read from a TOML file."""

    model_config = STRICT

    experiment: ExperimentName
    seed: int = Field(0, ge=0)
    n_samples: int = Field(1000, ge=1)

    scheme: SchemeSection = Field(default_factory=SchemeSection)
    window: WindowSection = Field(default_factory=WindowSection)
    region: Optional[BoxSection] = None
    test_function: TestFunction = Field(default_factory=TestFunction)
    tolerances: TolerancesSection = Field(default_factory=TolerancesSection)
    output: OutputSection = Field(default_factory=OutputSection)

    thinning: Optional[ThinningSection] = None
    hitting: Optional[HittingSection] = None
    meyer: Optional[MeyerSection] = None
    lattice2d: Optional[Lattice2dSection] = None
    twisted: Optional[TwistedSection] = None
    duality: Optional[DualitySection] = None
    periodization: Optional[PeriodizationSection] = None
    heisenberg: Optional[HeisenbergSection] = None
    abc: Optional[AbcSection] = None
    eigen: Optional[EigenSection] = None
    azak: Optional[AzakSection] = None

    def resolved(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)


def _describe(exc: ValidationError) -> str:
    error = exc.errors()[0]
    loc = ".".join(str(part) for part in error["loc"]) or "config"
    more = exc.error_count() - 1
    suffix = f" (+{more} more)" if more else ""
    return f"{loc}: {error['msg']}{suffix}"


def parse_config(data: dict, source: str = "config") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_describe(exc)}")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror or exc})")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML ({exc})")
    return parse_config(data, path)
