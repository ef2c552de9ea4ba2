import itertools
from functools import cached_property
from typing import Annotated, List, Optional

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    model_validator,
)

from siegelzak.core.errors import ProjectionError


def _as_float_array(value):
    return np.asarray(value, dtype=float)


def _as_int_array(value):
    return np.asarray(value, dtype=np.int64)


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]
IntArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_int_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]

ARRAY_CONFIG = ConfigDict(arbitrary_types_allowed=True, frozen=True)
STRICT_ARRAY_CONFIG = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

RELATION_BOUND = 6
RELATION_CAP = 1_000_000


def _as_points(points: np.ndarray, dimension: int) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, dimension) if arr.size == dimension else arr[:, None]
    return arr


class Box(BaseModel):
    """Axis-aligned box. `contains` is half-open [lo, hi), `contains_closed` is [lo, hi]."""

    model_config = STRICT_ARRAY_CONFIG

    lo: FloatArray
    hi: FloatArray

    @model_validator(mode="after")
    def _check_shape(self):
        if self.lo.ndim != 1 or self.lo.shape != self.hi.shape:
            raise ValueError("Box bounds must be 1-D arrays of equal length")
        if np.any(self.hi < self.lo):
            raise ValueError(f"Box has hi < lo: {self.lo} / {self.hi}")
        return self

    @classmethod
    def cube(cls, dimension: int, half_width: float, center=None) -> "Box":
        c = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)
        return cls(lo=c - half_width, hi=c + half_width)

    @property
    def dimension(self) -> int:
        return int(self.lo.shape[0])

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points, self.dimension)
        return np.all((pts >= self.lo) & (pts < self.hi), axis=-1)

    def contains_closed(self, points, tol: float = 0.0) -> np.ndarray:
        pts = _as_points(points, self.dimension)
        return np.all((pts >= self.lo - tol) & (pts <= self.hi + tol), axis=-1)

    def covers(self, other: "Box", tol: float = 1e-12) -> bool:
        return bool(np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol))

    def translate(self, offset) -> "Box":
        off = np.asarray(offset, dtype=float)
        return Box(lo=self.lo + off, hi=self.hi + off)

    def inflate(self, margin: float) -> "Box":
        return Box(lo=self.lo - margin, hi=self.hi + margin)

    def corners(self) -> np.ndarray:
        if self.dimension == 0:
            return np.zeros((1, 0))
        picks = itertools.product(*[(a, b) for a, b in zip(self.lo, self.hi)])
        return np.array(list(picks), dtype=float)

    def select(self, axes: List[int]) -> "Box":
        return Box(lo=self.lo[axes], hi=self.hi[axes])


class Window(BaseModel):
    """Closed window in internal space, a finite union of axis boxes."""

    model_config = STRICT_ARRAY_CONFIG

    dimension: int = Field(ge=0)
    boxes: List[Box] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_boxes(self):
        for box in self.boxes:
            if box.dimension != self.dimension:
                raise ValueError(
                    f"Window box of dimension {box.dimension} in a {self.dimension}-D window"
                )
        return self

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Window":
        return cls(dimension=1, boxes=[Box(lo=[lo], hi=[hi])])

    @classmethod
    def from_bounds(cls, lo, hi) -> "Window":
        box = Box(lo=lo, hi=hi)
        return cls(dimension=box.dimension, boxes=[box])

    @classmethod
    def empty(cls, dimension: int) -> "Window":
        return cls(dimension=dimension, boxes=[])

    @classmethod
    def everything(cls) -> "Window":
        """The window of a scheme without internal space."""
        return cls(dimension=0, boxes=[Box(lo=[], hi=[])])

    def _cells(self):
        if self.dimension == 0:
            return [Box(lo=[], hi=[])] if self.boxes else []
        edges = []
        for axis in range(self.dimension):
            cuts = set()
            for box in self.boxes:
                cuts.add(float(box.lo[axis]))
                cuts.add(float(box.hi[axis]))
            edges.append(sorted(cuts))
        cells = []
        for idx in itertools.product(*[range(len(e) - 1) for e in edges]):
            lo = np.array([edges[a][i] for a, i in enumerate(idx)])
            hi = np.array([edges[a][i + 1] for a, i in enumerate(idx)])
            if np.any(hi <= lo):
                continue
            mid = 0.5 * (lo + hi)
            if any(bool(box.contains_closed(mid)[0]) for box in self.boxes):
                cells.append(Box(lo=lo, hi=hi))
        return cells

    @cached_property
    def disjoint_cells(self) -> List[Box]:
        """Non-overlapping boxes whose union equals the window up to a null set."""
        return self._cells()

    @cached_property
    def volume(self) -> float:
        return float(sum(cell.volume for cell in self.disjoint_cells))

    @property
    def is_empty(self) -> bool:
        return self.volume == 0.0

    @property
    def radius(self) -> float:
        """Largest absolute coordinate reached by the window."""
        if not self.boxes or self.dimension == 0:
            return 0.0
        return float(max(np.max(np.abs(np.concatenate([b.lo, b.hi]))) for b in self.boxes))

    def contains(self, points) -> np.ndarray:
        if self.dimension == 0:
            pts = np.asarray(points, dtype=float)
            n = pts.shape[0] if pts.ndim == 2 else 1
            return np.full(n, bool(self.boxes))
        pts = _as_points(points, self.dimension)
        inside = np.zeros(pts.shape[0], dtype=bool)
        for box in self.boxes:
            inside |= box.contains_closed(pts)
        return inside

    def bounding_box(self) -> Optional[Box]:
        if not self.boxes:
            return None
        lo = np.min([b.lo for b in self.boxes], axis=0)
        hi = np.max([b.hi for b in self.boxes], axis=0)
        return Box(lo=lo, hi=hi)

    def translate(self, offset) -> "Window":
        return Window(
            dimension=self.dimension, boxes=[b.translate(offset) for b in self.boxes]
        )

    def projected(self, axes: List[int]) -> "Window":
        return Window(dimension=len(axes), boxes=[b.select(axes) for b in self.boxes])


class PointSet(BaseModel):
    """Finite point set inside a declared region, kept in lexicographic order."""

    model_config = ARRAY_CONFIG

    points: FloatArray
    region: Box
    internal: Optional[FloatArray] = None
    coefficients: Optional[IntArray] = None

    @model_validator(mode="before")
    @classmethod
    def _sort(cls, data):
        if not isinstance(data, dict) or "points" not in data:
            return data
        region = data.get("region")
        dim = region.dimension if isinstance(region, Box) else None
        pts = np.asarray(data["points"], dtype=float)
        if pts.ndim == 1 and dim is not None:
            pts = pts.reshape(-1, dim) if dim > 0 else pts.reshape(0, 0)
        order = np.lexsort(pts.T[::-1]) if pts.shape[0] > 1 else np.arange(pts.shape[0])
        data = dict(data)
        data["points"] = pts[order]
        for key in ("internal", "coefficients"):
            if data.get(key) is not None:
                data[key] = np.asarray(data[key])[order]
        return data

    @model_validator(mode="after")
    def _check_inside(self):
        if self.points.ndim != 2 or self.points.shape[1] != self.region.dimension:
            raise ValueError(
                f"Points of shape {self.points.shape} in a {self.region.dimension}-D region"
            )
        scale = 1e-9 * max(1.0, float(np.max(np.abs(np.concatenate([self.region.lo, self.region.hi])))))
        if len(self) and not np.all(self.region.contains_closed(self.points, tol=scale)):
            raise ValueError("PointSet has points outside its region")
        return self

    @classmethod
    def empty(cls, region: Box) -> "PointSet":
        return cls(points=np.zeros((0, region.dimension)), region=region)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def dimension(self) -> int:
        return self.region.dimension

    @property
    def separation(self) -> float:
        from scipy.spatial import cKDTree

        if len(self) < 2:
            return float("inf")
        dist, _ = cKDTree(self.points).query(self.points, k=2)
        return float(dist[:, 1].min())

    def subset(self, mask) -> "PointSet":
        mask = np.asarray(mask)
        return PointSet(
            points=self.points[mask],
            region=self.region,
            internal=None if self.internal is None else self.internal[mask],
            coefficients=None if self.coefficients is None else self.coefficients[mask],
        )

    def restrict(self, box: Box) -> "PointSet":
        mask = box.contains(self.points) if len(self) else np.zeros(0, dtype=bool)
        sub = self.subset(mask)
        return PointSet(
            points=sub.points, region=box, internal=sub.internal, coefficients=sub.coefficients
        )


class HullPoint(BaseModel):
    """Point of the torus Γ\\(ℝ^d × ℝ^m) in lattice-basis coefficients."""

    model_config = ARRAY_CONFIG

    coefficients: FloatArray

    @model_validator(mode="after")
    def _check_unit_cube(self):
        c = self.coefficients
        if c.ndim != 1 or np.any(c < 0.0) or np.any(c >= 1.0):
            raise ValueError(f"Hull coefficients must lie in [0,1): {c}")
        return self


def integer_relation(rows, tol: float = 1e-9) -> Optional[np.ndarray]:
    """
    Smallest non-zero integer k (sup-norm, then lexicographic) with rows·k = 0
    up to `tol`, searched over |k|_∞ ≤ RELATION_BOUND while the box holds at
    most RELATION_CAP vectors. None if there is no such k.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    n = rows.shape[1]
    bound = RELATION_BOUND
    while bound > 1 and (2 * bound + 1) ** n > RELATION_CAP:
        bound -= 1
    axis = np.arange(-bound, bound + 1)
    ks = np.array(np.meshgrid(*([axis] * n), indexing="ij")).reshape(n, -1).T
    ks = ks[np.any(ks != 0, axis=1)]
    residual = np.max(np.abs(ks @ rows.T), axis=1)
    found = np.flatnonzero(residual <= tol * max(1.0, float(np.abs(rows).max())))
    if found.size == 0:
        return None
    size = np.max(np.abs(ks[found]), axis=1)
    return ks[found[np.argmin(size)]].astype(np.int64)


class CutProjectScheme(BaseModel):
    """Lattice Γ ⊂ ℝ^d × ℝ^m spanned by the columns of `basis`."""

    model_config = ARRAY_CONFIG

    name: str
    phys_dim: int = Field(ge=1)
    internal_dim: int = Field(ge=0)
    basis: FloatArray

    @model_validator(mode="after")
    def _check_basis(self):
        n = self.phys_dim + self.internal_dim
        if self.basis.shape != (n, n):
            raise ValueError(f"Basis must be {n}x{n}, got {self.basis.shape}")
        if abs(np.linalg.det(self.basis)) <= 1e-12:
            raise ValueError("Basis is singular")
        if self.internal_dim > 0:
            relation = integer_relation(self.basis[: self.phys_dim])
            if relation is not None:
                raise ProjectionError(relation.tolist())
        return self

    @property
    def rank(self) -> int:
        return self.phys_dim + self.internal_dim

    @cached_property
    def covolume(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.basis)

    def dual(self) -> "CutProjectScheme":
        """Scheme of the dual lattice {ξ : ⟨ξ, γ⟩ ∈ ℤ}, with the same phys/internal split."""
        return CutProjectScheme(
            name=f"{self.name}-dual",
            phys_dim=self.phys_dim,
            internal_dim=self.internal_dim,
            basis=self.inverse.T,
        )

    def split(self, vectors: np.ndarray):
        vectors = np.atleast_2d(vectors)
        return vectors[:, : self.phys_dim], vectors[:, self.phys_dim :]


class CompatiblePair(BaseModel):
    """
    Data of a compatible pair (H₁, H₂) for a lattice Γ: the covolume of
    Δ = Γ ∩ (H₁×H₂) and the measure of the projected window π₂(W).
    """

    model_config = ARRAY_CONFIG

    name: str
    gamma_covolume: float = Field(gt=0)
    delta_covolume: float = Field(gt=0)
    projected_window_volume: float = Field(ge=0)
    h_axes: Optional[List[int]] = None
    q_phys_axes: Optional[List[int]] = None
    q_internal_axes: Optional[List[int]] = None
    delta_basis: Optional[FloatArray] = None
    projected_window: Optional[Window] = None

    @property
    def index_constant(self) -> float:
        """c(H₁, H₂, Δ) = covol(Γ) / covol(Δ)."""
        return self.gamma_covolume / self.delta_covolume

    @property
    def siegel_constant(self) -> float:
        return self.projected_window_volume / self.index_constant


class UnimodularLattice2(BaseModel):
    """Planar lattice with basis columns b1, b2 and det = 1."""

    model_config = ARRAY_CONFIG

    basis: FloatArray

    @model_validator(mode="after")
    def _check_unimodular(self):
        if self.basis.shape != (2, 2):
            raise ValueError("Planar lattice basis must be 2x2")
        det = float(np.linalg.det(self.basis))
        if abs(det - 1.0) > 1e-12:
            raise ValueError(f"Basis determinant {det} is not 1")
        gram = self.basis.T @ self.basis
        if np.any(np.linalg.eigvalsh(gram) <= 0.0):
            raise ValueError("Gram matrix is not positive definite")
        return self

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.basis)
