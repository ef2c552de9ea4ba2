from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from siegelzak.models.geometry import ARRAY_CONFIG, FloatArray, PointSet


class HeisPoint(BaseModel):
    """Element (u, t, v) of the Heisenberg group U × Z × V with U = V = ℝ^n."""

    model_config = ARRAY_CONFIG

    u: FloatArray
    t: float
    v: FloatArray

    @model_validator(mode="before")
    @classmethod
    def _promote_scalars(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            for key in ("u", "v"):
                if key in data:
                    data[key] = np.atleast_1d(np.asarray(data[key], dtype=float))
        return data

    @model_validator(mode="after")
    def _check_dims(self):
        if self.u.ndim != 1 or self.u.shape != self.v.shape:
            raise ValueError("u and v must be vectors of the same length")
        return self

    @classmethod
    def identity(cls, n: int = 1) -> "HeisPoint":
        return cls(u=np.zeros(n), t=0.0, v=np.zeros(n))

    @classmethod
    def from_array(cls, arr) -> "HeisPoint":
        arr = np.asarray(arr, dtype=float)
        n = (arr.shape[0] - 1) // 2
        return cls(u=arr[:n], t=float(arr[n]), v=arr[n + 1 :])

    @property
    def n(self) -> int:
        return int(self.u.shape[0])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.u, [self.t], self.v])


class Character(BaseModel):
    """
    Character χ_ω ⊗ ξ_s of H = U × Z: (u, t) ↦ e^{2πi(⟨ω, u⟩ + s t)}.
    `s_star` is the Galois partner of s when s comes from the ℤ[√2] dual lattice.
    """

    model_config = ARRAY_CONFIG

    s: float
    u_freq: Optional[FloatArray] = None
    s_star: Optional[float] = None

    def omega(self, n: int) -> np.ndarray:
        return np.zeros(n) if self.u_freq is None else np.atleast_1d(self.u_freq)

    @property
    def is_trivial(self) -> bool:
        no_u = self.u_freq is None or not np.any(self.u_freq)
        return self.s == 0.0 and no_u


class HeisApproxLattice(BaseModel):
    """
    Λ = Λ_U × Λ_Z × Λ_V for ℤ[√2] model sets Λ_• = {a + b√2 : |a − b√2| ≤ c_•}.
    Each `lambda_*` array has rows (value, conjugate, a, b).
    """

    model_config = ARRAY_CONFIG

    c_u: float = Field(gt=0)
    c_z: float = Field(gt=0)
    c_v: float = Field(gt=0)
    trunc: float = Field(gt=0)
    lambda_u: FloatArray
    lambda_z: FloatArray
    lambda_v: FloatArray
    pointset: PointSet
    products_checked: int = 0


class HeisHullPoint(BaseModel):
    """
    Hull point Γ_heis\\(G × G*) in reduced Mal'cev coefficients
    (c_u, c_u*, c_v, c_v*, c_t, c_t*), each pair taken w.r.t. the ℤ[√2] basis.
    """

    model_config = ARRAY_CONFIG

    coefficients: FloatArray

    @model_validator(mode="after")
    def _check_box(self):
        c = self.coefficients
        if c.shape != (6,) or np.any(c < 0.0) or np.any(c >= 1.0):
            raise ValueError(f"Heisenberg hull coefficients must lie in [0,1)^6: {c}")
        return self


class HeisTransversalSample(BaseModel):
    """
    The H-trace of a hull point y: H-coordinates (u, t) of P_y ∩ H, complete
    within `radius`, and the internal partners of the points that produced them.
    """

    model_config = ARRAY_CONFIG

    h_points: FloatArray
    internal: FloatArray
    radius: float = Field(gt=0)
