import logging
import math
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from siegelzak.config import settings
from siegelzak.core.errors import DimensionMismatchError, EmptySampleError, SiegelZakError
from siegelzak.models.geometry import Box
from siegelzak.models.schema import McReport, TestFunction, TestFunctionKind

logger = logging.getLogger("numerics")

MASK64 = (1 << 64) - 1
Scalar = Union[float, complex]


# --- Test functions ---


def _prepare_points(f: TestFunction, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if f.dimension == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., None]
    if arr.ndim == 0 or arr.shape[-1] != f.dimension:
        got = 0 if arr.ndim == 0 else arr.shape[-1]
        raise DimensionMismatchError(f.dimension, got, "evaluation point")
    return arr


def testfn_eval(f: TestFunction, x):
    """
    Evaluate f at a point or at an array of points (last axis = dimension).
    Returns a Python scalar for a single point.
    """
    pts = _prepare_points(f, x)
    rel = (pts - f.center_array) / f.scale
    if f.kind in (TestFunctionKind.GAUSSIAN, TestFunctionKind.MODULATED_GAUSSIAN):
        values = np.exp(-math.pi * np.sum(rel * rel, axis=-1))
        if f.kind == TestFunctionKind.MODULATED_GAUSSIAN:
            phase = 2.0 * math.pi * np.sum((pts - f.center_array) * f.frequency_array, axis=-1)
            values = values * np.exp(1j * phase)
    elif f.kind == TestFunctionKind.BOX:
        values = np.all(np.abs(rel) <= 1.0, axis=-1).astype(float)
    else:
        values = np.prod(np.clip(1.0 - np.abs(rel), 0.0, None), axis=-1)
    values = f.amplitude * values
    if values.ndim == 0:
        return complex(values) if f.is_complex else float(values)
    return values


def testfn_integral(f: TestFunction) -> Scalar:
    s, d = f.scale, f.dimension
    if f.kind == TestFunctionKind.GAUSSIAN:
        value = s**d
    elif f.kind == TestFunctionKind.BOX:
        value = (2.0 * s) ** d
    elif f.kind == TestFunctionKind.TRIANGLE:
        value = s**d
    else:
        omega_sq = float(np.dot(f.frequency_array, f.frequency_array))
        return complex(f.amplitude * s**d * math.exp(-math.pi * s * s * omega_sq))
    return f.amplitude * value


def testfn_l2norm_sq(f: TestFunction) -> float:
    s, d = f.scale, f.dimension
    if f.kind in (TestFunctionKind.GAUSSIAN, TestFunctionKind.MODULATED_GAUSSIAN):
        value = (s * s / 2.0) ** (d / 2.0)
    elif f.kind == TestFunctionKind.BOX:
        value = (2.0 * s) ** d
    else:
        value = (2.0 * s / 3.0) ** d
    return f.amplitude**2 * value


def truncation_radius(f: TestFunction, cutoff: Optional[float] = None) -> float:
    """Per-axis half-width outside of which |f| is below `cutoff` (exactly zero for compact kinds)."""
    if f.kind in (TestFunctionKind.BOX, TestFunctionKind.TRIANGLE):
        return f.scale
    cutoff = settings.GAUSSIAN_CUTOFF if cutoff is None else cutoff
    return f.scale * math.sqrt(-math.log(cutoff) / math.pi)


def testfn_support_box(f: TestFunction) -> Box:
    return Box.cube(f.dimension, truncation_radius(f), f.center_array)


# --- Quadrature ---


def midpoint_nodes(lo: float, hi: float, n: int) -> Tuple[np.ndarray, float]:
    h = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * h, h


def midpoint_grid(box: Box, n: int) -> Tuple[np.ndarray, float]:
    """Tensor midpoint nodes of `box` with n points per axis and the cell volume."""
    axes = []
    cell = 1.0
    for lo, hi in zip(box.lo, box.hi):
        nodes, h = midpoint_nodes(float(lo), float(hi), n)
        axes.append(nodes)
        cell *= h
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1), cell


def midpoint_integral(func: Callable[[np.ndarray], np.ndarray], box: Box, n: int) -> Scalar:
    nodes, cell = midpoint_grid(box, n)
    values = np.asarray(func(nodes))
    total = stable_sum(values) * cell
    return total


def testfn_quadrature(f: TestFunction, n: int) -> Scalar:
    """Quadrature oracle for ∫f over its support box."""
    return midpoint_integral(lambda pts: testfn_eval(f, pts), testfn_support_box(f), n)


def stable_sum(values: Iterable) -> Scalar:
    """Correctly rounded sum; real and imaginary parts summed separately in the given order."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
    if arr.size == 0:
        return 0.0
    arr = arr.ravel()
    if np.iscomplexobj(arr):
        return complex(math.fsum(arr.real.tolist()), math.fsum(arr.imag.tolist()))
    return math.fsum(arr.tolist())


# --- Random streams ---


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


class RngStream:
    """
    Counter-based stream keyed by (seed, index): a Philox generator whose
    128-bit key is index·2^64 + seed. Advancing is local to the instance.
    """

    def __init__(self, seed: int, index: int = 0):
        self.seed = int(seed) & MASK64
        self.index = int(index) & MASK64
        key = (self.index << 64) | self.seed
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def spawn(self, child: int) -> "RngStream":
        return RngStream(self.seed, _splitmix64(self.index ^ _splitmix64(int(child) + 1)))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, index={self.index})"


def rng_uniform(stream: RngStream, n: int) -> np.ndarray:
    if n < 0:
        raise SiegelZakError(f"Cannot draw a negative number of variates: {n}")
    return stream.generator.random(n)


# --- Monte-Carlo statistics ---


def mc_stats(samples: Sequence[Scalar]) -> Tuple[Scalar, float]:
    arr = np.asarray(samples)
    if arr.size == 0:
        raise EmptySampleError()
    arr = arr.ravel()
    n = arr.size
    mean = stable_sum(arr) / n
    if n == 1:
        return mean, 0.0
    dev = np.abs(arr - mean) ** 2
    std = math.sqrt(math.fsum(dev.tolist()) / (n - 1))
    return mean, std / math.sqrt(n)


def mc_report(
    samples: Sequence[Scalar],
    reference: Scalar,
    multiplier: Optional[float] = None,
    slack: float = 0.0,
) -> McReport:
    multiplier = settings.MC_Z_MULTIPLIER if multiplier is None else multiplier
    mean, stderr = mc_stats(samples)
    mean = complex(mean)
    reference = complex(reference)
    diff = abs(mean - reference)
    if stderr > 0.0:
        z_score = diff / stderr
    else:
        z_score = 0.0 if diff == 0.0 else None
    passed = diff <= multiplier * stderr + slack
    return McReport(
        n_samples=len(np.asarray(samples).ravel()),
        mean_re=mean.real,
        mean_im=mean.imag,
        stderr=stderr,
        reference_re=reference.real,
        reference_im=reference.imag,
        z_score=z_score,
        multiplier=multiplier,
        slack=slack,
        passed=bool(passed),
    )
