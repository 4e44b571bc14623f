"""Small dense linear algebra and reproducible Gaussian sampling.

Everything here works on plain float64 numpy arrays.  Problem sizes are tiny
(3, 9, 25), so no attempt is made at sparsity or blocking.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite

SYMMETRY_TOL = 1e-12


def as_vector(x, n: int | None = None, name: str = "vector") -> np.ndarray:
    """Return `x` as a finite 1-D float64 array, optionally checking its length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionMismatch(f"{name} must have length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def as_matrix(a, shape: tuple[int, int] | None = None, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if shape is not None and m.shape != shape:
        raise DimensionMismatch(f"{name} must have shape {shape}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True)
class SpdFactor:
    """Lower-triangular factor L with A = L L^T.

    ``L`` may be all zeros (a degenerate covariance).  That is only useful
    for sampling, where it makes draws collapse onto the mean; weighted norms
    refuse it.
    """

    L: np.ndarray

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.L @ self.L.T

    @property
    def is_degenerate(self) -> bool:
        return not np.all(np.diag(self.L) > 0.0)

    @classmethod
    def zeros(cls, n: int) -> "SpdFactor":
        return cls(np.zeros((n, n)))

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Return A^{-1} b via forward and back substitution."""
        if self.is_degenerate:
            raise NotPositiveDefinite("cannot solve with a degenerate factor")
        z = solve_triangular(self.L, b, lower=True, check_finite=False)
        return solve_triangular(self.L.T, z, lower=False, check_finite=False)


def cholesky(a) -> SpdFactor:
    """Factor a symmetric positive-definite matrix.

    Raises NotPositiveDefinite when the matrix is not symmetric or a pivot is
    not strictly positive.
    """
    a = as_matrix(a, name="A")
    n, m = a.shape
    if n != m:
        raise DimensionMismatch(f"A must be square, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise NotPositiveDefinite("A is not symmetric")

    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > 0.0:
            raise NotPositiveDefinite(f"pivot {j} is {pivot!r}")
        L[j, j] = np.sqrt(pivot)
        for i in range(j + 1, n):
            L[i, j] = (a[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return SpdFactor(L)


def weighted_norm_sq(v, factor: SpdFactor) -> float:
    """v^T A^{-1} v for A = L L^T, computed with one triangular solve."""
    v = as_vector(v, name="v")
    if v.shape[0] != factor.dim:
        raise DimensionMismatch(f"v has length {v.shape[0]}, factor is {factor.dim}x{factor.dim}")
    if factor.is_degenerate:
        raise NotPositiveDefinite("weighted norm needs a nondegenerate factor")
    z = solve_triangular(factor.L, v, lower=True, check_finite=False)
    return float(z @ z)


class RngStream:
    """Random stream keyed by ``(seed, stream)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so
    different stream ids give independent generators and the same id always
    reproduces the same draws.  ``stream`` may be an int or a tuple of ints,
    which lets callers key by (trial, purpose, method).
    """

    def __init__(self, seed: int, stream: int | Sequence[int] = 0):
        key = (stream,) if np.isscalar(stream) else tuple(stream)
        self.seed = int(seed)
        self.stream = tuple(int(k) for k in key)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.stream))
        )

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream})"

    def standard_normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def uniform(self, low: float, high: float, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size)


def sample_gaussian(mean, factor: SpdFactor, rng: RngStream) -> np.ndarray:
    """Draw ``mean + L z`` with z standard normal from ``rng``."""
    mean = as_vector(mean, name="mean")
    if mean.shape[0] != factor.dim:
        raise DimensionMismatch(f"mean has length {mean.shape[0]}, factor is {factor.dim}x{factor.dim}")
    z = rng.standard_normal(mean.shape[0])
    return mean + factor.L @ z
