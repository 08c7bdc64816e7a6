"""Point sets, Gram matrices and Euclidean distance matrices.

Points are stored column-wise in a ``d x N`` array with the ``m`` receivers
first and the ``k`` sources after them, so that the receiver/source split of
every derived matrix is a plain block split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidInputError

__all__ = [
    "PointSet",
    "GramMatrix",
    "centering_matrix",
    "cross_distances",
    "gram_from_points",
    "edm_from_gram",
    "cross_block",
    "points_from_gram",
    "spectral_tail_mass",
]


@dataclass(frozen=True)
class PointSet:
    """Receivers and sources in one ``d x (m + k)`` coordinate array (meters)."""

    coords: np.ndarray
    m: int
    k: int

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        if coords.ndim != 2:
            raise InvalidDimensionError("coords must be a d x N array")
        d, n = coords.shape
        if d not in (2, 3):
            raise InvalidDimensionError(f"dimension must be 2 or 3, got {d}")
        if self.m < 0 or self.k < 0 or self.m + self.k != n:
            raise InvalidDimensionError(
                f"m + k must equal the number of columns ({self.m} + {self.k} != {n})"
            )
        if n < 2:
            raise InvalidDimensionError("a point set needs at least two points")
        if not np.all(np.isfinite(coords)):
            raise InvalidInputError("coordinates must be finite")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_parts(cls, receivers, sources) -> "PointSet":
        """Build from ``d x M`` receiver and ``d x K`` source arrays."""
        receivers = np.atleast_2d(np.asarray(receivers, dtype=float))
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        return cls(np.hstack([receivers, sources]), receivers.shape[1], sources.shape[1])

    @property
    def d(self) -> int:
        return self.coords.shape[0]

    @property
    def n(self) -> int:
        return self.coords.shape[1]

    @property
    def receivers(self) -> np.ndarray:
        return self.coords[:, : self.m]

    @property
    def sources(self) -> np.ndarray:
        return self.coords[:, self.m :]

    def centered(self) -> "PointSet":
        return PointSet(self.coords - self.coords.mean(axis=1, keepdims=True), self.m, self.k)

    def transformed(self, q, t=None) -> "PointSet":
        """Return ``q @ x + t`` for every point."""
        out = np.asarray(q, dtype=float) @ self.coords
        if t is not None:
            out = out + np.asarray(t, dtype=float).reshape(-1, 1)
        return PointSet(out, self.m, self.k)


@dataclass(frozen=True)
class GramMatrix:
    g: np.ndarray
    m: int
    k: int

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidDimensionError("Gram matrix must be square")
        if self.m < 0 or self.k < 0 or self.m + self.k != g.shape[0]:
            raise InvalidDimensionError("m + k must equal the Gram matrix order")
        scale = max(1.0, float(np.max(np.abs(g)))) if g.size else 1.0
        if np.max(np.abs(g - g.T), initial=0.0) > 1e-12 * scale:
            raise InvalidInputError("Gram matrix must be symmetric")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.g.shape[0]


def centering_matrix(size: int) -> np.ndarray:
    """Geometric centering matrix ``I - 11^T / size``."""
    if size < 1:
        raise InvalidDimensionError(f"centering matrix size must be >= 1, got {size}")
    return np.eye(size) - np.full((size, size), 1.0 / size)


def cross_distances(x: PointSet) -> np.ndarray:
    """``M x K`` matrix of receiver-to-source Euclidean distances."""
    diff = x.receivers[:, :, None] - x.sources[:, None, :]
    return np.sqrt(np.sum(diff**2, axis=0))


def gram_from_points(x: PointSet, center: bool = True) -> GramMatrix:
    coords = x.coords
    if center:
        coords = coords - coords.mean(axis=1, keepdims=True)
    g = coords.T @ coords
    return GramMatrix(0.5 * (g + g.T), x.m, x.k)


def edm_from_gram(g) -> np.ndarray:
    """Squared-distance matrix ``diag(G) 1^T - 2 G + 1 diag(G)^T``."""
    g = g.g if isinstance(g, GramMatrix) else np.asarray(g, dtype=float)
    diag = np.diag(g)
    return diag[:, None] - 2.0 * g + diag[None, :]


def cross_block(g: GramMatrix) -> np.ndarray:
    """Receiver-rows by source-columns block of the EDM (squared cross distances)."""
    return edm_from_gram(g)[: g.m, g.m :]


def _sorted_eigh(g: np.ndarray):
    sym = 0.5 * (g + g.T)
    w, v = np.linalg.eigh(sym)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    # deterministic sign: largest-magnitude entry of every eigenvector is positive
    pivot = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[pivot, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return w, v * signs


def points_from_gram(g: GramMatrix, d: int) -> PointSet:
    """Factor a Gram matrix into ``d``-dimensional coordinates.

    The top ``d`` eigenpairs are kept, negative eigenvalues are clamped to
    zero and the coordinates are ``diag(sqrt(lambda)) V^T`` so that the
    result reproduces ``G`` exactly when its rank is at most ``d``.
    """
    if d > g.n or d < 1:
        raise InvalidDimensionError(f"cannot extract d={d} coordinates from an order-{g.n} Gram matrix")
    w, v = _sorted_eigh(g.g)
    lam = np.clip(w[:d], 0.0, None)
    coords = np.sqrt(lam)[:, None] * v[:, :d].T
    return PointSet(coords, g.m, g.k)


def spectral_tail_mass(g: GramMatrix, d: int) -> float:
    """Fraction of the (clamped) spectrum beyond the top ``d`` eigenvalues."""
    w, _ = _sorted_eigh(g.g)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        return 0.0
    return float(w[d:].sum() / total)
