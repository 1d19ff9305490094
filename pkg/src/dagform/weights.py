"""Scaled-rotation edge weights and per-follower weight synthesis.

A block [[a, -b], [b, a]] behaves exactly like the complex number a + ib,
so the closed form below is written with complex arithmetic and converted
to 2x2 real blocks at the boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import CollocatedNeighbors, CollocatedTriple, ZeroParameters
from .geometry import COLLOCATION_TOL, as_points

SMALL_BLOCK_NORM = 1e-6


class SmallWeightWarning(UserWarning):
    """An edge block is close to zero, so the edge barely transmits anything."""


@dataclass(frozen=True)
class EdgeWeight:
    a: float
    b: float

    @classmethod
    def from_complex(cls, w: complex) -> "EdgeWeight":
        return cls(float(w.real), float(w.imag))

    @classmethod
    def from_matrix(cls, M, tol: float = 1e-12) -> "EdgeWeight":
        """Build from a 2x2 block, rejecting anything that is not a scaled rotation."""
        M = np.asarray(M, dtype=float)
        if M.shape != (2, 2):
            raise ValueError(f"edge weight must be 2x2, got {M.shape}")
        scale = max(1.0, float(np.abs(M).max()))
        if abs(M[0, 0] - M[1, 1]) > tol * scale or abs(M[0, 1] + M[1, 0]) > tol * scale:
            raise ValueError(f"block {M.tolist()} is not of the form [[a, -b], [b, a]]")
        return cls(float(M[0, 0]), float(M[1, 0]))

    @classmethod
    def identity(cls) -> "EdgeWeight":
        return cls(1.0, 0.0)

    @classmethod
    def zero(cls) -> "EdgeWeight":
        return cls(0.0, 0.0)

    def to_complex(self) -> complex:
        return complex(self.a, self.b)

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, -self.b], [self.b, self.a]])

    @property
    def c(self) -> float:
        """Magnitude; the block equals c times a rotation matrix."""
        return math.hypot(self.a, self.b)

    @property
    def angle(self) -> float:
        return math.atan2(self.b, self.a)

    def transpose(self) -> "EdgeWeight":
        return EdgeWeight(self.a, -self.b)

    def inverse(self) -> "EdgeWeight":
        c2 = self.a * self.a + self.b * self.b
        if c2 == 0.0:
            raise ZeroDivisionError("zero edge weight has no inverse")
        return EdgeWeight(self.a / c2, -self.b / c2)

    def __add__(self, other: "EdgeWeight") -> "EdgeWeight":
        return EdgeWeight(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "EdgeWeight") -> "EdgeWeight":
        return EdgeWeight(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "EdgeWeight":
        return EdgeWeight(-self.a, -self.b)

    def __mul__(self, other: "EdgeWeight | float") -> "EdgeWeight":
        if isinstance(other, EdgeWeight):
            return EdgeWeight.from_complex(self.to_complex() * other.to_complex())
        return EdgeWeight(self.a * other, self.b * other)

    __rmul__ = __mul__

    def __matmul__(self, v):
        return self.matrix() @ np.asarray(v, dtype=float)


@dataclass(frozen=True)
class FollowerWeightTriple:
    """Laplacian row blocks of one follower.

    ``w_ij`` and ``w_ik`` sit at the neighbor columns ``j < k`` and ``w_ii``
    on the diagonal. ``c1``/``c2`` are the free parameters they were
    generated from, or ``None`` for blocks supplied directly.
    """

    follower: int
    neighbors: tuple[int, int]
    w_ij: EdgeWeight
    w_ik: EdgeWeight
    w_ii: EdgeWeight
    c1: float | None = None
    c2: float | None = None

    def blocks(self) -> dict[int, EdgeWeight]:
        j, k = self.neighbors
        return {j: self.w_ij, k: self.w_ik, self.follower: self.w_ii}

    def row_sum(self) -> EdgeWeight:
        return self.w_ij + self.w_ik + self.w_ii

    def nominal_residual(self, r) -> np.ndarray:
        """W_ij r_j + W_ik r_k + W_ii r_i; zero when the row annihilates r."""
        pts = as_points(r)
        i, (j, k) = self.follower, self.neighbors
        return self.w_ij @ pts[j - 1] + self.w_ik @ pts[k - 1] + self.w_ii @ pts[i - 1]


def _complex_point(pts: np.ndarray, node: int) -> complex:
    x, y = pts[node - 1]
    return complex(x, y)


def synthesize_follower_weights(
    i: int,
    neighbors: tuple[int, int],
    r,
    c1: float,
    c2: float,
    tol: float = COLLOCATION_TOL,
) -> FollowerWeightTriple:
    """Row blocks of follower ``i`` that vanish on translations and on ``r``.

    With zeta = c1 + i c2 and points read as complex numbers the blocks are
    zeta (r_k - r_i), zeta (r_i - r_j) and zeta (r_j - r_k) for neighbor
    ``j``, neighbor ``k`` and the diagonal respectively. Their sum is zero
    and so is the r-weighted sum, for any nonzero zeta.
    """
    if c1 == 0 and c2 == 0:
        raise ZeroParameters(f"follower {i}: c1 and c2 are both zero")
    j, k = neighbors
    pts = as_points(r)
    pi, pj, pk = (_complex_point(pts, v) for v in (i, j, k))
    for (u, pu), (v, pv) in (((i, pi), (j, pj)), ((i, pi), (k, pk)), ((j, pj), (k, pk))):
        if abs(pu - pv) < tol:
            raise CollocatedTriple(f"follower {i}: nodes {u} and {v} are collocated")
    zeta = complex(c1, c2)
    triple = FollowerWeightTriple(
        follower=i,
        neighbors=(j, k),
        w_ij=EdgeWeight.from_complex(zeta * (pk - pi)),
        w_ik=EdgeWeight.from_complex(zeta * (pi - pj)),
        w_ii=EdgeWeight.from_complex(zeta * (pj - pk)),
        c1=float(c1),
        c2=float(c2),
    )
    for col, w in ((j, triple.w_ij), (k, triple.w_ik), (i, triple.w_ii)):
        if w.c < SMALL_BLOCK_NORM:
            warnings.warn(
                f"follower {i}: block at column {col} has norm {w.c:.3g}",
                SmallWeightWarning,
                stacklevel=2,
            )
    return triple


def normalize_follower_weights(
    i: int, neighbors: tuple[int, int], r, tol: float = COLLOCATION_TOL
) -> FollowerWeightTriple:
    """Choose (c1, c2) so that the diagonal block is the identity."""
    j, k = neighbors
    pts = as_points(r)
    d = _complex_point(pts, j) - _complex_point(pts, k)
    if abs(d) < tol:
        raise CollocatedNeighbors(f"follower {i}: neighbors {j} and {k} are collocated")
    zeta = 1.0 / d
    triple = synthesize_follower_weights(i, (j, k), pts, zeta.real, zeta.imag, tol)
    # 1/d * d can be off by an ulp; the diagonal is the identity by design
    return FollowerWeightTriple(
        triple.follower, triple.neighbors, triple.w_ij, triple.w_ik,
        EdgeWeight.identity(), triple.c1, triple.c2,
    )


def synthesize_weights(
    neighbors: Mapping[int, tuple[int, ...]],
    r,
    params: Mapping[int, tuple[float, float]] | None = None,
) -> dict[int, FollowerWeightTriple]:
    """Weights for every follower; normalized unless (c1, c2) is given for it."""
    params = params or {}
    out = {}
    for i, nbrs in sorted(neighbors.items()):
        pair = tuple(sorted(nbrs))
        if len(pair) != 2:
            raise ValueError(f"follower {i} must have exactly two neighbors, has {len(pair)}")
        if i in params:
            c1, c2 = params[i]
            out[i] = synthesize_follower_weights(i, pair, r, c1, c2)
        else:
            out[i] = normalize_follower_weights(i, pair, r)
    return out
