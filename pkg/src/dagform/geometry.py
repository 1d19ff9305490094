"""Planar similarity transforms and the similar image of a configuration.

Configurations are ``(n, 2)`` arrays of points. Stacked vectors are the
row-major flattening ``[x1, y1, x2, y2, ...]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CollocatedNodes, DegenerateLeaders, NonPositiveScale, TooFewLeaders
from .graph import NO_COLLOCATION, ValidationReport, Violation

COLLOCATION_TOL = 1e-9
IMAGE_TOL = 1e-8

TWO_PI = 2.0 * math.pi


def as_points(r) -> np.ndarray:
    """Coerce a configuration (points or stacked vector) to an (n, 2) array."""
    a = np.asarray(r, dtype=float)
    if a.ndim == 1:
        if a.size % 2:
            raise ValueError("stacked configuration must have even length")
        a = a.reshape(-1, 2)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"expected (n, 2) points, got shape {a.shape}")
    return a


def stack(points) -> np.ndarray:
    return as_points(points).reshape(-1).copy()


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def perp(r) -> np.ndarray:
    """Rotate every point by +90 degrees: (x, y) -> (-y, x)."""
    p = as_points(r)
    return np.column_stack([-p[:, 1], p[:, 0]])


@dataclass(frozen=True)
class SimilarityTransform:
    """Uniform scaling, rotation by ``theta`` and translation by ``b``."""

    alpha: float = 1.0
    theta: float = 0.0
    b: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.alpha > 0:
            raise NonPositiveScale(f"scale must be positive, got {self.alpha}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)
        bx, by = self.b
        object.__setattr__(self, "b", (float(bx), float(by)))

    @property
    def R(self) -> np.ndarray:
        return rotation(self.theta)

    @property
    def translation(self) -> np.ndarray:
        return np.array(self.b)

    def matrix(self) -> np.ndarray:
        """The 2x2 linear part alpha * R."""
        return self.alpha * self.R

    def then(self, other: "SimilarityTransform") -> "SimilarityTransform":
        """Transform equal to applying ``self`` first and ``other`` second."""
        b = other.matrix() @ self.translation + other.translation
        return SimilarityTransform(
            self.alpha * other.alpha, self.theta + other.theta, tuple(b)
        )

    def inverse(self) -> "SimilarityTransform":
        inv = SimilarityTransform(1.0 / self.alpha, -self.theta)
        return SimilarityTransform(inv.alpha, inv.theta, tuple(-(inv.matrix() @ self.translation)))


def apply_similarity(T: SimilarityTransform, r) -> np.ndarray:
    """Map each point r_i to alpha * R(theta) r_i + b."""
    if not T.alpha > 0:
        raise NonPositiveScale(f"scale must be positive, got {T.alpha}")
    pts = as_points(r)
    return pts @ T.matrix().T + T.translation


def check_collocation(r, tol: float = COLLOCATION_TOL) -> ValidationReport:
    """Report every pair of points closer than ``tol`` (absolute, meters)."""
    pts = as_points(r)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    ii, jj = np.nonzero(np.triu(d < tol, k=1))
    return ValidationReport(
        tuple(
            Violation(
                NO_COLLOCATION,
                (int(i) + 1, int(j) + 1),
                f"nodes {i + 1} and {j + 1} are collocated "
                f"(distance {d[i, j]:.3g} < {tol:g})",
            )
            for i, j in zip(ii, jj)
        )
    )


@dataclass(frozen=True)
class SimilarImageBasis:
    r: np.ndarray
    r_perp: np.ndarray
    ones_x: np.ndarray
    ones_y: np.ndarray

    def matrix(self) -> np.ndarray:
        """The 2n x 4 matrix with columns (r, r', 1', 1'')."""
        return np.column_stack([self.r, self.r_perp, self.ones_x, self.ones_y])

    def vectors(self) -> list[np.ndarray]:
        return [self.r, self.r_perp, self.ones_x, self.ones_y]


def similar_image_basis(r, tol: float = COLLOCATION_TOL) -> SimilarImageBasis:
    """Spanning vectors of the set of all similar copies of ``r``.

    Raises :class:`CollocatedNodes` when two points coincide, since the four
    vectors are then no longer independent.
    """
    pts = as_points(r)
    report = check_collocation(pts, tol)
    if pts.shape[0] < 2 or not report.ok:
        raise CollocatedNodes(str(report) if not report.ok else "need at least two points")
    n = pts.shape[0]
    return SimilarImageBasis(
        r=stack(pts),
        r_perp=stack(perp(pts)),
        ones_x=np.tile([1.0, 0.0], n),
        ones_y=np.tile([0.0, 1.0], n),
    )


def similarity_design_matrix(r) -> np.ndarray:
    """Stacked matrix whose product with z = (aR11, aR21, b1, b2) gives p."""
    pts = as_points(r)
    n = pts.shape[0]
    A = np.zeros((2 * n, 4))
    A[0::2, 0] = pts[:, 0]
    A[0::2, 1] = -pts[:, 1]
    A[1::2, 0] = pts[:, 1]
    A[1::2, 1] = pts[:, 0]
    A[0::2, 2] = 1.0
    A[1::2, 3] = 1.0
    return A


@dataclass(frozen=True)
class SimilarityParams:
    z: np.ndarray
    residual: float
    scale: float = 1.0  # norm of the positions that were fitted

    @property
    def alpha(self) -> float:
        return math.hypot(self.z[0], self.z[1])

    @property
    def theta(self) -> float:
        return math.atan2(self.z[1], self.z[0]) % TWO_PI

    @property
    def b(self) -> np.ndarray:
        return np.array(self.z[2:4])

    def feasible(self, tol: float = IMAGE_TOL) -> bool:
        """Whether the fitted positions lie in the similar image."""
        return self.residual <= tol * (1.0 + self.scale)

    def transform(self) -> SimilarityTransform:
        return SimilarityTransform(self.alpha, self.theta, tuple(self.b))


def solve_similarity_params(
    p_l, r_l, tol: float = COLLOCATION_TOL
) -> SimilarityParams:
    """Least-squares fit of a similarity taking ``r_l`` to ``p_l``.

    Solves the normal equations of ``p_l = A(r_l) z``. A small residual
    certifies that the leader positions are a similar copy of their
    nominal positions; with exactly two leaders the system is square and
    always solvable.
    """
    r_pts = as_points(r_l)
    p = stack(p_l)
    if r_pts.shape[0] < 2:
        raise TooFewLeaders(f"need at least two leaders, got {r_pts.shape[0]}")
    if p.size != 2 * r_pts.shape[0]:
        raise ValueError("p_l and r_l must describe the same number of points")
    if not check_collocation(r_pts, tol).ok:
        raise DegenerateLeaders("leader nominal positions are collocated")
    A = similarity_design_matrix(r_pts)
    G = A.T @ A
    z = np.linalg.solve(G, A.T @ p)
    res = float(np.linalg.norm(p - A @ z))
    return SimilarityParams(z=z, residual=res, scale=float(np.linalg.norm(p)))
