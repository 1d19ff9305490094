"""Assembly of block Laplacians and their localizability analysis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import SingularDiagonalBlock, SingularFollowerBlock, TopologyMismatch
from .geometry import similar_image_basis, stack
from .graph import FormationGraph, topological_renumbering, validate_topology
from .weights import EdgeWeight, FollowerWeightTriple

RANK_TOL = 1e-9


def dofs(nodes) -> np.ndarray:
    """Stacked-vector indices (x then y) of the given 1-based nodes."""
    idx = np.asarray(list(nodes), dtype=int) - 1
    return np.column_stack([2 * idx, 2 * idx + 1]).reshape(-1)


@dataclass(frozen=True, eq=False)
class BlockLaplacian:
    """Dense 2n x 2n matrix-weighted Laplacian in original node order.

    Leader block-rows are zero. ``L_fl`` and ``L_ff`` select follower rows
    and leader/follower columns, so they match the partitioned form
    whenever leaders are numbered first.
    """

    matrix: np.ndarray
    graph: FormationGraph

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.shape != (2 * self.graph.n, 2 * self.graph.n):
            raise ValueError(f"matrix shape {M.shape} does not match n={self.graph.n}")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def n_l(self) -> int:
        return self.graph.n_leaders

    @property
    def leaders(self) -> tuple[int, ...]:
        return self.graph.leaders

    @property
    def followers(self) -> tuple[int, ...]:
        return self.graph.followers

    @property
    def leader_dofs(self) -> np.ndarray:
        return dofs(self.leaders)

    @property
    def follower_dofs(self) -> np.ndarray:
        return dofs(self.followers)

    @property
    def L_ff(self) -> np.ndarray:
        f = self.follower_dofs
        return self.matrix[np.ix_(f, f)]

    @property
    def L_fl(self) -> np.ndarray:
        return self.matrix[np.ix_(self.follower_dofs, self.leader_dofs)]

    def block(self, i: int, j: int) -> np.ndarray:
        return self.matrix[2 * i - 2 : 2 * i, 2 * j - 2 : 2 * j]

    def follower_row(self, i: int) -> np.ndarray:
        return self.matrix[2 * i - 2 : 2 * i, :]


def assemble_laplacian(
    g: FormationGraph, triples: Mapping[int, FollowerWeightTriple]
) -> BlockLaplacian:
    """Place each follower's row blocks into a 2n x 2n matrix."""
    followers = set(g.followers)
    extra = set(triples) - followers
    missing = followers - set(triples)
    if extra or missing:
        raise TopologyMismatch(
            f"weights given for non-followers {sorted(extra)}, missing for {sorted(missing)}"
        )
    M = np.zeros((2 * g.n, 2 * g.n))
    for i, t in triples.items():
        if t.follower != i:
            raise TopologyMismatch(f"triple for follower {t.follower} stored under key {i}")
        if set(t.neighbors) != set(g.neighbors(i)) or len(g.neighbors(i)) != 2:
            raise TopologyMismatch(
                f"follower {i}: weights reference neighbors {list(t.neighbors)}, "
                f"graph has {list(g.neighbors(i))}"
            )
        for col, w in t.blocks().items():
            M[2 * i - 2 : 2 * i, 2 * col - 2 : 2 * col] = w.matrix()
    return BlockLaplacian(M, g)


def normalize_laplacian(L: BlockLaplacian, tol: float = 1e-14) -> BlockLaplacian:
    """Left-multiply each follower row by W_ii^T / c_ii^2 so its diagonal is I."""
    M = np.array(L.matrix)
    for i in L.followers:
        rows = slice(2 * i - 2, 2 * i)
        w = EdgeWeight.from_matrix(L.block(i, i), tol=1e-9)
        c2 = w.a * w.a + w.b * w.b
        if c2 <= tol:
            raise SingularDiagonalBlock(i)
        E = w.transpose().matrix() / c2
        M[rows, :] = E @ M[rows, :]
        M[rows, 2 * i - 2 : 2 * i] = np.eye(2)
    return BlockLaplacian(M, L.graph)


def numerical_rank(M: np.ndarray, rel_tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def is_nonsingular(M: np.ndarray, rel_tol: float = RANK_TOL) -> bool:
    if M.size == 0:
        return True
    sign, _ = np.linalg.slogdet(M)
    return bool(sign != 0 and numerical_rank(M, rel_tol) == M.shape[0])


def structured_ff_spectrum(L: BlockLaplacian) -> np.ndarray | None:
    """Eigenvalues of L_ff read off its diagonal blocks.

    Valid when renumbering makes L_ff exactly block lower triangular with
    2x2 diagonal blocks (any DAG assembly); each block a + ib then
    contributes the pair a +/- ib. Returns ``None`` when no renumbering
    gives that structure. Avoids the ill-conditioning of dense eigensolvers on the
    defective unit spectrum of normalized assemblies.
    """
    g = L.graph
    if not g.is_acyclic():
        return None
    perm = topological_renumbering(g)
    order = [i for i in perm.order if i not in set(g.leaders)]
    for a, i in enumerate(order):
        for j in order[a + 1 :]:
            if np.any(L.block(i, j) != 0.0):
                return None
    eig = []
    for i in order:
        B = L.block(i, i)
        if B[0, 0] == B[1, 1] and B[0, 1] == -B[1, 0]:
            eig += [complex(B[0, 0], B[1, 0]), complex(B[0, 0], -B[1, 0])]
        else:
            eig += list(np.linalg.eigvals(B).astype(complex))
    return np.array(eig, dtype=complex)


@dataclass(frozen=True)
class LocalizabilityReport:
    ff_nonsingular: bool
    null_space_dim: int
    ff_eigenvalues: np.ndarray
    min_real_part: float
    topology_valid: bool
    ff_determinant: float

    @property
    def certified(self) -> bool:
        return (
            self.topology_valid
            and self.ff_nonsingular
            and self.null_space_dim == 4
            and self.min_real_part > 0
        )

    def to_dict(self) -> dict:
        ev = self.ff_eigenvalues
        return {
            "certified": self.certified,
            "topology_valid": self.topology_valid,
            "ff_nonsingular": self.ff_nonsingular,
            "null_space_dim": self.null_space_dim,
            "min_real_part": self.min_real_part,
            "max_real_part": float(ev.real.max()) if ev.size else None,
            "max_abs_imag": float(np.abs(ev.imag).max()) if ev.size else None,
            "ff_determinant": self.ff_determinant,
            "ff_eigenvalues": [[float(z.real), float(z.imag)] for z in ev],
        }


def localizability_report(
    L: BlockLaplacian, g: FormationGraph | None = None, rel_tol: float = RANK_TOL
) -> LocalizabilityReport:
    """Check that leader positions pin down the followers uniquely.

    Never raises; formations outside the admissible class come back with
    ``certified`` false and whatever could still be computed.
    """
    g = L.graph if g is None else g
    Lff = L.L_ff
    ev = structured_ff_spectrum(L)
    if ev is None:
        ev = np.linalg.eigvals(Lff) if Lff.size else np.zeros(0, dtype=complex)
    return LocalizabilityReport(
        ff_nonsingular=is_nonsingular(Lff, rel_tol),
        null_space_dim=2 * L.n - numerical_rank(L.matrix, rel_tol),
        ff_eigenvalues=ev,
        min_real_part=float(ev.real.min()) if ev.size else float("inf"),
        topology_valid=validate_topology(g).ok,
        ff_determinant=float(np.linalg.det(Lff)) if Lff.size else 1.0,
    )


def desired_followers(L: BlockLaplacian, p_l, rel_tol: float = RANK_TOL) -> np.ndarray:
    """Follower positions solving L_ff p_f = -L_fl p_l, stacked."""
    Lff = L.L_ff
    if not is_nonsingular(Lff, rel_tol):
        raise SingularFollowerBlock("L_ff is singular; followers are not localizable")
    return np.linalg.solve(Lff, -L.L_fl @ stack(p_l))


def null_space(M: np.ndarray, rel_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of ``M``."""
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > rel_tol * s[0])) if s.size and s[0] > 0 else 0
    return vt[rank:].T


def nominal_residual(L: BlockLaplacian, r) -> float:
    """Largest |L v| over the similar-image basis v; zero for a valid design."""
    basis = similar_image_basis(r)
    return float(max(np.linalg.norm(L.matrix @ v) for v in basis.vectors()))
