"""Leader-follower sensing topology.

Nodes are numbered 1..n. An edge ``(i, j)`` means node ``i`` receives
information from node ``j``; ``j`` is then a neighbor of ``i``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import CycleDetected

# Rule identifiers used in validation reports.
ACYCLIC = "acyclic"
TWO_NEIGHBORS = "two-neighbors"
NO_COLLOCATION = "no-collocation"
TWO_LEADERS = "two-leaders"
LEADER_NO_INPUT = "leader-no-input"


@dataclass(frozen=True)
class Violation:
    rule: str
    nodes: tuple[int, ...]
    message: str

    def to_dict(self) -> dict:
        return {"rule": self.rule, "nodes": list(self.nodes), "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    """Ordered collection of violations; empty means every check passed."""

    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __add__(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(self.violations + other.violations)

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def by_rule(self, rule: str) -> list[Violation]:
        return [v for v in self.violations if v.rule == rule]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}

    def __str__(self) -> str:
        if self.ok:
            return "no violations"
        return "\n".join(f"[{v.rule}] {v.message}" for v in self.violations)


@dataclass(frozen=True)
class FormationGraph:
    """Directed sensing graph with a designated leader set."""

    n: int
    leaders: tuple[int, ...]
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "leaders", tuple(int(i) for i in self.leaders))
        object.__setattr__(
            self, "edges", frozenset((int(i), int(j)) for i, j in self.edges)
        )
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        if len(set(self.leaders)) != len(self.leaders):
            raise ValueError(f"duplicate leader ids in {self.leaders}")
        for i in self.leaders:
            self._check_id(i)
        for i, j in self.edges:
            self._check_id(i)
            self._check_id(j)

    def _check_id(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise ValueError(f"node id {i} outside 1..{self.n}")

    @classmethod
    def from_neighbors(
        cls, n: int, leaders: Iterable[int], neighbors: Mapping[int, Iterable[int]]
    ) -> "FormationGraph":
        edges = {(int(i), int(j)) for i, nbrs in neighbors.items() for j in nbrs}
        return cls(n=n, leaders=tuple(leaders), edges=frozenset(edges))

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    @property
    def followers(self) -> tuple[int, ...]:
        lead = set(self.leaders)
        return tuple(i for i in self.nodes if i not in lead)

    @property
    def n_leaders(self) -> int:
        return len(self.leaders)

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Neighbors of ``i`` in ascending order."""
        return tuple(sorted(j for a, j in self.edges if a == i))

    def neighbor_map(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {i: [] for i in self.nodes}
        for i, j in self.edges:
            out[i].append(j)
        return {i: tuple(sorted(v)) for i, v in out.items()}

    def with_edge(self, i: int, j: int) -> "FormationGraph":
        return FormationGraph(self.n, self.leaders, self.edges | {(i, j)})

    def find_cycle(self) -> list[int] | None:
        """Return the nodes of one directed cycle, or ``None`` if acyclic."""
        nbrs = self.neighbor_map()
        color = dict.fromkeys(self.nodes, 0)  # 0 new, 1 on stack, 2 done
        for root in self.nodes:
            if color[root]:
                continue
            stack: list[tuple[int, Iterator[int]]] = [(root, iter(nbrs[root]))]
            path = [root]
            color[root] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    color[node] = 2
                    stack.pop()
                    path.pop()
                elif color[nxt] == 1:
                    return path[path.index(nxt):]
                elif color[nxt] == 0:
                    color[nxt] = 1
                    path.append(nxt)
                    stack.append((nxt, iter(nbrs[nxt])))
        return None

    def is_acyclic(self) -> bool:
        return self.find_cycle() is None


def standard_laplacian(g: FormationGraph) -> np.ndarray:
    """Scalar in-degree Laplacian: degree on the diagonal, -1 per edge."""
    L = np.zeros((g.n, g.n))
    for i, j in g.edges:
        if i != j:
            L[i - 1, j - 1] -= 1.0
            L[i - 1, i - 1] += 1.0
    return L


def validate_topology(g: FormationGraph) -> ValidationReport:
    """Check acyclicity, leader isolation, follower degree and leader count.

    Violations are collected rather than raised so callers can show every
    problem at once. The result does not depend on edge-set ordering.
    """
    found: list[Violation] = []
    cycle = g.find_cycle()
    if cycle is not None:
        # rotate so the smallest id leads; keeps the message deterministic
        k = cycle.index(min(cycle))
        cycle = cycle[k:] + cycle[:k]
        chain = " -> ".join(str(c) for c in cycle + [cycle[0]])
        found.append(
            Violation(ACYCLIC, tuple(cycle), f"graph contains a cycle: {chain}")
        )
    nbrs = g.neighbor_map()
    for i in g.leaders:
        if nbrs[i]:
            found.append(
                Violation(
                    LEADER_NO_INPUT,
                    (i,),
                    f"leader {i} receives information from {list(nbrs[i])}; "
                    "leaders must have no in-edges",
                )
            )
    for i in g.followers:
        d = len(nbrs[i])
        if d != 2:
            found.append(
                Violation(
                    TWO_NEIGHBORS,
                    (i,),
                    f"follower {i} has {d} neighbors; each follower needs exactly two",
                )
            )
    if g.n_leaders != 2:
        found.append(
            Violation(
                TWO_LEADERS,
                tuple(g.leaders),
                f"formation has {g.n_leaders} leaders; exactly two are required",
            )
        )
    return ValidationReport(tuple(found))


@dataclass(frozen=True)
class Permutation:
    """Node renumbering. ``order[k]`` is the original id placed at position k+1."""

    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if sorted(self.order) != list(range(1, len(self.order) + 1)):
            raise ValueError(f"{self.order} is not a permutation of 1..n")

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def is_identity(self) -> bool:
        return self.order == tuple(range(1, self.n + 1))

    def new_id(self, old: int) -> int:
        return self.order.index(old) + 1

    def mapping(self) -> dict[int, int]:
        """Original id -> new id."""
        return {old: k + 1 for k, old in enumerate(self.order)}

    def matrix(self) -> np.ndarray:
        """Permutation matrix P with ``P @ x`` reordering node-indexed vectors."""
        P = np.zeros((self.n, self.n))
        for k, old in enumerate(self.order):
            P[k, old - 1] = 1.0
        return P

    def block_matrix(self, dim: int = 2) -> np.ndarray:
        return np.kron(self.matrix(), np.eye(dim))

    def conjugate(self, M: np.ndarray) -> np.ndarray:
        """Return ``P M P^T`` for node-level (n x n) or block-level (2n x 2n) M."""
        P = self.matrix() if M.shape[0] == self.n else self.block_matrix(M.shape[0] // self.n)
        return P @ M @ P.T

    def relabel(self, g: FormationGraph) -> FormationGraph:
        m = self.mapping()
        return FormationGraph(
            n=g.n,
            leaders=tuple(m[i] for i in g.leaders),
            edges=frozenset((m[i], m[j]) for i, j in g.edges),
        )

    def relabel_report(self, report: ValidationReport) -> ValidationReport:
        m = self.mapping()
        return ValidationReport(
            tuple(Violation(v.rule, tuple(m[i] for i in v.nodes), v.message) for v in report)
        )


def topological_renumbering(g: FormationGraph) -> Permutation:
    """Renumber nodes so every follower comes after all of its neighbors.

    Leaders keep their relative order and occupy positions 1..n_l. Among
    followers whose neighbors are all placed, the smallest original id goes
    first, so the result is deterministic.
    """
    cycle = g.find_cycle()
    if cycle is not None:
        raise CycleDetected(f"graph contains a cycle through nodes {cycle}")
    nbrs = g.neighbor_map()
    placed = set(g.leaders)
    order: list[int] = list(g.leaders)
    dependents: dict[int, list[int]] = {i: [] for i in g.nodes}
    pending: dict[int, int] = {}
    for i in g.followers:
        deps = [j for j in set(nbrs[i]) if j not in placed]
        pending[i] = len(deps)
        for j in deps:
            dependents[j].append(i)
    ready = [i for i, c in pending.items() if c == 0]
    heapq.heapify(ready)
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for d in dependents[i]:
            pending[d] -= 1
            if pending[d] == 0:
                heapq.heappush(ready, d)
    # Cycles through leaders are caught above; anything left means one
    # survived among followers, which find_cycle already rules out.
    assert len(order) == g.n
    return Permutation(tuple(order))


def is_lower_triangular(M: np.ndarray, tol: float = 0.0) -> bool:
    return bool(np.all(np.abs(np.triu(M, k=1)) <= tol))


def ancestor_order(order: Sequence[int], g: FormationGraph) -> bool:
    """True if in ``order`` every node appears after all of its neighbors."""
    pos = {v: k for k, v in enumerate(order)}
    return all(pos[j] < pos[i] for i, j in g.edges)
