"""Reference data for the 8-agent example and random formation generators."""

from __future__ import annotations

import numpy as np

from .graph import FormationGraph

REFERENCE_NOMINAL = np.array(
    [[1, 0], [-1, 0], [1, 1], [-1, 1], [-2, 0], [-1, -1], [1, -1], [2, 0]], dtype=float
)
REFERENCE_LEADERS = (1, 2)
REFERENCE_NEIGHBORS = {3: (1, 2), 4: (2, 3), 5: (2, 4), 6: (2, 5), 7: (1, 6), 8: (1, 7)}
REFERENCE_SEED = 42

# Published row blocks, keyed by (row, column).
REFERENCE_BLOCKS = {
    (3, 1): [[-1, 0.5], [-0.5, -1]], (3, 2): [[0, -0.5], [0.5, 0]], (3, 3): [[1, 0], [0, 1]],
    (4, 2): [[-0.8, -0.4], [0.4, -0.8]], (4, 3): [[-0.2, 0.4], [-0.4, -0.2]], (4, 4): [[1, 0], [0, 1]],
    (5, 2): [[-1, -1], [1, -1]], (5, 4): [[0, 1], [-1, 0]], (5, 5): [[1, 0], [0, 1]],
    (6, 2): [[-1, -1], [1, -1]], (6, 5): [[0, 1], [-1, 0]], (6, 6): [[1, 0], [0, 1]],
    (7, 1): [[-0.8, -0.4], [0.4, -0.8]], (7, 6): [[-0.2, 0.4], [-0.4, -0.2]], (7, 7): [[1, 0], [0, 1]],
    (8, 1): [[-1, -1], [1, -1]], (8, 7): [[0, 1], [-1, 0]], (8, 8): [[1, 0], [0, 1]],
}


def reference_graph() -> FormationGraph:
    return FormationGraph.from_neighbors(8, REFERENCE_LEADERS, REFERENCE_NEIGHBORS)


def random_initial(rng: np.random.Generator, nominal, leaders, low=-5.0, high=5.0) -> np.ndarray:
    """Leaders at their nominal points, followers uniform in [low, high]^2."""
    nominal = np.asarray(nominal, dtype=float)
    p = np.empty_like(nominal)
    lead = [i - 1 for i in leaders]
    fol = [i for i in range(nominal.shape[0]) if i not in set(lead)]
    p[lead] = nominal[lead]
    p[fol] = rng.uniform(low, high, size=(len(fol), 2))
    return p.reshape(-1)


def random_dag_formation(
    rng: np.random.Generator, n: int, spread: float = 10.0, min_sep: float = 0.1
) -> tuple[FormationGraph, np.ndarray]:
    """Two leaders (nodes 1, 2) and followers picking two earlier nodes each.

    Nominal points are drawn uniformly in [-spread, spread]^2 and redrawn
    until every pair is at least ``min_sep`` apart.
    """
    if n < 3:
        raise ValueError("need at least one follower")
    nbrs = {}
    for i in range(3, n + 1):
        j, k = rng.choice(np.arange(1, i), size=2, replace=False)
        nbrs[i] = (int(min(j, k)), int(max(j, k)))
    while True:
        r = rng.uniform(-spread, spread, size=(n, 2))
        d = np.linalg.norm(r[:, None] - r[None, :], axis=-1) + np.eye(n) * 1e9
        if d.min() >= min_sep:
            break
    return FormationGraph.from_neighbors(n, (1, 2), nbrs), r


def shuffle_labels(
    rng: np.random.Generator, g: FormationGraph, r: np.ndarray | None = None
) -> tuple[FormationGraph, np.ndarray | None]:
    """Relabel nodes by a random permutation (leaders included)."""
    perm = rng.permutation(g.n) + 1
    m = {old: int(perm[old - 1]) for old in g.nodes}
    h = FormationGraph(
        g.n, tuple(m[i] for i in g.leaders), frozenset((m[i], m[j]) for i, j in g.edges)
    )
    if r is None:
        return h, None
    r2 = np.empty_like(r)
    for old in g.nodes:
        r2[m[old] - 1] = r[old - 1]
    return h, r2
