"""Similar formation control of planar multi-agent systems over DAGs.

Typical use::

    from dagform import reference, weights, laplacian, simulator

    g, r = reference.reference_graph(), reference.REFERENCE_NOMINAL
    triples = weights.synthesize_weights({i: g.neighbors(i) for i in g.followers}, r)
    L = laplacian.normalize_laplacian(laplacian.assemble_laplacian(g, triples))
    assert laplacian.localizability_report(L).certified
"""

__version__ = "0.1.0"

from .errors import FormationError  # noqa: E402
from .geometry import (  # noqa: E402
    SimilarityTransform,
    apply_similarity,
    check_collocation,
    similar_image_basis,
    solve_similarity_params,
)
from .graph import FormationGraph, topological_renumbering, validate_topology  # noqa: E402
from .laplacian import (  # noqa: E402
    BlockLaplacian,
    assemble_laplacian,
    desired_followers,
    localizability_report,
    normalize_laplacian,
)
from .simulator import (  # noqa: E402
    LeaderSchedule,
    closed_form_followers,
    control_input,
    simulate,
    tracking_error,
)
from .weights import (  # noqa: E402
    EdgeWeight,
    normalize_follower_weights,
    synthesize_follower_weights,
    synthesize_weights,
)

__all__ = [
    "FormationError", "SimilarityTransform", "apply_similarity", "check_collocation",
    "similar_image_basis", "solve_similarity_params", "FormationGraph",
    "topological_renumbering", "validate_topology", "BlockLaplacian",
    "assemble_laplacian", "desired_followers", "localizability_report",
    "normalize_laplacian", "LeaderSchedule", "closed_form_followers", "control_input",
    "simulate", "tracking_error", "EdgeWeight", "normalize_follower_weights",
    "synthesize_follower_weights", "synthesize_weights",
]
