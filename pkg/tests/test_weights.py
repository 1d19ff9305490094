import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dagform.errors import CollocatedNeighbors, CollocatedTriple, ZeroParameters
from dagform.geometry import SimilarityTransform
from dagform.reference import REFERENCE_BLOCKS, REFERENCE_NEIGHBORS
from dagform.weights import (
    EdgeWeight,
    SmallWeightWarning,
    normalize_follower_weights,
    synthesize_follower_weights,
)

from strategies import configurations

finite = st.floats(-10, 10, allow_nan=False)
weights_st = st.builds(EdgeWeight, finite, finite)


def constraint_matrix(ri, rj, rk):
    """Rows of the two block identities in the unknowns (a_ij, b_ij, a_ik, b_ik, a_ii, b_ii)."""
    def cols(p):
        return [[p[0], -p[1]], [p[1], p[0]]]
    top = [[1, 0, 1, 0, 1, 0], [0, 1, 0, 1, 0, 1]]
    cj, ck, ci = cols(rj), cols(rk), cols(ri)
    bottom = [[cj[0][0], cj[0][1], ck[0][0], ck[0][1], ci[0][0], ci[0][1]],
              [cj[1][0], cj[1][1], ck[1][0], ck[1][1], ci[1][0], ci[1][1]]]
    return np.array(top + bottom, dtype=float)


def oracle_normalized(ri, rj, rk):
    """Null space of the 4x6 system, then the member whose diagonal block is I."""
    _, _, vt = np.linalg.svd(constraint_matrix(ri, rj, rk))
    N = vt[4:].T  # 6 x 2
    coef = np.linalg.solve(N[4:6], [1.0, 0.0])
    return N @ coef


def flat(t):
    return np.array([t.w_ij.a, t.w_ij.b, t.w_ik.a, t.w_ik.b, t.w_ii.a, t.w_ii.b])


def test_reference_follower_4_explicit(r):
    t = synthesize_follower_weights(4, (2, 3), r, -0.4, 0.2)
    np.testing.assert_allclose(t.w_ij.matrix(), [[-0.8, -0.4], [0.4, -0.8]], atol=1e-15)
    np.testing.assert_allclose(t.w_ik.matrix(), [[-0.2, 0.4], [-0.4, -0.2]], atol=1e-15)
    np.testing.assert_allclose(t.w_ii.matrix(), np.eye(2), atol=1e-15)


def test_reference_follower_5_explicit(r):
    t = synthesize_follower_weights(5, (2, 4), r, 0, 1)
    np.testing.assert_array_equal(t.w_ij.matrix(), [[-1, -1], [1, -1]])
    np.testing.assert_array_equal(t.w_ik.matrix(), [[0, 1], [-1, 0]])
    np.testing.assert_array_equal(t.w_ii.matrix(), np.eye(2))


def test_normalize_follower_3(r):
    t = normalize_follower_weights(3, (1, 2), r)
    assert (t.c1, t.c2) == (0.5, 0.0)
    np.testing.assert_array_equal(t.w_ij.matrix(), [[-1, 0.5], [-0.5, -1]])
    np.testing.assert_array_equal(t.w_ik.matrix(), [[0, -0.5], [0.5, 0]])
    np.testing.assert_array_equal(t.w_ii.matrix(), np.eye(2))


def test_normalize_follower_4_params(r):
    t = normalize_follower_weights(4, (2, 3), r)
    # -2 c1 + c2 = 1, -c1 - 2 c2 = 0
    assert t.c1 == pytest.approx(-0.4, abs=1e-15)
    assert t.c2 == pytest.approx(0.2, abs=1e-15)
    np.testing.assert_allclose(t.w_ij.matrix(), REFERENCE_BLOCKS[(4, 2)], atol=1e-15)
    np.testing.assert_allclose(t.w_ik.matrix(), REFERENCE_BLOCKS[(4, 3)], atol=1e-15)


def test_normalize_complex_oracle():
    r = np.array([[0, 0], [1, 0], [0, 1]], dtype=float)  # j=1, k=2, i=3
    t = normalize_follower_weights(3, (1, 2), r)
    assert complex(t.c1, t.c2) == -1
    assert t.w_ij == EdgeWeight(-1.0, 1.0)  # -(r_k - r_i) = -(1 - i)
    assert t.w_ik == EdgeWeight(0.0, -1.0)  # -(r_i - r_j) = -i
    assert t.w_ii == EdgeWeight.identity()


@pytest.mark.parametrize("i", sorted(REFERENCE_NEIGHBORS))
def test_normalize_matches_null_space_oracle(r, i):
    j, k = REFERENCE_NEIGHBORS[i]
    t = normalize_follower_weights(i, (j, k), r)
    np.testing.assert_allclose(flat(t), oracle_normalized(r[i - 1], r[j - 1], r[k - 1]), atol=1e-12)


def test_errors(r):
    with pytest.raises(ZeroParameters):
        synthesize_follower_weights(3, (1, 2), r, 0, 0)
    r2 = r.copy()
    r2[2] = r2[0]
    with pytest.raises(CollocatedTriple):
        synthesize_follower_weights(3, (1, 2), r2, 1, 0)
    r3 = r.copy()
    r3[1] = r3[0]
    with pytest.raises(CollocatedNeighbors):
        normalize_follower_weights(3, (1, 2), r3)


def test_near_collocation_warns():
    r = np.array([[0, 0], [1, 0], [1 + 1e-7, 0]])
    with pytest.warns(SmallWeightWarning):
        synthesize_follower_weights(3, (1, 2), r, 1, 0)


def test_no_warning_for_reference(r):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for i, nb in REFERENCE_NEIGHBORS.items():
            normalize_follower_weights(i, nb, r)


@settings(max_examples=200, deadline=None)
@given(configurations(min_n=3, max_n=3), st.floats(-10, 10), st.floats(-10, 10))
def test_identities_hold(pts, c1, c2):
    assume(abs(c1) + abs(c2) > 1e-3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SmallWeightWarning)
        t = synthesize_follower_weights(3, (1, 2), pts, c1, c2)
    scale = max(1.0, abs(c1) + abs(c2)) * 100
    assert max(abs(t.row_sum().a), abs(t.row_sum().b)) <= 1e-13 * scale
    assert np.abs(t.nominal_residual(pts)).max() <= 1e-13 * scale * 10
    # the block row acting on p - p_i form: sum_j W_ij (p_i - p_j) with p = r
    blocks = t.blocks()
    eq = sum((blocks[c] @ pts[c - 1] for c in blocks), np.zeros(2))
    np.testing.assert_allclose(eq, t.nominal_residual(pts))
    assert t.w_ii.c > 0


@settings(max_examples=100, deadline=None)
@given(configurations(min_n=3, max_n=3))
def test_normalized_satisfies_synthesis_contract(pts):
    t = normalize_follower_weights(3, (1, 2), pts)
    again = synthesize_follower_weights(3, (1, 2), pts, t.c1, t.c2)
    for a, b in zip(flat(t), flat(again)):
        assert a == pytest.approx(b, abs=1e-12)
    np.testing.assert_allclose(flat(t), oracle_normalized(*pts[[2, 0, 1]]), atol=1e-8)


@given(configurations(min_n=3, max_n=3), st.floats(-5, 5), st.floats(-5, 5))
def test_in_null_space_of_constraints(pts, c1, c2):
    assume(abs(c1) + abs(c2) > 1e-3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SmallWeightWarning)
        t = synthesize_follower_weights(3, (1, 2), pts, c1, c2)
    A = constraint_matrix(pts[2], pts[0], pts[1])
    assert np.abs(A @ flat(t)).max() <= 1e-11


@given(weights_st, st.floats(0.1, 10), st.floats(0, 6.28))
def test_commutes_with_scaled_rotation(w, alpha, theta):
    S = SimilarityTransform(alpha, theta).matrix()
    np.testing.assert_allclose(w.matrix() @ S, S @ w.matrix(), atol=1e-12)


def test_complex_isomorphism_random_pairs():
    rng = np.random.default_rng(0)
    for _ in range(100):
        a, b = (EdgeWeight(*rng.uniform(-10, 10, 2)) for _ in range(2))
        np.testing.assert_allclose((a * b).matrix(), a.matrix() @ b.matrix(), atol=1e-12)
        np.testing.assert_allclose((a + b).matrix(), a.matrix() + b.matrix(), atol=1e-12)
        assert abs((a * b).to_complex() - a.to_complex() * b.to_complex()) <= 1e-12
        EdgeWeight.from_matrix(a.matrix() @ b.matrix())  # stays a scaled rotation


def test_edge_weight_polar_form():
    w = EdgeWeight(3, 4)
    assert w.c == 5
    R = w.matrix() / w.c
    np.testing.assert_allclose(R @ R.T, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(w.inverse().matrix() @ w.matrix(), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(w.transpose().matrix(), w.matrix().T)


def test_from_matrix_rejects_general_block():
    with pytest.raises(ValueError):
        EdgeWeight.from_matrix([[1, 2], [3, 4]])
