import numpy as np
import pytest

import oracles
from oracles import interior_unit, random_mask
from bicon_sod.codec import count_isolated, encode_connectivity, extract_edge_mask, is_pair_consistent
from bicon_sod.gradcheck import check_vjp
from bicon_sod.itypes import AggregationMode, InvalidInput
from bicon_sod.ops import aggregate, aggregate_backward, aggregate_decoupled, aggregate_global
from bicon_sod.ops import bilateral_vote, bilateral_vote_backward

def test_bv_unidirectional_pair():
    conn = np.ones((1, 2, 8))
    conn[0, 0, 4] = 0.5     # right
    conn[0, 1, 3] = 0.8     # left
    out = bilateral_vote(conn)
    assert out[0, 0, 4] == pytest.approx(0.4)
    assert out[0, 1, 3] == out[0, 0, 4]

def test_bv_matches_oracle(rng):
    for _ in range(500):
        h, w = rng.integers(1, 9, size=2)
        conn = rng.random((h, w, 8))
        out = bilateral_vote(conn)
        assert np.array_equal(out, oracles.bilateral_vote(conn))
        assert is_pair_consistent(out)
        assert np.all(out <= conn)

def test_bv_fixed_point_on_labels(rng):
    for _ in range(500):
        h, w = rng.integers(1, 17, size=2)
        g = encode_connectivity(random_mask(rng, h, w))
        assert np.array_equal(bilateral_vote(g), g)

def test_bv_contraction_equality():
    conn = np.full((3, 3, 8), 0.5)
    conn[1, 1] = 0.0
    out = bilateral_vote(conn)
    # entries of the centre are 0 and stay 0
    assert np.array_equal(out[1, 1], conn[1, 1])
    assert np.all(out[0, 0] < conn[0, 0])

def test_bv_rejects_out_of_range():
    with pytest.raises(InvalidInput):
        bilateral_vote(np.full((2, 2, 8), 1.5))
    with pytest.raises(InvalidInput):
        bilateral_vote(np.full((2, 2, 8), np.nan))

def test_bv_backward_zero_upstream(rng):
    conn = rng.random((4, 4, 8))
    assert not bilateral_vote_backward(conn, np.zeros_like(conn)).any()

def test_bv_backward_single_pixel():
    # every neighbour of a 1x1 grid is out of bounds, so each entry is squared
    conn = np.linspace(0.1, 0.8, 8).reshape(1, 1, 8)
    upstream = np.arange(1.0, 9.0).reshape(1, 1, 8)
    assert np.allclose(bilateral_vote(conn), conn ** 2)
    assert np.allclose(bilateral_vote_backward(conn, upstream), 2.0 * conn * upstream)

def test_bv_backward_pair_formula(rng):
    conn = rng.random((5, 5, 8))
    u = rng.standard_normal((5, 5, 8))
    grad = bilateral_vote_backward(conn, u)
    # interior entry (2, 2, right) pairs with (2, 3, left)
    assert grad[2, 2, 4] == pytest.approx((u[2, 2, 4] + u[2, 3, 3]) * conn[2, 3, 3])

def test_bv_backward_finite_differences():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        conn = interior_unit(rng, (4, 4, 8))
        err = check_vjp(bilateral_vote, bilateral_vote_backward, conn, rng)
        assert err <= 1e-4

def test_aggregate_examples():
    assert np.array_equal(aggregate_global(np.ones((3, 3, 8))), np.ones((3, 3)))
    v = np.array([1, 1, 1, 1, 0, 0, 0, 0], dtype=float).reshape(1, 1, 8)
    assert aggregate_global(v)[0, 0] == 0.5
    e = np.array([1, 1, 1, 1, 1, 1, 1, 0], dtype=float).reshape(1, 1, 8)
    assert aggregate_decoupled(e, np.ones((1, 1), np.uint8))[0, 0] == 1.0
    assert aggregate_decoupled(np.ones((1, 1, 8)), np.zeros((1, 1), np.uint8))[0, 0] == 1.0

def test_aggregate_matches_oracle(rng):
    for _ in range(100):
        h, w = rng.integers(1, 9, size=2)
        bicon = rng.random((h, w, 8))
        edges = random_mask(rng, h, w, p=0.3)
        g = aggregate_global(bicon)
        d = aggregate_decoupled(bicon, edges)
        assert np.allclose(g, oracles.aggregate_global(bicon), rtol=0, atol=1e-12)
        assert np.allclose(d, oracles.aggregate_decoupled(bicon, edges), rtol=0, atol=1e-12)
        assert g.min() >= 0 and g.max() <= 1
        assert d.min() >= 0 and d.max() <= 1

def test_aggregate_dispatch_and_errors(rng):
    bicon = rng.random((3, 4, 8))
    edges = random_mask(rng, 3, 4)
    assert np.array_equal(aggregate(bicon, AggregationMode.GLOBAL), aggregate_global(bicon))
    assert np.array_equal(aggregate(bicon, AggregationMode.DECOUPLED, edges), aggregate_decoupled(bicon, edges))
    with pytest.raises(InvalidInput):
        aggregate(bicon, AggregationMode.DECOUPLED)
    with pytest.raises(InvalidInput):
        aggregate_decoupled(bicon, np.ones((4, 3), np.uint8))

def test_aggregate_backward_examples():
    bicon = np.full((2, 2, 8), 0.5)
    grad = aggregate_backward(bicon, None, AggregationMode.GLOBAL, np.ones((2, 2)))
    assert np.all(grad == 1.0 / 8.0)

    bicon[0, 0, 5] = 0.1
    edges = np.zeros((2, 2), np.uint8)
    edges[0, 0] = 1
    grad = aggregate_backward(bicon, edges, AggregationMode.DECOUPLED, np.full((2, 2), 2.0))
    expected = np.zeros(8)
    expected[5] = -2.0
    assert np.array_equal(grad[0, 0], expected)
    assert np.all(grad[1, 1] == 0.25)

def test_aggregate_backward_ties_go_to_lowest_channel():
    bicon = np.full((1, 1, 8), 0.7)
    bicon[0, 0, [2, 6]] = 0.2
    grad = aggregate_backward(bicon, np.ones((1, 1), np.uint8), AggregationMode.DECOUPLED, np.ones((1, 1)))
    assert grad[0, 0, 2] == -1.0
    assert np.count_nonzero(grad) == 1

@pytest.mark.parametrize("mode", list(AggregationMode))
def test_aggregate_backward_finite_differences(mode):
    for seed in range(20):
        rng = np.random.default_rng(seed)
        bicon = interior_unit(rng, (4, 4, 8))
        edges = random_mask(rng, 4, 4, p=0.4)
        err = check_vjp(lambda b: aggregate(b, mode, edges),
                        lambda b, u: aggregate_backward(b, edges, mode, u), bicon, rng)
        assert err <= 1e-4

def test_perfect_prediction_recovers_mask(rng):
    checked = 0
    for _ in range(200):
        m = random_mask(rng, 10, 10, p=0.6)
        if count_isolated(m):
            continue
        g = encode_connectivity(m)
        s = aggregate_global(bilateral_vote(g))
        e = extract_edge_mask(g).astype(bool)
        assert np.array_equal(s[~e], m[~e])
        assert np.all(s[e] >= 1.0 / 8.0)
        assert np.all(s[e] < 1.0)
        checked += 1
    assert checked > 20
