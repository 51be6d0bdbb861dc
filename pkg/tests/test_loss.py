import math

import numpy as np
import pytest
from pydantic import ValidationError

import oracles
from oracles import interior_unit, random_mask
from bicon_sod.codec import encode_connectivity, extract_edge_mask
from bicon_sod.gradcheck import numerical_gradient, relative_error
from bicon_sod.itypes import InvalidInput, NumericalFailure, ShapeMismatch
from bicon_sod.loss import EPS, LossValue, LossWeights, bce, bce_map, bicon_total_loss
from bicon_sod.loss import connectivity_consistency_loss, decouple_loss, get_loss_hook, loss_hook_names
from bicon_sod.loss import saliency_loss
from bicon_sod.ops import aggregate_decoupled, aggregate_global, bilateral_vote

def block_gt(size=6):
    m = np.zeros((size, size), np.uint8)
    m[1:size - 1, 2:size - 1] = 1
    return m

#### bce

def test_bce_of_half_is_ln2(rng):
    for _ in range(10):
        t = random_mask(rng, 5, 7)
        value, _ = bce(np.full((5, 7), 0.5), t)
        assert abs(value - math.log(2.0)) <= 1e-9

def test_bce_at_truth(rng):
    t = random_mask(rng, 8, 8)
    value, _ = bce(t.astype(float), t)
    assert value <= 2e-7

def test_bce_matches_oracle(rng):
    for _ in range(20):
        p = rng.random((6, 6))
        t = random_mask(rng, 6, 6)
        assert bce(p, t)[0] == pytest.approx(oracles.bce(p, t), rel=1e-12)

def test_bce_gradient_finite_differences():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        p = interior_unit(rng, (6, 6))
        t = random_mask(rng, 6, 6)
        _, grad = bce(p, t)
        numeric = numerical_gradient(lambda z: bce(z, t)[0], p)
        assert relative_error(grad, numeric) <= 1e-4

def test_bce_gradient_zero_where_clamped():
    p = np.array([0.0, 1.0, 0.3])
    t = np.array([1, 0, 1])
    _, grad = bce(p, t)
    assert grad[0] == 0.0 and grad[1] == 0.0
    assert grad[2] != 0.0

def test_bce_rejects_bad_inputs():
    with pytest.raises(ShapeMismatch):
        bce(np.full((2, 3), 0.5), np.ones((3, 2), np.uint8))
    with pytest.raises(InvalidInput, match="not binary"):
        bce(np.full((2, 2), 0.5), np.full((2, 2), 0.5))

def test_edge_part_identity(rng):
    mins = rng.random(1000)
    assert np.array_equal(bce_map(1.0 - mins, np.ones(1000, np.uint8)), bce_map(mins, np.zeros(1000, np.uint8)))
    # the decoupled map on edge pixels takes the same form
    gt = block_gt()
    edges = extract_edge_mask(encode_connectivity(gt)).astype(bool)
    bicon = bilateral_vote(rng.random((6, 6, 8)))
    s = aggregate_decoupled(bicon, edges)
    assert np.array_equal(bce_map(s, gt)[edges], bce_map(bicon.min(axis=2), np.zeros((6, 6), np.uint8))[edges])

#### decouple loss

def test_decouple_loss_at_truth():
    gt = block_gt()
    g = encode_connectivity(gt)
    value, _ = decouple_loss(bilateral_vote(g), extract_edge_mask(g), gt)
    assert value <= 2e-7

def test_decouple_loss_blurred_edges():
    gt = block_gt()
    edges = extract_edge_mask(encode_connectivity(gt))
    per_pixel = bce_map(aggregate_decoupled(np.ones((6, 6, 8)), edges), gt)
    assert np.allclose(per_pixel[edges == 1], -math.log(EPS), rtol=1e-6)

def test_decouple_loss_rejects_inconsistent_edges():
    gt = block_gt()
    edges = extract_edge_mask(encode_connectivity(gt))
    edges[0, 0] = 1
    with pytest.raises(InvalidInput, match="not salient"):
        decouple_loss(np.full((6, 6, 8), 0.5), edges, gt)

def test_decouple_loss_oracle_and_gradient():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        gt = random_mask(rng, 5, 5, p=0.6)
        edges = extract_edge_mask(encode_connectivity(gt))
        bicon = interior_unit(rng, (5, 5, 8))
        value, grad = decouple_loss(bicon, edges, gt)
        assert value == pytest.approx(oracles.bce(oracles.aggregate_decoupled(bicon, edges), gt), rel=1e-12)
        numeric = numerical_gradient(lambda b: decouple_loss(b, edges, gt)[0], bicon)
        assert relative_error(grad, numeric) <= 1e-4

#### consistency loss

def test_consistency_loss_at_truth(rng):
    g = encode_connectivity(random_mask(rng, 7, 7))
    value, _ = connectivity_consistency_loss(g, bilateral_vote(g), g)
    assert value.conmap <= 2e-7 and value.bimap <= 2e-7

def test_undecided_pair_is_penalised_harder_by_bimap():
    conn = np.ones((1, 2, 8))
    conn[0, 0, 4] = 0.5
    conn[0, 1, 3] = 0.5
    gt = np.ones((1, 2, 8), np.uint8)
    value, _ = connectivity_consistency_loss(conn, bilateral_vote(conn), gt)
    assert value.maps.conmap[0, 0, 4] == pytest.approx(math.log(2.0))
    assert value.maps.bimap[0, 0, 4] == pytest.approx(math.log(4.0))
    assert np.all(value.maps.conmap >= 0) and np.all(value.maps.bimap >= 0)

def test_consistency_loss_is_linear_in_weights(rng):
    conn = interior_unit(rng, (5, 5, 8))
    g = encode_connectivity(random_mask(rng, 5, 5))
    v1, g1 = connectivity_consistency_loss(conn, bilateral_vote(conn), g, LossWeights(w1=0.4, w2=0.1))
    v2, g2 = connectivity_consistency_loss(conn, bilateral_vote(conn), g, LossWeights(w1=0.8, w2=0.2))
    assert v2.total == pytest.approx(2.0 * v1.total, rel=1e-12)
    assert np.allclose(g2, 2.0 * g1, rtol=1e-12, atol=0)

def test_consistency_loss_oracle_and_gradient():
    w = LossWeights()
    for seed in range(20):
        rng = np.random.default_rng(seed)
        conn = interior_unit(rng, (5, 5, 8))
        g = encode_connectivity(random_mask(rng, 5, 5))
        value, grad = connectivity_consistency_loss(conn, bilateral_vote(conn), g, w)
        assert value.conmap == pytest.approx(oracles.bce(conn, g), rel=1e-12)
        assert value.bimap == pytest.approx(oracles.bce(oracles.bilateral_vote(conn), g), rel=1e-12)
        numeric = numerical_gradient(
            lambda c: connectivity_consistency_loss(c, bilateral_vote(c), g, w)[0].total, conn)
        assert relative_error(grad, numeric) <= 1e-4

#### total loss

def test_total_loss_at_truth():
    gt = block_gt()
    value, _ = bicon_total_loss(encode_connectivity(gt), encode_connectivity(gt), gt)
    assert value.total <= 1e-6
    assert str(value.weights) == "w1=0.8 w2=0.2"

def test_zero_hook_matches_no_hook(rng):
    gt = random_mask(rng, 6, 6)
    conn = interior_unit(rng, (6, 6, 8))
    g = encode_connectivity(gt)
    without, grad_without = bicon_total_loss(conn, g, gt)
    with_zero, grad_zero = bicon_total_loss(conn, g, gt, optional_hook=get_loss_hook('zero'))
    assert without.total == with_zero.total
    assert np.array_equal(grad_without, grad_zero)

def test_total_loss_is_sum_of_terms(rng):
    gt = random_mask(rng, 6, 6, p=0.6)
    conn = interior_unit(rng, (6, 6, 8))
    g = encode_connectivity(gt)
    w = LossWeights(w1=0.7, w2=0.3)
    value, _ = bicon_total_loss(conn, g, gt, w, get_loss_hook('global_bce'))
    bicon = bilateral_vote(conn)
    expected = (decouple_loss(bicon, extract_edge_mask(g), gt)[0]
                + 0.7 * bce(conn, g)[0] + 0.3 * bce(bicon, g)[0]
                + bce(aggregate_global(bicon), gt)[0])
    assert value.total == pytest.approx(expected, rel=1e-12)
    assert min(value.decouple, value.conmap, value.bimap, value.optional) >= 0

def test_decouple_switch(rng):
    gt = random_mask(rng, 6, 6, p=0.6)
    conn = interior_unit(rng, (6, 6, 8))
    g = encode_connectivity(gt)
    value, _ = bicon_total_loss(conn, g, gt, decouple=False)
    assert value.decouple == 0.0
    assert value.total == pytest.approx(0.8 * value.conmap + 0.2 * value.bimap)

@pytest.mark.parametrize("hook", ['', 'global_bce'])
def test_total_loss_gradient(hook):
    for seed in range(20):
        rng = np.random.default_rng(seed)
        gt = random_mask(rng, 5, 5, p=0.6)
        g = encode_connectivity(gt)
        conn = interior_unit(rng, (5, 5, 8))
        h = get_loss_hook(hook)
        _, grad = bicon_total_loss(conn, g, gt, optional_hook=h)
        numeric = numerical_gradient(lambda c: bicon_total_loss(c, g, gt, optional_hook=h)[0].total, conn)
        assert relative_error(grad, numeric) <= 1e-4

def test_single_flip_increases_total(rng):
    for _ in range(100):
        h, w = rng.integers(2, 9, size=2)
        gt = random_mask(rng, h, w, p=0.6)
        g = encode_connectivity(gt)
        base, _ = bicon_total_loss(g, g, gt)
        flipped = g.copy()
        y, x, c = rng.integers(h), rng.integers(w), rng.integers(8)
        flipped[y, x, c] = 1.0 - flipped[y, x, c]
        value, _ = bicon_total_loss(flipped, g, gt)
        assert value.total > base.total

def test_non_finite_hook_is_a_numerical_failure(rng):
    gt = random_mask(rng, 4, 4)
    nan_hook = lambda s, t: (float('nan'), np.zeros_like(s))
    with pytest.raises(NumericalFailure):
        bicon_total_loss(interior_unit(rng, (4, 4, 8)), encode_connectivity(gt), gt, optional_hook=nan_hook)

#### plumbing

def test_loss_hook_registry():
    assert {'global_bce', 'zero'} <= set(loss_hook_names())
    assert get_loss_hook('') is None
    with pytest.raises(InvalidInput, match="unknown optional loss"):
        get_loss_hook('focal')

def test_loss_weights_validation():
    assert str(LossWeights()) == "w1=0.8 w2=0.2"
    with pytest.raises(ValidationError):
        LossWeights(w1=1.5, w2=0.2)

def test_loss_value_mean_and_saliency_loss():
    value, grad = saliency_loss(np.full((4, 4), 0.5), np.eye(4, dtype=np.uint8))
    assert value.saliency == pytest.approx(math.log(2.0))
    assert value.total == value.saliency
    assert grad.shape == (4, 4)
    mean = LossValue.mean([LossValue(conmap=1.0), LossValue(conmap=3.0, bimap=2.0)])
    assert mean.conmap == 2.0 and mean.bimap == 1.0
    with pytest.raises(InvalidInput):
        LossValue.mean([])
