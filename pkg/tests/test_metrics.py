import numpy as np
import py_sod_metrics
import pytest
from pydantic import ValidationError

import oracles
from oracles import random_mask
from bicon_sod.itypes import InvalidInput, ShapeMismatch
from bicon_sod.metrics import MetricReport, adaptive_threshold, average_reports, binarize_adaptive
from bicon_sod.metrics import e_measure, evaluate, evaluate_corpus, f_measure_adaptive, mae

def test_mae_examples(rng):
    gt = random_mask(rng, 5, 5)
    assert mae(gt.astype(float), gt) == 0.0
    assert mae(1.0 - gt, gt) == 1.0

def test_metrics_match_oracles(rng):
    for _ in range(100):
        h, w = rng.integers(2, 8, size=2)
        pred = rng.random((h, w))
        if rng.random() < 0.2:
            pred[pred < 0.5] = 0.0
        gt = random_mask(rng, h, w, p=rng.uniform(0.1, 0.9))
        assert mae(pred, gt) == pytest.approx(oracles.mae(pred, gt), abs=1e-12)
        assert f_measure_adaptive(pred, gt) == pytest.approx(oracles.f_measure(pred, gt), abs=1e-12)
        assert e_measure(pred, gt) == pytest.approx(oracles.e_measure(pred, gt), abs=1e-12)

@pytest.mark.parametrize("p", [0.2, 0.5, 0.8, 0.95])
def test_perfect_prediction(rng, p):
    gt = random_mask(rng, 10, 10, p=p)
    gt[0, 0] = 1
    gt[9, 9] = 0
    report = evaluate(gt.astype(float), gt)
    assert report.mae == 0.0
    assert report.f_ave == pytest.approx(1.0)
    assert report.e_m == pytest.approx(1.0, abs=1e-4)

def test_majority_salient_threshold_is_clamped():
    gt = np.ones((4, 4), np.uint8)
    gt[0, 0] = 0
    pred = gt.astype(float)
    assert adaptive_threshold(pred) == 1.0
    assert np.array_equal(binarize_adaptive(pred), gt.astype(bool))

def test_empty_prediction_scores_zero_f():
    gt = np.zeros((5, 5), np.uint8)
    gt[1:3, 1:3] = 1
    assert f_measure_adaptive(np.zeros((5, 5)), gt) == 0.0

def test_e_measure_degenerate_cases():
    zeros = np.zeros((4, 4))
    assert e_measure(zeros, np.zeros((4, 4), np.uint8)) == 1.0
    ones = np.ones((4, 4))
    assert e_measure(ones, np.ones((4, 4), np.uint8)) == 1.0
    assert e_measure(zeros, np.ones((4, 4), np.uint8)) == 0.0

def test_metric_properties(rng):
    for _ in range(50):
        pred = rng.random((6, 5))
        gt = random_mask(rng, 6, 5)
        assert mae(pred, gt) == pytest.approx(1.0 - mae(pred, 1 - gt))
        assert mae(pred.T, gt.T) == pytest.approx(mae(pred, gt))
        assert f_measure_adaptive(pred.T, gt.T) == pytest.approx(f_measure_adaptive(pred, gt))
        assert e_measure(pred.T, gt.T) == pytest.approx(e_measure(pred, gt))
        assert 0.0 <= f_measure_adaptive(pred, gt) <= 1.0
        assert 0.0 <= e_measure(pred, gt) <= 1.0

def test_metric_input_errors():
    with pytest.raises(ShapeMismatch):
        mae(np.zeros((2, 3)), np.zeros((3, 2), np.uint8))
    with pytest.raises(InvalidInput):
        e_measure(np.full((2, 2), 2.0), np.zeros((2, 2), np.uint8))

def test_evaluate_corpus(rng):
    pairs = [(rng.random((5, 5)), random_mask(rng, 5, 5)) for _ in range(3)]
    single = evaluate_corpus(pairs[:1])
    assert single == evaluate(*pairs[0])
    assert evaluate_corpus([pairs[0], pairs[0]]).f_ave == pytest.approx(single.f_ave)
    report = evaluate_corpus(pairs)
    assert report.n_images == 3
    assert report.mae == pytest.approx(np.mean([mae(p, g) for p, g in pairs]))
    assert report.f_ave == pytest.approx(np.mean([f_measure_adaptive(p, g) for p, g in pairs]))
    assert report.e_m == pytest.approx(np.mean([e_measure(p, g) for p, g in pairs]))
    with pytest.raises(InvalidInput):
        evaluate_corpus([])

def test_metric_report():
    report = MetricReport(mae=0.1, f_ave=0.5, e_m=0.75, n_images=2)
    assert report.to_dict() == dict(mae=0.1, f_ave=0.5, e_m=0.75, n_images=2)
    assert average_reports([report, report]).n_images == 4
    with pytest.raises(ValidationError):
        MetricReport(mae=0.1, f_ave=1.5, e_m=0.5)

def test_mae_and_adaptive_f_agree_with_py_sod_metrics(rng):
    # full 0..255 range so the library's min-max normalisation is the identity
    for _ in range(30):
        h, w = rng.integers(4, 16, size=2)
        pixels = rng.integers(0, 256, size=(h, w)).astype(np.uint8)
        pixels[0, 0], pixels[0, 1] = 0, 255
        gt = random_mask(rng, h, w, 0.4)
        gt[1, 0], gt[1, 1] = 1, 0
        ref_mae = py_sod_metrics.MAE()
        ref_fm = py_sod_metrics.Fmeasure()
        ref_mae.step(pred=pixels, gt=gt * 255)
        ref_fm.step(pred=pixels, gt=gt * 255)
        pred = pixels / 255.0
        assert mae(pred, gt) == pytest.approx(ref_mae.get_results()["mae"], abs=1e-12)
        assert f_measure_adaptive(pred, gt) == pytest.approx(ref_fm.get_results()["fm"]["adp"], abs=1e-12)
