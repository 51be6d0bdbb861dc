import numpy as np
import pytest

from bicon_sod.gradcheck import check_vjp, numerical_gradient, relative_error

def test_numerical_gradient_of_quadratic(rng):
    a = rng.standard_normal((3, 4))
    x = rng.standard_normal((3, 4))
    grad = numerical_gradient(lambda z: float(np.sum(a * z * z)), x)
    assert np.allclose(grad, 2.0 * a * x, atol=1e-8)

def test_numerical_gradient_subset_and_no_mutation(rng):
    x = rng.standard_normal(6)
    before = x.copy()
    grad = numerical_gradient(lambda z: float(np.sum(z ** 3)), x, indices=[1, 4])
    assert np.array_equal(x, before)
    assert grad[0] == 0.0 and grad[2] == 0.0
    assert grad[4] == pytest.approx(3.0 * x[4] ** 2, rel=1e-8)

def test_relative_error():
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
    assert relative_error(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 0.0
    assert relative_error(np.array([2.0]), np.array([1.0])) == pytest.approx(0.5)

def test_check_vjp_flags_a_wrong_backward(rng):
    x = rng.random((4, 4))
    good = check_vjp(lambda z: z ** 2, lambda z, u: 2.0 * z * u, x, rng)
    bad = check_vjp(lambda z: z ** 2, lambda z, u: z * u, x, rng)
    assert good <= 1e-8
    assert bad > 0.1
