import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mga.norms import NormError, NormSpace, dual_norm, dual_vector, euclidean, norm, p_norm

EXPONENTS = [1.5, 2.0, 3.0, 7.0]
COORD = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def spaces(dim=2):
    return [euclidean(dim)] + [p_norm(p, dim) for p in EXPONENTS]


def nonzero_vectors(dim):
    return arrays(np.float64, dim, elements=COORD).filter(lambda x: np.max(np.abs(x)) > 1e-3)


def test_norm_examples():
    assert norm([3, 4], euclidean()) == 5
    assert norm([0, 0, 0], euclidean(3)) == 0
    assert norm([0, 0, 0], p_norm(3, 3)) == 0
    assert norm([1, 1], p_norm(3)) == pytest.approx(2 ** (1 / 3), rel=1e-15)


def test_dual_norm_examples():
    assert dual_norm([3, 4], euclidean()) == 5
    assert dual_norm([1, 1], p_norm(2)) == pytest.approx(math.sqrt(2), rel=1e-15)
    # l_{3/2} norm of (1, 1)
    assert dual_norm([1, 1], p_norm(3)) == pytest.approx(2 ** (2 / 3), rel=1e-15)


def test_dual_vector_examples():
    np.testing.assert_allclose(dual_vector([3, 4], euclidean()), [0.6, 0.8], rtol=1e-15)
    np.testing.assert_allclose(dual_vector([0, 5], p_norm(3)), [0, 1], atol=1e-15)
    x = np.array([1.0, 2.0])
    xs = dual_vector(x, p_norm(3))
    np.testing.assert_allclose(xs, [1 / 9 ** (2 / 3), 4 / 9 ** (2 / 3)], rtol=1e-14)
    assert xs @ x == pytest.approx(9 ** (1 / 3), rel=1e-14)


@pytest.mark.parametrize("p", [1.0, 0.5, math.inf])
def test_nonsmooth_norms_rejected(p):
    with pytest.raises(NormError):
        NormSpace("p", 2, p)


def test_bad_dim_and_kind():
    with pytest.raises(NormError):
        NormSpace("euclidean", 1)
    with pytest.raises(NormError):
        NormSpace("taxicab", 2)


def test_dimension_mismatch():
    with pytest.raises(NormError):
        norm([1, 2, 3], euclidean(2))
    with pytest.raises(NormError):
        dual_norm([1], p_norm(3))


def test_dual_vector_at_origin():
    with pytest.raises(NormError):
        dual_vector([0, 0], euclidean())
    with pytest.raises(NormError):
        dual_vector([1e-13, 0], p_norm(3))


def test_large_exponent_does_not_overflow():
    sp = p_norm(7)
    x = np.array([1e60, 3e60])
    assert math.isfinite(sp.norm(x))
    assert sp.dual_norm(sp.dual_vector(x)) == pytest.approx(1, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(x=nonzero_vectors(3), p=st.sampled_from(EXPONENTS))
def test_dual_vector_pairs_to_norm(x, p):
    sp = p_norm(p, 3)
    xs = sp.dual_vector(x)
    assert abs(xs @ x - sp.norm(x)) <= 1e-12 * sp.norm(x)
    assert abs(sp.dual_norm(xs) - 1) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(x=nonzero_vectors(2), lam=st.floats(1e-3, 1e3), p=st.sampled_from(EXPONENTS))
def test_dual_vector_is_scale_invariant(x, lam, p):
    sp = p_norm(p)
    np.testing.assert_allclose(sp.dual_vector(lam * x), sp.dual_vector(x), atol=1e-12)


@pytest.mark.parametrize("sp", spaces(3), ids=lambda s: f"p={s.p}")
def test_dual_vector_matches_finite_differences(sp, rng):
    h = 1e-5
    for _ in range(200):
        x = rng.normal(size=3)
        x *= rng.uniform(0.5, 2) / sp.norm(x)
        fd = np.array(
            [(sp.norm(x + h * e) - sp.norm(x - h * e)) / (2 * h) for e in np.eye(3)]
        )
        np.testing.assert_allclose(sp.dual_vector(x), fd, atol=1e-6)


@settings(max_examples=200, deadline=None)
@given(
    x=arrays(np.float64, 3, elements=COORD),
    y=arrays(np.float64, 3, elements=COORD),
    a=st.floats(-5, 5),
    p=st.sampled_from(EXPONENTS),
)
def test_norm_and_dual_norm_axioms(x, y, a, p):
    sp = p_norm(p, 3)
    for f in (sp.norm, sp.dual_norm):
        assert f(x) >= 0
        assert (f(x) == 0) == (not np.any(x))
        assert f(a * x) == pytest.approx(abs(a) * f(x), rel=1e-12, abs=1e-300)
        assert f(x + y) <= f(x) + f(y) + 1e-12 * (f(x) + f(y))


def test_dual_norm_is_sup_over_unit_ball(rng):
    # the supremum of <z, x> over the unit sphere, sampled densely in the plane
    theta = np.linspace(0, 2 * np.pi, 200_001)
    circle = np.column_stack([np.cos(theta), np.sin(theta)])
    for p in EXPONENTS:
        sp = p_norm(p)
        sphere = circle / sp.norm(circle)[:, None]
        z = rng.normal(size=2)
        assert sp.dual_norm(z) == pytest.approx(np.max(sphere @ z), rel=1e-8)


@pytest.mark.parametrize("p", [2.0, 3.0, 1.5])
def test_smoothed_norm_derivatives(p, rng):
    sp = p_norm(p, 3)
    eps, h = 1e-2, 1e-6
    X = rng.normal(size=(20, 3))
    F, g, H = sp.smoothed(X, eps)
    assert np.all(F >= sp.norm(X))
    assert np.all(F <= sp.norm(X) + 3 ** (1 / p) * eps + 1e-12)
    for k in range(len(X)):
        for i, e in enumerate(np.eye(3)):
            fp = sp.smoothed(X[k : k + 1] + h * e, eps)
            fm = sp.smoothed(X[k : k + 1] - h * e, eps)
            assert (fp[0][0] - fm[0][0]) / (2 * h) == pytest.approx(g[k, i], abs=1e-7)
            np.testing.assert_allclose((fp[1][0] - fm[1][0]) / (2 * h), H[k, i], atol=1e-5)
