import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from glucb import linalg


def test_init_identity():
    s = linalg.init(2, 1.0)
    np.testing.assert_array_equal(s.V, np.eye(2))
    np.testing.assert_array_equal(s.V_inv, np.eye(2))
    assert s.log_det == 0.0


def test_init_scalar_matrix():
    s = linalg.init(3, 2.0)
    np.testing.assert_array_equal(s.V, 2 * np.eye(3))
    assert s.log_det == pytest.approx(3 * math.log(2), abs=1e-12)
    assert s.log_det == pytest.approx(2.0794, abs=1e-4)


def test_init_one_dimensional():
    s = linalg.init(1, 0.5)
    assert s.V[0, 0] == 0.5 and s.V_inv[0, 0] == 2.0


@pytest.mark.parametrize("d,lam", [(0, 1.0), (-1, 1.0), (2, 0.0), (2, -1.0), (1.5, 1.0)])
def test_init_rejects_bad_arguments(d, lam):
    with pytest.raises(ValueError):
        linalg.init(d, lam)


def test_update_along_axis():
    s = linalg.rank_one_update(linalg.init(2, 1.0), [1.0, 0.0])
    np.testing.assert_allclose(s.V, np.diag([2.0, 1.0]))
    np.testing.assert_allclose(s.V_inv, np.diag([0.5, 1.0]))
    assert s.log_det == pytest.approx(math.log(2))


def test_update_diagonal_direction_matches_direct_inverse():
    x = np.array([1.0, 1.0]) / math.sqrt(2)
    s = linalg.rank_one_update(linalg.init(2, 1.0), x)
    expected = np.eye(2) - 0.25 * np.ones((2, 2))
    np.testing.assert_allclose(s.V_inv, expected, atol=1e-15)
    np.testing.assert_allclose(s.V_inv, np.linalg.inv(np.eye(2) + np.outer(x, x)), atol=1e-15)
    np.testing.assert_allclose(s.V @ s.V_inv, np.eye(2), atol=1e-15)


def test_rank_one_update_is_copy_on_write():
    s = linalg.init(2, 1.0)
    linalg.rank_one_update(s, [1.0, 0.0])
    np.testing.assert_array_equal(s.V, np.eye(2))


def test_update_dimension_mismatch():
    with pytest.raises(ValueError):
        linalg.init(2, 1.0).update([1.0, 0.0, 0.0])


def test_many_updates_match_direct_inversion():
    rng = np.random.default_rng(11)
    s = linalg.init(10, 1.0)
    X = rng.standard_normal((10_000, 10))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    for x in X:
        s.update(x)
    V = np.eye(10) + X.T @ X
    np.testing.assert_allclose(s.V, V, atol=1e-9)
    assert np.max(np.abs(s.V_inv - np.linalg.inv(V))) < 1e-8
    assert s.log_det == pytest.approx(np.linalg.slogdet(V)[1], rel=1e-8)


def test_check_refreshes_on_drift():
    s = linalg.init(3, 1.0)
    s.V_inv[0, 0] += 1e-3
    s.check()
    assert s.residual() < 1e-12


def test_quad_form_examples():
    s = linalg.init(2, 1.0)
    assert linalg.quad_form(s, [1.0, -1.0]) == pytest.approx(2.0)
    s4 = linalg.init(2, 4.0)
    assert linalg.quad_form(s4, [-1.0, 1.0]) == pytest.approx(0.5)
    s5 = linalg.init(2, 1.0)
    for _ in range(5):
        s5.update([1.0, 0.0])
    assert linalg.quad_form(s5, [1.0, 0.0]) == pytest.approx(1 / 6)


def test_whitened_score_examples():
    s = linalg.init(2, 1.0)
    assert linalg.whitened_score(s, [1.0, 0.0], [1.0, -1.0]) == pytest.approx(1 / math.sqrt(2))
    s3 = linalg.init(3, 1.0)
    assert linalg.whitened_score(s3, [0, 0, 1.0], [1.0, -1.0, 0]) == 0.0
    w = math.pi / 6
    x = np.array([math.cos(w), math.sin(w)])
    # |cos w (1 - cos w) - sin^2 w| / sqrt(2), evaluated by hand
    assert linalg.whitened_score(s, x, np.array([1.0, 0.0]) - x) == pytest.approx(0.0947343455, abs=1e-9)


def test_batch_versions_match_scalar():
    rng = np.random.default_rng(3)
    s = linalg.init(4, 0.7)
    for _ in range(20):
        s.update(rng.standard_normal(4) * 0.5)
    Y = rng.standard_normal((6, 4))
    y = rng.standard_normal(4)
    np.testing.assert_allclose(linalg.quad_forms(s, Y), [linalg.quad_form(s, r) for r in Y], rtol=1e-12)
    np.testing.assert_allclose(
        linalg.whitened_scores(s, Y, y), [linalg.whitened_score(s, r, y) for r in Y], rtol=1e-12
    )


vectors = arrays(np.float64, 3, elements=st.floats(-1, 1, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(st.lists(vectors, min_size=1, max_size=8), vectors)
def test_quad_form_weakly_decreases(updates, y):
    s = linalg.init(3, 1.0)
    prev = linalg.quad_form(s, y)
    assert prev <= float(y @ y) / s.lam + 1e-12
    for x in updates:
        s.update(x)
        cur = linalg.quad_form(s, y)
        assert cur <= prev + 1e-12
        prev = cur


@settings(max_examples=60, deadline=None)
@given(st.lists(vectors.filter(lambda v: np.linalg.norm(v) > 1e-3), min_size=1, max_size=8))
def test_log_det_strictly_increases(updates):
    s = linalg.init(3, 1.0)
    for x in updates:
        before = s.log_det
        s.update(x)
        assert s.log_det > before


@settings(max_examples=60, deadline=None)
@given(vectors, vectors, st.permutations(range(3)), st.floats(0.01, 100))
def test_whitened_score_symmetries(x, y, perm, c):
    s = linalg.init(3, 1.0)
    base = linalg.whitened_score(s, x, y)
    perm = list(perm)
    assert linalg.whitened_score(s, x[perm], y[perm]) == pytest.approx(base, rel=1e-12, abs=1e-15)
    assert linalg.whitened_score(s, x, c * y) == pytest.approx(c * base, rel=1e-12, abs=1e-15)
