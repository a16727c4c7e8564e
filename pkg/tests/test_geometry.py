
import numpy as np
import pytest

from ocralign import geometry
from ocralign.errors import PointAtInfinityError, SingularMatrixError, ZeroMatrixError
from ocralign.geometry import (
    Homography, apply, compose, identity, invert, normalize_scale, sample_is_degenerate, translation,
)


def test_apply_identity():
    assert apply(identity(), (140, 60)) == (140, 60)


def test_apply_translation():
    assert apply(translation(10, -5), (0, 0)) == (10, -5)


def test_apply_projective():
    h = Homography([[1, 0, 0], [0, 1, 0], [0.001, 0, 1]])
    x, y = apply(h, (100, 50))
    assert x == pytest.approx(100 / 1.1, rel=1e-12)
    assert y == pytest.approx(50 / 1.1, rel=1e-12)
    assert (round(x, 3), round(y, 3)) == (90.909, 45.455)


def test_apply_point_at_infinity():
    h = Homography([[1, 0, 0], [0, 1, 0], [0.01, 0, 1]])
    with pytest.raises(PointAtInfinityError):
        apply(h, (-100, 0))


def test_invert_examples():
    assert invert(identity()) == identity()
    assert np.allclose(invert(translation(10, -5)).matrix, translation(-10, 5).matrix, atol=0)


def test_invert_singular():
    with pytest.raises(SingularMatrixError):
        Homography([[1, 2, 3], [2, 4, 6], [0, 0, 1]])


def test_compose_examples():
    h = Homography([[1.1, 0.02, 5], [-0.03, 0.95, 7], [1e-5, 2e-5, 1]])
    assert np.allclose(compose(h, identity()).matrix, h.matrix, rtol=0, atol=1e-15)
    assert np.allclose(compose(h, invert(h)).matrix, np.eye(3), atol=1e-9)
    assert compose(translation(1, 2), translation(3, 4)) == translation(4, 6)


def test_compose_order():
    a, b = translation(5, 0), Homography([[2, 0, 0], [0, 2, 0], [0, 0, 1]])
    p = (1.0, 1.0)
    assert apply(compose(a, b), p) == pytest.approx(apply(a, apply(b, p)))
    assert apply(compose(a, b), p) == pytest.approx((7.0, 2.0))


def test_normalize_scale_examples():
    assert normalize_scale(2 * np.eye(3)) == identity()
    m = np.array([[1.0, 2, 3], [4, 5, 6], [7e-4, 8e-4, 0.5]])
    assert np.array_equal(normalize_scale(m).matrix, 2 * m)
    flagged = normalize_scale(np.array([[0.0, 1, 0], [-1, 0, 1], [1, 0, 0]]))
    assert flagged.degenerate
    assert flagged.matrix[2, 2] == 0.0
    assert np.max(np.abs(flagged.matrix)) == 1.0


def test_normalize_scale_zero():
    with pytest.raises(ZeroMatrixError):
        normalize_scale(np.zeros((3, 3)))


def test_sample_is_degenerate_examples():
    assert not sample_is_degenerate([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert sample_is_degenerate([(0, 0), (1, 1), (2, 2), (5, 0)])
    assert sample_is_degenerate([(0, 0), (1, 1.000001), (2, 2), (5, 0)])
    assert not sample_is_degenerate([(0, 0), (1, 1.01), (2, 2), (5, 0)])


def test_serialization_round_trip():
    h = Homography([[1.1, 0.02, 5], [-0.03, 0.95, 7], [1e-5, 2e-5, 1]])
    d = h.to_dict()
    assert set(d) == {"h"} and len(d["h"]) == 3
    assert Homography.from_dict(d) == h


def test_matrix_is_read_only():
    h = translation(1, 2)
    with pytest.raises(ValueError):
        h.matrix[0, 0] = 5


def test_invert_twice_is_same_object():
    h = Homography([[1.1, 0.02, 5], [-0.03, 0.95, 7], [1e-5, 2e-5, 1]])
    assert invert(invert(h)) is h


def test_page_corners():
    assert geometry.page_corners(10, 5).tolist() == [[0, 0], [10, 0], [10, 5], [0, 5]]
