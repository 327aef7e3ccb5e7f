import numpy as np
import pytest

from beta_targets.polygons import (
    clip_convex,
    clip_halfplane,
    clip_to_box,
    ensure_ccw,
    parallelogram_polygon,
    point_in_convex,
    polygon_area,
    polygon_bbox,
)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_area_unit_square():
    assert polygon_area(SQUARE) == 1.0


def test_ensure_ccw_flips_clockwise():
    cw = SQUARE[::-1]
    assert polygon_area(cw) == -1.0
    assert polygon_area(ensure_ccw(cw)) == 1.0


def test_bbox():
    tri = np.array([[0.5, -1.0], [2.0, 0.5], [-0.25, 3.0]])
    assert polygon_bbox(tri) == (-0.25, -1.0, 2.0, 3.0)


def test_parallelogram_area_matches_det():
    poly = parallelogram_polygon((0.25, 0.5), (2.0, 1.0), (0.5, 3.0))
    assert polygon_area(poly) == pytest.approx(abs(2.0 * 3.0 - 1.0 * 0.5))
    assert polygon_area(poly) > 0.0


def test_clip_halfplane_splits_square():
    half = clip_halfplane(SQUARE, (1.0, 0.0), 0.5)  # keep x <= 0.5
    assert polygon_area(half) == pytest.approx(0.5)
    gone = clip_halfplane(SQUARE, (1.0, 0.0), -0.5)
    assert gone.shape[0] == 0


def test_clip_to_box_intersection():
    shifted = SQUARE + np.array([0.5, 0.5])
    inner = clip_to_box(shifted, 0.0, 0.0, 1.0, 1.0)
    assert polygon_area(inner) == pytest.approx(0.25)


def test_clip_convex_square_against_diamond():
    # |x-0.5| + |y-0.5| <= 0.75 cuts four corner triangles with legs 1/4
    diamond = ensure_ccw(np.array(
        [[1.25, 0.5], [0.5, 1.25], [-0.25, 0.5], [0.5, -0.25]]))
    inter = clip_convex(SQUARE, diamond)
    assert polygon_area(inter) == pytest.approx(1.0 - 4.0 * 0.25 ** 2 / 2.0)


def test_clip_convex_disjoint_is_empty():
    far = SQUARE + np.array([5.0, 0.0])
    assert clip_convex(SQUARE, far).shape[0] == 0


def test_point_in_convex():
    assert point_in_convex(SQUARE, (0.5, 0.5))
    assert point_in_convex(SQUARE, (0.0, 0.0))  # boundary counts
    assert not point_in_convex(SQUARE, (1.2, 0.5))


def test_clip_area_never_grows():
    rng = np.random.default_rng(7)
    for _ in range(25):
        pts = rng.uniform(-1.0, 2.0, size=(4, 2))
        quad = ensure_ccw(np.array(
            [[pts[:, 0].min(), pts[:, 1].min()],
             [pts[:, 0].max(), pts[:, 1].min()],
             [pts[:, 0].max(), pts[:, 1].max()],
             [pts[:, 0].min(), pts[:, 1].max()]]))
        clipped = clip_to_box(quad, 0.0, 0.0, 1.0, 1.0)
        a = polygon_area(clipped)
        assert 0.0 <= a <= polygon_area(quad) + 1e-12
        assert a <= 1.0 + 1e-12
