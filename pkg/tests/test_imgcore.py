import numpy as np
import pytest

from cwaug.imgcore import bilinear_sample, from_bytes, to_bytes, to_grayscale, validate_image


def test_from_bytes_anchor_values():
    assert from_bytes(np.uint8(0)) == 0.0
    assert from_bytes(np.uint8(255)) == 1.0
    assert from_bytes(np.uint8(128)) == pytest.approx(128 / 255, abs=1e-12)


def test_to_bytes_anchor_values():
    assert to_bytes(np.array([[1.0]]))[0, 0] == 255
    assert to_bytes(np.array([[0.0]]))[0, 0] == 0


def test_byte_round_trip_all_values():
    grid = np.arange(256, dtype=np.uint8).reshape(16, 16)
    assert np.array_equal(to_bytes(from_bytes(grid)), grid)


def test_to_bytes_rounds_half_up():
    # 0.5/255 sits exactly between bytes 0 and 1
    assert to_bytes(np.array([[0.5 / 255]]))[0, 0] == 1


def test_to_grayscale_passthrough_and_luminance():
    img = np.random.default_rng(0).uniform(0, 1, (5, 4))
    assert to_grayscale(img) is img or np.array_equal(to_grayscale(img), img)
    rgb = np.zeros((2, 2, 3))
    rgb[..., 1] = 1.0
    assert to_grayscale(rgb)[0, 0] == pytest.approx(0.587)
    with pytest.raises(ValueError):
        to_grayscale(np.zeros((2, 2, 4)))


def test_validate_image_rejects_bad_values():
    with pytest.raises(ValueError):
        validate_image(np.array([[1.5]]))
    with pytest.raises(ValueError):
        validate_image(np.zeros((0, 3)))
    validate_image(np.zeros((3, 3)))


def test_bilinear_at_grid_points_is_exact():
    rng = np.random.default_rng(1)
    img = rng.uniform(0, 1, (6, 7))
    for y in range(6):
        for x in range(7):
            assert bilinear_sample(img, float(x), float(y)) == img[y, x]


def test_bilinear_midpoint_is_average():
    img = np.array([[0.2, 0.8]])
    assert bilinear_sample(img, 0.5, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_bilinear_fully_outside_is_zero():
    img = np.ones((4, 4))
    assert bilinear_sample(img, -10.0, -10.0) == 0.0
    assert bilinear_sample(img, 100.0, 2.0) == 0.0


def test_bilinear_stays_within_contributor_range():
    rng = np.random.default_rng(2)
    img = rng.uniform(0, 1, (8, 8))
    xs = rng.uniform(-2, 9, 500)
    ys = rng.uniform(-2, 9, 500)
    vals = bilinear_sample(img, xs, ys)
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
    # interior samples bounded by their 4 neighbors
    for x, y in zip(rng.uniform(0, 6.9, 50), rng.uniform(0, 6.9, 50)):
        x0, y0 = int(np.floor(x)), int(np.floor(y))
        quad = img[y0 : y0 + 2, x0 : x0 + 2]
        v = bilinear_sample(img, x, y)
        assert quad.min() - 1e-12 <= v <= quad.max() + 1e-12


def test_bilinear_is_continuous():
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 1, (10, 10))
    pts_x = rng.uniform(-1.5, 10.5, 300)
    pts_y = rng.uniform(-1.5, 10.5, 300)
    base = bilinear_sample(img, pts_x, pts_y)
    for dx, dy in [(1e-6, 0), (0, 1e-6), (-1e-6, 1e-6)]:
        moved = bilinear_sample(img, pts_x + dx, pts_y + dy)
        assert np.max(np.abs(moved - base)) <= 2e-6


def test_bilinear_vectorized_matches_scalar():
    rng = np.random.default_rng(4)
    img = rng.uniform(0, 1, (5, 5))
    xs = rng.uniform(-1, 6, 20)
    ys = rng.uniform(-1, 6, 20)
    vec = bilinear_sample(img, xs, ys)
    for i in range(20):
        assert vec[i] == bilinear_sample(img, xs[i], ys[i])
