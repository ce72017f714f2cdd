import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from texfeat.errors import DegenerateImageError, ParameterError
from texfeat.glcm import (
    ANGLES,
    Glcm,
    Offset,
    direction_offsets,
    glcm,
    glcm_all_directions,
    isotropic_glcm,
    quantize,
    stats,
)
from texfeat.imageio import GrayImage


def small_images(max_level):
    return st.tuples(st.integers(2, 12), st.integers(2, 12)).flatmap(
        lambda hw: arrays(np.uint8, hw, elements=st.integers(0, max_level))
    )


def _glcm_from_k(k):
    """Build a Glcm whose normalized form is ``k`` (k given as integer weights)."""
    k = np.asarray(k, dtype=np.int64)
    return Glcm(k.shape[0], k, Offset(1, 0))


def test_quantize_identity_at_256(rng):
    img = GrayImage(rng.integers(0, 256, (5, 5), dtype=np.uint8))
    assert quantize(img, 256) == img


def test_quantize_floor_arithmetic():
    img = GrayImage(np.array([[255, 0, 32], [31, 224, 223], [1, 2, 3]]))
    assert quantize(img, 8).pixels[:2].tolist() == [[7, 0, 1], [0, 7, 6]]


def test_quantize_binarizes():
    img = GrayImage(np.arange(256, dtype=np.uint8).reshape(16, 16))
    q = quantize(img, 2).pixels.ravel()
    assert (q[:128] == 0).all() and (q[128:] == 1).all()


@pytest.mark.parametrize("levels", [1, 257])
def test_quantize_range(levels):
    with pytest.raises(ParameterError):
        quantize(GrayImage(np.zeros((3, 3), np.uint8)), levels)


def test_small_example_counts():
    img = GrayImage(np.array([[1, 1, 2], [1, 2, 2], [2, 2, 1]]))
    c = glcm(img, Offset(1, 0), levels=3).counts
    assert (c[1, 1], c[1, 2], c[2, 2], c[2, 1]) == (1, 2, 2, 1)
    assert c.sum() == 6


def test_value_followed_by_another_twice():
    # 2 followed by 1 on its right occurs exactly twice
    img = GrayImage(np.array([[2, 1, 0, 0], [0, 0, 2, 1], [0, 3, 3, 0]]))
    assert glcm(img, Offset(1, 0), levels=4).counts[2, 1] == 2


def test_textbook_image_matches_enumeration():
    px = np.array([[1, 1, 5, 6, 8], [2, 3, 5, 7, 1], [4, 5, 7, 1, 2], [8, 5, 1, 2, 5]])
    c = glcm(GrayImage(px), Offset(1, 0), levels=9).counts
    assert c[1, 2] == 2
    assert np.array_equal(c, oracles.glcm_counts(px, 1, 0, 9))


def test_constant_image_single_cell():
    img = GrayImage(np.full((4, 5), 6, np.uint8))
    for g in glcm_all_directions(img, 1, 8):
        assert g.counts[6, 6] == g.total and g.total > 0


def test_direction_order():
    offs = direction_offsets(2)
    assert [(o.dx, o.dy) for o in offs] == [(2, 0), (2, -2), (0, -2), (-2, -2), (-2, 0), (-2, 2), (0, 2), (2, 2)]
    assert len(ANGLES) == 8


def test_opposite_is_transpose(rng):
    img = GrayImage(rng.integers(0, 8, (7, 9), dtype=np.uint8))
    mats = glcm_all_directions(img, 1, 8)
    for a in range(4):
        assert np.array_equal(mats[a + 4].counts, mats[a].counts.T)


def test_random_8x8_matches_oracle(rng):
    px = rng.integers(0, 256, (8, 8), dtype=np.uint8)
    for g, (dx, dy) in zip(glcm_all_directions(GrayImage(px)), oracles.DIRS):
        assert np.array_equal(g.counts, oracles.glcm_counts(px, dx, dy, 256))


def test_degenerate():
    with pytest.raises(DegenerateImageError):
        glcm(GrayImage(np.zeros((3, 3), np.uint8)), Offset(3, 0))


def test_level_overflow_rejected():
    with pytest.raises(ParameterError):
        glcm(GrayImage(np.full((3, 3), 9, np.uint8)), Offset(1, 0), levels=8)


def test_isotropic_is_sum(rng):
    img = GrayImage(rng.integers(0, 4, (6, 6), dtype=np.uint8))
    iso = isotropic_glcm(img, 1, 4)
    assert np.array_equal(iso.counts, sum(g.counts for g in glcm_all_directions(img, 1, 4)))
    assert np.array_equal(iso.counts, iso.counts.T)
    assert abs(iso.normalized.sum() - 1) < 1e-12


def test_stats_single_diagonal_cell():
    k = np.zeros((4, 4), np.int64)
    k[2, 2] = 5
    s = stats(_glcm_from_k(k))
    assert s.as_tuple() == (1.0, 0.0, 1.0, 0.0, 0.0)


def test_stats_single_off_diagonal_cell():
    k = np.zeros((4, 4), np.int64)
    k[0, 3] = 1
    s = stats(_glcm_from_k(k))
    assert s.energy == 1.0 and s.entropy == 0.0 and s.contrast == 9.0


@pytest.mark.parametrize("levels", [2, 8, 256])
def test_stats_uniform(levels):
    s = stats(_glcm_from_k(np.ones((levels, levels), np.int64)))
    assert s.energy == pytest.approx(1 / levels**2, rel=1e-12)
    assert s.entropy == pytest.approx(2 * math.log(levels), rel=1e-12)


def test_stats_unit_offdiagonal_band():
    k = np.zeros((5, 5), np.int64)
    for i in range(4):
        k[i, i + 1] = 1
        k[i + 1, i] = 2
    s = stats(_glcm_from_k(k))
    assert s.contrast == pytest.approx(1.0, rel=1e-12)
    assert s.homogeneity == pytest.approx(0.5, rel=1e-12)
    assert s.variance == pytest.approx(1.0, rel=1e-12)


def test_stats_random_6x6_l4_against_oracle(rng):
    px = rng.integers(0, 4, (6, 6), dtype=np.uint8)
    g = glcm(GrayImage(px), Offset(1, 0), 4)
    expected = oracles.glcm_stats(oracles.glcm_counts(px, 1, 0, 4))
    assert np.allclose(stats(g).as_tuple(), expected, rtol=1e-12, atol=1e-15)


def test_standard_variance_mode(rng):
    px = rng.integers(0, 6, (7, 7), dtype=np.uint8)
    g = glcm(GrayImage(px), Offset(0, 1), 6)
    assert stats(g, "standard").variance == pytest.approx(oracles.standard_variance(g.counts), rel=1e-12)
    with pytest.raises(ParameterError):
        stats(g, "bogus")


@settings(max_examples=100, deadline=None)
@given(small_images(7), st.integers(1, 3))
def test_glcm_oracle_and_conservation(px, d):
    h, w = px.shape
    img = GrayImage(px)
    for off in direction_offsets(d):
        valid = max(0, w - abs(off.dx)) * max(0, h - abs(off.dy))
        if valid == 0:
            with pytest.raises(DegenerateImageError):
                glcm(img, off, 8)
            continue
        g = glcm(img, off, 8)
        assert g.total == valid
        assert np.array_equal(g.counts, oracles.glcm_counts(px, off.dx, off.dy, 8))
        assert np.array_equal(g.counts, glcm(img, -off, 8).counts.T)


@settings(max_examples=100, deadline=None)
@given(small_images(15))
def test_stat_bounds_and_identity(px):
    img = GrayImage(px)
    for g in glcm_all_directions(img, 1, 16):
        s = stats(g)
        nonzero = int((g.counts > 0).sum())
        diag_only = not (g.counts - np.diag(np.diag(g.counts))).any()
        assert 0 < s.energy <= 1
        assert (s.energy == 1.0) if nonzero == 1 else (s.energy < 1.0)
        assert 0 < s.homogeneity <= 1 + 1e-12
        assert s.contrast >= 0 and (s.contrast == 0) == diag_only
        assert 0 <= s.entropy <= 2 * math.log(16) + 1e-12
        assert s.variance == s.contrast


@settings(max_examples=100, deadline=None)
@given(small_images(255).filter(lambda a: min(a.shape) >= 2))
def test_rot90_permutes_directions(px):
    base = glcm_all_directions(GrayImage(px))
    rotated = glcm_all_directions(GrayImage(np.rot90(px)))
    for k in range(8):
        assert np.array_equal(rotated[(k + 2) % 8].counts, base[k].counts)
    tuples = sorted(stats(g).as_tuple() for g in base)
    assert tuples == sorted(stats(g).as_tuple() for g in rotated)
