"""Box math and sinusoidal embeddings."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strn import geometry

boxes = st.tuples(st.floats(-500, 500), st.floats(-500, 500),
                  st.floats(0.5, 200), st.floats(0.5, 200))


class TestIoU:
    def test_identical(self):
        assert geometry.iou([5, 5, 2, 3], [5, 5, 2, 3]) == pytest.approx(1.0)

    def test_disjoint(self):
        assert geometry.iou([0, 0, 2, 2], [10, 10, 2, 2]) == 0.0

    def test_known_overlap(self):
        assert geometry.iou([0, 0, 2, 2], [1, 0, 2, 2]) == pytest.approx(1 / 3)

    @given(boxes, boxes)
    @settings(max_examples=100, deadline=None)
    def test_bounds_and_symmetry(self, b1, b2):
        v = geometry.iou(b1, b2)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(geometry.iou(b2, b1), abs=1e-12)


class TestRelativeGeometry:
    def test_identical_boxes_clamped(self):
        got = geometry.relative_geometry([4, 5, 2, 3], [4, 5, 2, 3])
        np.testing.assert_allclose(got, [np.log(1e-3), np.log(1e-3), 0.0, 0.0])

    def test_known_values(self):
        got = geometry.relative_geometry([12, 10, 4, 8], [10, 10, 4, 8])
        np.testing.assert_allclose(got, [-0.69315, -6.90776, 0.0, 0.0], atol=1e-5)

    @given(boxes, boxes, st.floats(0.1, 10), st.floats(-300, 300), st.floats(-300, 300))
    @settings(max_examples=100, deadline=None)
    def test_scale_and_translation_invariance(self, b1, b2, s, tx, ty):
        b1 = np.asarray(b1)
        b2 = np.asarray(b2)
        base = geometry.relative_geometry(b1, b2)
        np.testing.assert_allclose(geometry.relative_geometry(b1 * s, b2 * s),
                                   base, atol=1e-9)
        shift = np.array([tx, ty, 0.0, 0.0])
        np.testing.assert_allclose(geometry.relative_geometry(b1 + shift, b2 + shift),
                                   base, atol=1e-9)

    def test_pairwise_matches_scalar(self):
        rng = np.random.default_rng(0)
        bs = np.column_stack([rng.uniform(0, 100, 5), rng.uniform(0, 100, 5),
                              rng.uniform(1, 20, 5), rng.uniform(1, 20, 5)])
        full = geometry.pairwise_relative_geometry(bs)
        for i in range(5):
            for j in range(5):
                np.testing.assert_allclose(
                    full[i, j], geometry.relative_geometry(bs[i], bs[j]), atol=1e-12)


class TestMotionRaw:
    def test_known_values(self):
        got = geometry.motion_raw([10, 10, 4, 8], [12, 11, 4, 8], 1)
        np.testing.assert_allclose(got, [-0.69315, -2.07944, 0.0, 0.0], atol=1e-5)

    def test_identical_boxes_clamped(self):
        got = geometry.motion_raw([10, 10, 4, 8], [10, 10, 4, 8], 1)
        np.testing.assert_allclose(got, [np.log(1e-3), np.log(1e-3), 0.0, 0.0])

    def test_gap_doubling_shifts_size_terms(self):
        b = [10, 10, 4, 8]
        k1 = geometry.motion_raw(b, b, 1)
        k2 = geometry.motion_raw(b, b, 2)
        np.testing.assert_allclose(k2[:2], k1[:2])  # stays at the clamp
        np.testing.assert_allclose(k2[2:], k1[2:] - np.log(2))

    @given(boxes, boxes, st.floats(-200, 200), st.floats(-200, 200))
    @settings(max_examples=100, deadline=None)
    def test_translation_invariance(self, b1, b2, tx, ty):
        shift = np.array([tx, ty, 0.0, 0.0])
        np.testing.assert_allclose(
            geometry.motion_raw(np.asarray(b1) + shift, np.asarray(b2) + shift, 3),
            geometry.motion_raw(b1, b2, 3), atol=1e-9)


class TestBareLocation:
    def test_center_box(self):
        got = geometry.bare_location([960, 540, 192, 216], 1920, 1080)
        np.testing.assert_allclose(got, [0.5, 0.5, 0.1, 0.2])

    def test_origin_center(self):
        got = geometry.bare_location([0, 0, 10, 10], 100, 100)
        np.testing.assert_allclose(got[:2], [0.0, 0.0])

    def test_known_values(self):
        got = geometry.bare_location([100, 50, 30, 60], 1000, 500)
        np.testing.assert_allclose(got, [0.1, 0.1, 0.03, 0.12])

    def test_no_clamping_outside_image(self):
        got = geometry.bare_location([-50, 1200, 30, 60], 1000, 1000)
        assert got[0] < 0 and got[1] > 1


class TestEmbedding:
    def test_frequencies_span_wavelengths(self):
        f = geometry.embed_frequencies(8)
        np.testing.assert_allclose(f[0], 2 * np.pi)
        np.testing.assert_allclose(f[-1], 2 * np.pi / 1000)
        assert np.all(np.diff(f) < 0)

    def test_shapes(self):
        f4 = geometry.embed_frequencies(4)
        out = geometry.sinusoidal_embed(np.zeros(8), f4)
        assert out.shape == (64,)
        out2 = geometry.sinusoidal_embed(np.zeros((7, 4)), geometry.embed_frequencies(8))
        assert out2.shape == (7, 64)

    def test_zero_input(self):
        f = geometry.embed_frequencies(2)
        out = geometry.sinusoidal_embed(np.zeros(1), f)
        np.testing.assert_allclose(out, [0.0, 0.0, 1.0, 1.0])

    def test_deterministic_same_input(self):
        f = geometry.embed_frequencies(8)
        x = np.array([0.25, -1.5, 3.0, 0.0])
        np.testing.assert_array_equal(geometry.sinusoidal_embed(x, f),
                                      geometry.sinusoidal_embed(x.copy(), f))
