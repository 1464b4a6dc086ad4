import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glyphedit import _kernels
from glyphedit._kernels import pure
from helpers import edit_distance_oracle

words = st.text(alphabet="abc你好 ", min_size=0, max_size=12)


def test_backend_reported():
    assert _kernels.BACKEND in {"native", "pure"}


class TestLevenshtein:
    def test_known_values(self):
        assert _kernels.levenshtein("hello", "hello") == 0
        assert _kernels.levenshtein("helo", "hello") == 1
        assert _kernels.levenshtein("", "ab") == 2
        assert _kernels.levenshtein("kitten", "sitting") == 3

    @settings(max_examples=200, deadline=None)
    @given(words, words)
    def test_matches_oracle(self, a, b):
        assert _kernels.levenshtein(a, b) == edit_distance_oracle(a, b)

    @settings(max_examples=100, deadline=None)
    @given(words, words)
    def test_pure_backend_agrees(self, a, b):
        assert _kernels.levenshtein(a, b) == pure.levenshtein(a, b)

    @settings(max_examples=50, deadline=None)
    @given(words, words)
    def test_symmetry_and_bounds(self, a, b):
        d = _kernels.levenshtein(a, b)
        assert d == _kernels.levenshtein(b, a)
        assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))


class TestPolygonFill:
    def test_full_frame_rectangle(self):
        xs, ys = [0, 8, 8, 0], [0, 0, 8, 8]
        mask = _kernels.polygon_fill(xs, ys, 8, 8)
        assert mask.shape == (8, 8)
        assert mask.min() == 1

    def test_half_rectangle(self):
        mask = _kernels.polygon_fill([0, 4, 4, 0], [0, 0, 8, 8], 8, 8)
        assert mask[:, :4].min() == 1
        assert mask[:, 4:].max() == 0

    def test_values_binary(self):
        mask = _kernels.polygon_fill([1.5, 6.3, 3.1], [1.2, 2.7, 6.8], 8, 8)
        assert set(np.unique(mask)) <= {0, 1}

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 32), st.floats(0, 32)), min_size=3, max_size=8))
    def test_pure_backend_agrees(self, pts):
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        a = _kernels.polygon_fill(xs, ys, 32, 32)
        b = pure.polygon_fill(xs, ys, 32, 32)
        np.testing.assert_array_equal(a, b)

    def test_pixel_center_rule(self):
        # a box from 0.6 to 2.4 covers centers 1.5 only, in both axes
        mask = _kernels.polygon_fill([0.6, 2.4, 2.4, 0.6], [0.6, 0.6, 2.4, 2.4], 4, 4)
        expected = np.zeros((4, 4), dtype=mask.dtype)
        expected[1, 1] = 1
        np.testing.assert_array_equal(mask, expected)
