import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stylereweight.errors import DegenerateRowError, DimensionError, DomainError, ImageFormatError
from stylereweight.numerics import (
    MASK_SENTINEL,
    as_tensor,
    channel_moments,
    cosine_similarity_rows,
    histogram_pdf,
    kl_divergence,
    matmul,
    read_tensor,
    softmax_rows,
    write_tensor,
)
from stylereweight.numerics.random import EXTRACTOR_STREAM, TEXTURE_STREAM, make_rng
from stylereweight.numerics.statistics import HISTOGRAM_FLOOR, Histogram

finite_floats = st.floats(min_value=-50, max_value=50, allow_nan=False)


def test_matmul_matches_numpy(rng):
    a, b = rng.standard_normal((3, 4)), rng.standard_normal((4, 2))
    np.testing.assert_allclose(matmul(a, b), a @ b)


def test_matmul_rejects_mismatched_inner_extents(rng):
    with pytest.raises(DimensionError):
        matmul(rng.standard_normal((3, 4)), rng.standard_normal((3, 2)))


def test_matmul_rejects_wrong_rank(rng):
    with pytest.raises(DimensionError):
        matmul(rng.standard_normal(3), rng.standard_normal((3, 2)))


def test_as_tensor_rejects_non_finite():
    with pytest.raises(DomainError):
        as_tensor([1.0, np.inf])
    with pytest.raises(DomainError):
        as_tensor([[np.nan]])


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 6)), elements=finite_floats))
def test_softmax_rows_are_distributions(logits):
    weights = softmax_rows(logits)
    assert np.all(weights >= 0)
    np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-12)


def test_softmax_is_stable_for_large_logits():
    weights = softmax_rows(np.array([[1000.0, 0.0], [-1000.0, -1000.0]]))
    assert np.all(np.isfinite(weights))
    np.testing.assert_allclose(weights[0], [1.0, 0.0], atol=1e-300)
    np.testing.assert_allclose(weights[1], [0.5, 0.5])


def test_softmax_ignores_masked_entries():
    weights = softmax_rows(np.array([[0.0, MASK_SENTINEL, 0.0]]))
    np.testing.assert_allclose(weights, [[0.5, 0.0, 0.5]])


def test_softmax_fully_masked_row_is_degenerate():
    with pytest.raises(DegenerateRowError):
        softmax_rows(np.array([[0.0, 1.0], [MASK_SENTINEL, -np.inf]]))


def test_softmax_rejects_nan():
    with pytest.raises(DomainError):
        softmax_rows(np.array([[np.nan, 0.0]]))


def test_channel_moments_use_population_variance(rng):
    features = rng.standard_normal((50, 3)) * [1.0, 2.0, 3.0] + [0.0, 1.0, -1.0]
    moments = channel_moments(features)
    np.testing.assert_allclose(moments.mean, features.mean(axis=0))
    np.testing.assert_allclose(moments.variance, features.var(axis=0))


def test_channel_moments_reject_empty_token_axis():
    with pytest.raises(DomainError):
        channel_moments(np.zeros((0, 3)))


def test_histogram_sums_to_one_with_floor(rng):
    histogram = histogram_pdf(rng.uniform(0, 1, 200), bins=16, value_range=(0.0, 2.0))
    assert math.isclose(histogram.probabilities.sum(), 1.0, abs_tol=1e-12)
    assert histogram.probabilities.min() >= HISTOGRAM_FLOOR / 2
    assert len(histogram.bin_edges) == 17


def test_histogram_widens_constant_input():
    histogram = histogram_pdf(np.full(10, 3.0), bins=4)
    assert histogram.bin_edges[0] == 2.5
    assert histogram.bin_edges[-1] == 3.5


def test_histogram_rejects_bad_arguments():
    with pytest.raises(DomainError):
        histogram_pdf(np.zeros(0))
    with pytest.raises(DomainError):
        histogram_pdf(np.ones(4), bins=1)
    with pytest.raises(DomainError):
        histogram_pdf(np.ones(4), value_range=(1.0, 1.0))


def test_kl_of_identical_histograms_is_zero(rng):
    values = rng.standard_normal(100)
    histogram = histogram_pdf(values, bins=8)
    assert kl_divergence(histogram, histogram) == 0.0


@settings(max_examples=50)
@given(
    arrays(np.float64, st.integers(1, 40), elements=st.floats(0, 1)),
    arrays(np.float64, st.integers(1, 40), elements=st.floats(0, 1)),
)
def test_kl_is_non_negative(a, b):
    p = histogram_pdf(a, bins=8, value_range=(0.0, 1.0))
    q = histogram_pdf(b, bins=8, value_range=(0.0, 1.0))
    assert kl_divergence(p, q) >= 0.0


def test_kl_requires_identical_edges(rng):
    values = rng.uniform(0, 1, 20)
    with pytest.raises(DomainError):
        kl_divergence(histogram_pdf(values, 8, (0.0, 1.0)), histogram_pdf(values, 8, (0.0, 2.0)))


def test_cosine_similarity_rows():
    a = np.array([[1.0, 0.0], [1.0, 1.0]])
    b = np.array([[2.0, 0.0], [-1.0, -1.0]])
    np.testing.assert_allclose(cosine_similarity_rows(a, b), [1.0, -1.0])


def test_cosine_similarity_rejects_zero_rows():
    with pytest.raises(DomainError):
        cosine_similarity_rows(np.zeros((1, 2)), np.ones((1, 2)))


def test_tensor_file_round_trip(tmp_path, rng):
    tensor = rng.standard_normal((2, 3, 4))
    write_tensor(tmp_path / "t.zten", tensor)
    np.testing.assert_array_equal(read_tensor(tmp_path / "t.zten"), tensor)


def test_truncated_tensor_reports_offset(tmp_path):
    data = b"ZTEN 1 3\n" + np.zeros(2, dtype="<f8").tobytes()
    (tmp_path / "bad.zten").write_bytes(data)
    with pytest.raises(ImageFormatError) as caught:
        read_tensor(tmp_path / "bad.zten")
    assert caught.value.offset == len(data)


def test_tensor_without_magic_fails_at_zero(tmp_path):
    (tmp_path / "bad.zten").write_bytes(b"NOPE 1 1\n" + bytes(8))
    with pytest.raises(ImageFormatError) as caught:
        read_tensor(tmp_path / "bad.zten")
    assert caught.value.offset == 0


def test_make_rng_is_deterministic_per_stream():
    first = make_rng(5, TEXTURE_STREAM).standard_normal(4)
    again = make_rng(5, TEXTURE_STREAM).standard_normal(4)
    other = make_rng(5, EXTRACTOR_STREAM).standard_normal(4)
    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, other)


def test_matmul_matches_a_triple_loop(rng):
    a, b = rng.standard_normal((3, 5)), rng.standard_normal((5, 4))
    expected = np.zeros((3, 4))
    for i in range(3):
        for j in range(4):
            for k in range(5):
                expected[i, j] += a[i, k] * b[k, j]
    np.testing.assert_allclose(matmul(a, b), expected, atol=1e-12)


@given(
    arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)), elements=finite_floats),
    st.floats(min_value=-100, max_value=100, allow_nan=False),
)
def test_softmax_is_shift_invariant(logits, shift):
    np.testing.assert_allclose(softmax_rows(logits + shift), softmax_rows(logits), atol=1e-12)


def test_softmax_hand_example():
    np.testing.assert_allclose(softmax_rows(np.array([[math.log(2.0), 0.0]])), [[2 / 3, 1 / 3]], rtol=1e-12)


def test_channel_moments_variance_identity(rng):
    features = rng.standard_normal((40, 4)) * 1.5 + 0.7
    moments = channel_moments(features)
    identity = (features**2).mean(axis=0) - features.mean(axis=0) ** 2
    np.testing.assert_allclose(moments.variance, identity, rtol=1e-10)


def test_histogram_matches_brute_force_counting(rng):
    values = rng.uniform(-0.5, 1.5, 300)
    lo, hi, bins = 0.0, 1.0, 10
    edges = np.linspace(lo, hi, bins + 1)
    counts = np.zeros(bins)
    for value in np.clip(values, lo, hi):
        for index in range(bins):
            last = index == bins - 1
            if edges[index] <= value < edges[index + 1] or (last and value == hi):
                counts[index] += 1
                break
    expected = np.maximum(counts / values.size, HISTOGRAM_FLOOR)
    expected = expected / expected.sum()
    histogram = histogram_pdf(values, bins=bins, value_range=(lo, hi))
    np.testing.assert_allclose(histogram.probabilities, expected, rtol=1e-12)


def test_histogram_of_a_uniform_grid_is_flat():
    values = (np.arange(8) + 0.5) / 8
    histogram = histogram_pdf(values, bins=4, value_range=(0.0, 1.0))
    np.testing.assert_allclose(histogram.probabilities, np.full(4, 0.25), rtol=1e-12)
    np.testing.assert_allclose(histogram.bin_edges, [0.0, 0.25, 0.5, 0.75, 1.0])


def test_kl_hand_example():
    edges = np.array([0.0, 1.0, 2.0])
    p = Histogram(bin_edges=edges, probabilities=np.array([0.5, 0.5]))
    q = Histogram(bin_edges=edges, probabilities=np.array([0.25, 0.75]))
    assert math.isclose(kl_divergence(p, q), 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0), rel_tol=1e-12)
    assert math.isclose(kl_divergence(p, q), 0.14384, abs_tol=1e-5)


@settings(max_examples=50)
@given(
    arrays(np.float64, 30, elements=st.floats(0, 1)),
    arrays(np.float64, 30, elements=st.floats(0, 1)),
)
def test_kl_is_zero_only_for_equal_histograms(a, b):
    p = histogram_pdf(a, bins=6, value_range=(0.0, 1.0))
    q = histogram_pdf(b, bins=6, value_range=(0.0, 1.0))
    if np.array_equal(p.probabilities, q.probabilities):
        assert kl_divergence(p, q) == 0.0
    else:
        assert kl_divergence(p, q) > 0.0
