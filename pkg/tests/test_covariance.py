import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from corrca.covariance import (
    between_covariance_direct,
    covariance_pair,
    cross_covariance_blocks,
    scatter_set,
    total_covariance_fast,
    within_covariance,
)
from corrca.data import center_per_repetition

from conftest import pair_tensor

UP = [1, 2, 3]
DOWN = [3, 2, 1]


def test_within_hand_values():
    assert within_covariance(pair_tensor(UP, UP))[0, 0] == 4.0
    assert within_covariance(pair_tensor(UP, DOWN))[0, 0] == 4.0


def test_between_hand_values():
    assert between_covariance_direct(pair_tensor(UP, UP))[0, 0] == 4.0
    assert between_covariance_direct(pair_tensor(UP, DOWN))[0, 0] == -4.0
    assert between_covariance_direct(pair_tensor(UP, [5, 5, 5]))[0, 0] == 0.0


def test_total_hand_values():
    assert total_covariance_fast(pair_tensor(UP, DOWN))[0, 0] == 0.0
    assert total_covariance_fast(pair_tensor(UP, UP))[0, 0] == 8.0


def test_constant_tensor_gives_zero():
    x = np.full((5, 3, 4), 2.5)
    assert not within_covariance(x).any()
    assert not covariance_pair(x).r_b.any()


def test_identical_repetitions(rng):
    base = rng.standard_normal((20, 3))
    x = np.repeat(base[:, :, None], 4, axis=2)
    pair = covariance_pair(x)
    assert np.allclose(pair.r_b, 3 * pair.r_w, rtol=1e-12, atol=1e-12)


def test_white_noise_between_small(rng):
    x = rng.standard_normal((10000, 3, 3))
    pair = covariance_pair(x)
    assert np.linalg.norm(pair.r_b) < 0.1 * np.linalg.norm(pair.r_w)


def test_chunked_accumulation_matches(rng):
    x = rng.standard_normal((37, 4, 3))
    assert np.allclose(within_covariance(x, chunk_size=5), within_covariance(x), rtol=1e-13)
    assert np.allclose(total_covariance_fast(x, chunk_size=4), total_covariance_fast(x), rtol=1e-13)


@settings(max_examples=60, deadline=None)
@given(
    st.tuples(st.integers(2, 12), st.integers(1, 4), st.integers(2, 5)).flatmap(
        lambda s: arrays(np.float64, s, elements=st.floats(-10, 10, allow_nan=False))
    )
)
def test_fast_matches_direct(x):
    pair = covariance_pair(x)
    direct = between_covariance_direct(x)
    scale = max(np.abs(direct).max(), np.abs(pair.r_w).max(), 1.0)
    assert np.max(np.abs(pair.r_b - direct)) <= 1e-9 * scale
    assert np.allclose(pair.r_b, pair.r_b.T)


def test_scatter_hand_identity():
    sc = scatter_set(pair_tensor(UP, UP))
    assert 2 * sc.s_b[0, 0] == 8.0


def test_scatter_centered_has_no_mean_term(rng):
    sc = scatter_set(center_per_repetition(rng.standard_normal((15, 3, 4))))
    assert np.max(np.abs(sc.s_m)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.integers(1, 4), st.integers(2, 5))
def test_scatter_identities(seed, t, d, n):
    x = np.random.default_rng(seed).standard_normal((t, d, n)) + np.arange(n)
    sc = scatter_set(x)
    pair = covariance_pair(x)
    assert np.allclose(n * sc.s_b, pair.r_w + pair.r_b, atol=1e-9)
    assert np.allclose(n * sc.s_w, (n - 1) * pair.r_w - pair.r_b + n * t * sc.s_m, atol=1e-9)
    assert np.allclose(sc.s_t, sc.s_b + sc.s_w, atol=1e-9)


def test_cross_blocks(rng):
    x = rng.standard_normal((12, 3, 4))
    blocks = cross_covariance_blocks(x)
    dev = x - x.mean(axis=0)
    for l in range(4):
        assert np.allclose(blocks.block(l, l), dev[:, :, l].T @ dev[:, :, l])
    off = sum(blocks.block(l, k) for l in range(4) for k in range(4) if l != k)
    assert np.allclose(off, between_covariance_direct(x))
    assert np.allclose(blocks.block(0, 1), blocks.block(1, 0).T)
    assert blocks.r_full.shape == (12, 12)
