import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from corrca.covariance import covariance_pair
from corrca.data import center_per_repetition
from corrca.errors import DefinitenessError, DimensionError, RankError, ValidationError
from corrca.linear import (
    UndefinedIscWarning,
    f_statistic,
    fit,
    fit_lda_view,
    fit_pca_mean_baseline,
    forward_model,
    isc_of_components,
    isc_per_subject,
    isc_statistics,
    isc_to_snr,
    snr_to_isc,
    transform,
)

from conftest import pair_tensor


def _two_source_tensor(rng, t=2000):
    """Shared source along [a, b] plus a subject-specific source along [c, d]."""
    ab, cd = np.array([1.0, 0.4]), np.array([-0.3, 1.0])
    s = rng.standard_normal(t)
    reps = [np.outer(s, ab) + np.outer(rng.standard_normal(t), cd) for _ in range(2)]
    return np.stack(reps, axis=2), ab, cd


def test_two_source_example(rng):
    x, ab, cd = _two_source_tensor(rng)
    model = fit(x)
    assert model.isc[0] > 0.99
    assert model.isc[1] < 0.2
    cos = lambda u, w: abs(u @ w) / np.linalg.norm(u) / np.linalg.norm(w)
    assert cos(model.forward[:, 0], ab) > 0.99
    assert cos(model.forward[:, 1], cd) > 0.99


def test_identical_repetitions_unit_isc(rng):
    base = rng.standard_normal((50, 2))
    model = fit(np.stack([base, base], axis=2))
    assert np.all(np.abs(model.isc - 1.0) < 1e-9)


def test_white_noise_null(rng):
    model = fit(rng.standard_normal((5000, 4, 4)))
    assert model.isc.max() < 0.1


def test_isc_ordering_and_normalization(rng):
    x = rng.standard_normal((40, 5, 3))
    model = fit(x)
    assert np.all(np.diff(model.isc) <= 1e-12)
    pair = covariance_pair(center_per_repetition(x))
    v = model.backward
    assert np.allclose(v.T @ pair.r_w @ v, np.eye(5), atol=1e-9)


def test_singular_within_raises(rng):
    x = rng.standard_normal((3, 6, 2))
    with pytest.raises(DefinitenessError):
        fit(x)
    assert fit(x, "tsvd:2").j_components == 2
    with pytest.warns(UndefinedIscWarning):
        shrunk = fit(x, "shrinkage:0.5")
    assert shrunk.j_components == 4
    assert np.all(shrunk.isc <= 1 + 1e-9)


def test_shrinkage_reports_training_isc(rng):
    x = rng.standard_normal((30, 6, 3))
    model = fit(x, "shrinkage:0.6")
    y = transform(center_per_repetition(x), model)
    assert np.allclose(isc_of_components(y), model.isc, atol=1e-9)
    assert np.all(np.diff(model.isc) <= 1e-12)


def test_transform_identity_and_linearity(rng):
    x = rng.standard_normal((6, 3, 2))
    eye = np.eye(3)
    assert np.array_equal(transform(x, eye).values, x)
    v = rng.standard_normal((3, 2))
    assert np.allclose(transform(2 * x, v).values, 2 * transform(x, v).values)


def test_transform_self_consistency(rng):
    x = center_per_repetition(rng.standard_normal((30, 4, 3)))
    model = fit(x)
    assert np.allclose(isc_of_components(transform(x, model)), model.isc, atol=1e-9)


def test_transform_dimension_mismatch(rng):
    model = fit(rng.standard_normal((20, 3, 2)))
    with pytest.raises(DimensionError):
        transform(rng.standard_normal((20, 4, 2)), model)


def test_forward_square_is_inverse_transpose(rng):
    v = rng.standard_normal((4, 4))
    r_w = np.cov(rng.standard_normal((4, 50))) * 49
    assert np.allclose(forward_model(v, r_w), np.linalg.inv(v).T, atol=1e-9)


def test_forward_identity_metric(rng):
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    assert np.allclose(forward_model(q[:, :2], np.eye(4)), q[:, :2], atol=1e-12)


def test_forward_least_squares_residual(rng):
    m = rng.standard_normal((4, 8))
    r_w = m @ m.T
    v = rng.standard_normal((4, 2))
    a = forward_model(v, r_w)
    # reconstruction residual (I - A V^T) is R_W-orthogonal to the component subspace
    resid = np.eye(4) - a @ v.T
    assert np.allclose(v.T @ resid @ r_w, 0.0, atol=1e-9)


def test_forward_rank_error():
    with pytest.raises(RankError):
        forward_model(np.array([[1.0, 2.0], [0.0, 0.0]]).T, np.diag([1.0, 0.0]))


def test_forward_sign_convention(rng):
    model = fit(rng.standard_normal((40, 4, 3)))
    for j in range(model.j_components):
        col = model.forward[:, j]
        assert col[np.argmax(np.abs(col))] > 0


@pytest.mark.parametrize(
    "s2, expected",
    [([1, 2, 3], 1.0), ([3, 2, 1], -1.0), ([2, 4, 6], 0.8)],
)
def test_isc_hand_values(s2, expected):
    assert np.isclose(isc_of_components(pair_tensor([1, 2, 3], s2))[0], expected, rtol=1e-14)


def test_isc_undefined_is_nan():
    assert np.isnan(isc_of_components(np.ones((4, 1, 3)))[0])


def test_isc_per_subject_identical():
    y = pair_tensor([1, 2, 3], [1, 2, 3])
    assert np.allclose(isc_per_subject(y), 1.0)


def test_isc_per_subject_zero_subject(rng):
    s = rng.standard_normal(20)
    y = np.stack([s, s + 0.1 * rng.standard_normal(20), np.zeros(20)], axis=1)[:, None, :]
    assert isc_per_subject(y, 2)[0] == 0.0


def test_isc_per_subject_numerators_sum(rng):
    y = rng.standard_normal((25, 2, 4))
    dev = y - y.mean(axis=0)
    r = np.einsum("ijk,ijl->jkl", dev, dev)
    diag = np.einsum("jkk->jk", r)
    nums = 2 * (r.sum(axis=2) - diag)
    r_b = r.sum(axis=(1, 2)) - diag.sum(axis=1)
    # each ordered pair appears twice across the per-subject numerators
    assert np.allclose(nums.sum(axis=1), 2 * r_b)
    y2 = rng.standard_normal((25, 2, 2))
    per = isc_per_subject(y2)
    assert np.allclose(per[:, 0], isc_of_components(y2))


def test_snr_values():
    assert isc_to_snr(0.0, 2) == 1.0
    assert np.isinf(isc_to_snr(1.0, 3))
    grid = np.linspace(-0.2, 0.99, 50)
    assert np.all(np.diff(isc_to_snr(grid, 5)) > 0)
    assert np.allclose(snr_to_isc(isc_to_snr(grid, 5), 5), grid)


def test_f_statistic_values():
    f, d1, d2 = f_statistic(0.0, 200, 5)
    assert np.isclose(f, 200 / 199)
    f, d1, d2 = f_statistic(0.5, 200, 5)
    assert np.isclose(f, 600 / 99.5, rtol=1e-12)
    assert np.isclose(f, 6.0302, atol=1e-4)
    assert (d1, d2) == (800, 199)
    assert np.isinf(f_statistic(1.0, 10, 2)[0])


def test_statistics_flags_saturation():
    st_ = isc_statistics([1.0, 0.3], 20, 3)
    assert st_.saturated.tolist() == [True, False]


def test_lda_view_matches(rng):
    x = center_per_repetition(rng.standard_normal((30, 4, 3)))
    a, b = fit(x), fit_lda_view(x)
    assert np.allclose(a.isc, b.isc, atol=1e-8)
    for j in range(4):
        ang = linalg.subspace_angles(a.backward[:, [j]], b.backward[:, [j]])[0]
        assert ang < 1e-6


def test_lda_separation_mapping(rng):
    x = center_per_repetition(rng.standard_normal((30, 4, 3)))
    m = fit_lda_view(x)
    assert np.allclose(m.eigenvalues, isc_to_snr(m.isc, 3), rtol=1e-8)


def test_lda_view_rejects_uncentered(rng):
    x = rng.standard_normal((30, 3, 3))
    x[:, :, 0] += 5.0
    with pytest.raises(ValidationError):
        fit_lda_view(x)


def test_pca_baseline_axes():
    t = np.linspace(0, 1, 200, endpoint=False)
    mean = np.stack([np.sqrt(2) * np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)], axis=1)
    x = np.stack([mean, mean], axis=2)
    m = fit_pca_mean_baseline(x)
    assert np.allclose(np.abs(m.backward), np.eye(2), atol=1e-9)
    assert m.method == "pca_mean"


def test_pca_baseline_agrees_with_isotropic_noise(rng):
    t, d = 4000, 5
    mix = np.linalg.qr(rng.standard_normal((d, 2)))[0] * [3.0, 2.0]
    s = rng.standard_normal((t, 2)) @ mix.T
    x = np.stack([s + rng.standard_normal((t, d)) for _ in range(4)], axis=2)
    c, p = fit(x), fit_pca_mean_baseline(x)
    assert linalg.subspace_angles(c.forward[:, :2], p.forward[:, :2]).max() < 0.1


def test_truncate(rng):
    m = fit(rng.standard_normal((20, 4, 2)))
    assert m.truncate(2).j_components == 2
    with pytest.raises(DimensionError):
        m.truncate(5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 30), st.integers(1, 5), st.integers(2, 5))
def test_isc_bounded(seed, t, d, n):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((t, d, n))
    try:
        model = fit(x)
    except DefinitenessError:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UndefinedIscWarning)
            model = fit(x, "shrinkage:0.5")
    assert model.isc.max() <= 1 + 1e-9
    assert model.isc.min() >= -1 / (n - 1) - 1e-9
