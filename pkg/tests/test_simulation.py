import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrca.errors import ValidationError
from corrca.linear import CorrCAModel, fit, isc_of_components
from corrca.eigensolve import Regularization
from corrca.simulation import (
    SimulationSpec,
    evaluate_recovery,
    generate,
    pink_noise,
    random_mixing,
    run_study,
    snr_weight,
    subspace_angle,
    sweep,
    write_study,
)


def test_defaults():
    s = SimulationSpec()
    assert (s.t_samples, s.d_features, s.n_reps, s.k_shared, s.snr_db) == (200, 30, 5, 10, 0.0)


def test_snr_weight_values():
    assert snr_weight(0.0) == 0.5
    assert np.isclose(snr_weight(40.0), 100 / 101)
    grid = np.linspace(-60, 60, 41)
    assert np.all(np.diff([snr_weight(v) for v in grid]) > 0)


@pytest.mark.parametrize(
    "kwargs",
    [dict(k_shared=0), dict(k_shared=31), dict(sample_process="brown"), dict(distribution="t"), dict(n_reps=1)],
)
def test_invalid_spec(kwargs):
    with pytest.raises(ValidationError):
        SimulationSpec(**kwargs)


def test_mixing_structure(rng):
    a = random_mixing(8, 3, rng)
    norms = np.linalg.norm(a, axis=0)
    assert np.isclose(norms.max(), 1.0)
    assert np.allclose((a / norms).T @ (a / norms), np.eye(3), atol=1e-12)


def test_common_mixing_shared():
    ds = generate(SimulationSpec(d_features=6, k_shared=2, t_samples=20))
    assert all(m is ds.signal_mixing[0] for m in ds.signal_mixing)
    per = generate(SimulationSpec(d_features=6, k_shared=2, t_samples=20, shared_mixing="per_rep"))
    assert not np.allclose(per.signal_mixing[0], per.signal_mixing[1])


def test_blend_construction():
    spec = SimulationSpec(d_features=5, k_shared=2, t_samples=30, n_reps=3, snr_db=6.0, seed=4)
    ds = generate(spec)
    # pure-signal and pure-noise limits recover unit-norm parts
    sig = generate(SimulationSpec(**{**spec.__dict__, "snr_db": np.inf}))
    xi = snr_weight(6.0)
    for l in range(3):
        assert np.isclose(np.linalg.norm(sig.tensor.values[:, :, l]), 1.0)
    noise = (ds.tensor.values - xi * sig.tensor.values) / (1 - xi)
    for l in range(3):
        assert np.isclose(np.linalg.norm(noise[:, :, l]), 1.0)


def test_true_components_isc_one():
    ds = generate(SimulationSpec(t_samples=50, d_features=6, k_shared=3))
    assert np.allclose(isc_of_components(ds.true_components), 1.0)


def test_linear_profile():
    ds = generate(SimulationSpec(t_samples=4000, d_features=6, k_shared=4, isc_profile="linear", seed=2))
    rho = isc_of_components(ds.true_components)
    assert np.allclose(rho, np.linspace(1, 0.25, 4), atol=0.05)


def test_dichotomized_values():
    ds = generate(SimulationSpec(t_samples=30, d_features=4, k_shared=2, distribution="dichotomized"))
    assert set(np.unique(ds.tensor.values)) <= {-1.0, 1.0}


def test_chi_squared_sources_standardized():
    ds = generate(SimulationSpec(t_samples=500, d_features=4, k_shared=2, distribution="chi_squared"))
    s = ds.true_components[:, :, 0]
    assert np.allclose(s.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(s.std(axis=0), 1.0)
    assert np.all(((s - s.mean(0)) ** 3).mean(0) > 0.5)  # right skew of chi^2


def test_seed_reproducible():
    a = generate(SimulationSpec(t_samples=20, d_features=4, k_shared=2, seed=11))
    b = generate(SimulationSpec(t_samples=20, d_features=4, k_shared=2, seed=11))
    assert np.array_equal(a.tensor.values, b.tensor.values)


def test_pink_noise_moments(rng):
    y = pink_noise(1000, rng)
    assert abs(y.mean()) < 3 / np.sqrt(1000)
    assert np.isclose(y.std(), 1.0)


def test_pink_noise_spectrum_slope(rng):
    t = 8192
    power = np.mean([np.abs(np.fft.rfft(pink_noise(t, rng))) ** 2 for _ in range(50)], axis=0)
    f = np.arange(1, power.size)
    slope = np.polyfit(np.log(f), np.log(power[1:]), 1)[0]
    assert abs(slope + 1.0) < 0.2


def test_pink_noise_autocorrelation(rng):
    y = pink_noise(2000, rng)
    w = rng.standard_normal(2000)
    assert np.corrcoef(y[:-1], y[1:])[0, 1] > 0.2
    assert abs(np.corrcoef(w[:-1], w[1:])[0, 1]) < 0.1


def test_pink_noise_short():
    with pytest.raises(ValueError):
        pink_noise(1, np.random.default_rng(0))


def _pair(spec, seed=0):
    rng = np.random.default_rng(seed)
    train = generate(spec, rng=rng)
    test = generate(spec, rng=rng, mixing=(train.signal_mixing, train.noise_mixing))
    return train, test


def test_high_snr_recovery():
    train, test = _pair(SimulationSpec(snr_db=80))
    met = evaluate_recovery(train, fit(train.tensor), test)
    assert met.subspace_angle_forward < 0.05
    assert met.subspace_angle_components < 0.05
    assert met.mean_isc_test > 0.99
    assert not met.truncated


def test_random_model_baseline():
    # at 0 dB the signal holds half the data norm, so random projections already reach ~0.3
    train, test = _pair(SimulationSpec(snr_db=-10))
    v = np.random.default_rng(1).standard_normal((30, 30))
    model = CorrCAModel(
        backward=v, forward=v, isc=np.zeros(30), eigenvalues=np.zeros(30),
        regularization=Regularization(), training_dims=(200, 30, 5), degenerate=np.zeros(30, bool),
    )
    met = evaluate_recovery(train, model, test)
    assert np.mean(met.per_component_corr) < 0.3


def test_oracle_model_scores_perfectly():
    spec = SimulationSpec(t_samples=100, d_features=6, k_shared=2, n_reps=3, snr_db=np.inf)
    train, test = _pair(spec)
    a = train.signal_mixing[0]
    v = np.linalg.pinv(a).T
    model = CorrCAModel(
        backward=v, forward=a, isc=np.ones(2), eigenvalues=np.full(2, 2.0),
        regularization=Regularization(), training_dims=(100, 6, 3), degenerate=np.zeros(2, bool),
    )
    met = evaluate_recovery(train, model, test)
    assert met.subspace_angle_forward < 1e-7
    assert met.subspace_angle_components < 1e-6
    assert np.allclose(met.per_component_corr, 1.0)
    assert np.allclose(met.per_pattern_corr, 1.0)


def test_truncated_flag():
    train, test = _pair(SimulationSpec(t_samples=80, d_features=6, k_shared=4, n_reps=3))
    met = evaluate_recovery(train, fit(train.tensor, n_components=2), test)
    assert met.truncated
    assert met.per_component_corr.shape == (4,)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(1, 3))
def test_subspace_angle_range(seed, d, k):
    rng = np.random.default_rng(seed)
    k = min(k, d)
    a, b = rng.standard_normal((d, k)), rng.standard_normal((d, k))
    ang = subspace_angle(a, b)
    assert 0.0 <= ang <= 1.0
    assert subspace_angle(a, a @ rng.standard_normal((k, k))) < 1e-6


def test_sweep_grid():
    grid = sweep(SimulationSpec(), snr_db=[0, 10], d_features=[5], k_shared=[2, 3])
    assert len(grid) == 4
    assert {(g.snr_db, g.k_shared) for g in grid} == {(0, 2), (0, 3), (10, 2), (10, 3)}


def test_study_rows_and_determinism(tmp_path):
    grid = sweep(SimulationSpec(t_samples=60, d_features=5, k_shared=2, n_reps=3), snr_db=[-10, 10])
    res = run_study(grid, repetitions=3, methods=("parametric_f", "circular_shift"), n_surrogates=20, n_splits=3, seed=2)
    assert len(res["rows"]) == 6
    assert len(res["summary"]) == 2
    assert "k_circular_shift_median" in res["summary"][0]
    a = write_study(res, tmp_path / "a")
    b = write_study(run_study(grid, repetitions=3, methods=("parametric_f", "circular_shift"), n_surrogates=20, n_splits=3, seed=2), tmp_path / "b")
    assert a[0].read_bytes() == b[0].read_bytes()
    assert a[1].read_bytes() == b[1].read_bytes()


def test_study_rejects_bad_input():
    with pytest.raises(ValueError):
        run_study([], repetitions=1)
    with pytest.raises(ValueError):
        run_study([SimulationSpec(t_samples=20, d_features=3, k_shared=1)], repetitions=1, methods=("bootstrap",))
