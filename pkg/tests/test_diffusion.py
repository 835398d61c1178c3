import math

import numpy as np
import pytest

from eventvfi import (
    NoiseDistParams,
    SamplerConfig,
    add_noise,
    denoise_loss,
    gaussian_oracle_denoiser,
    precondition,
    reconstruct,
    sample,
    sample_batch,
    sample_sigma,
    sigma_schedule,
)
from eventvfi.diffusion import gaussian_posterior_mean
from eventvfi.errors import ConfigError, DomainError, ShapeError


class FixedNormal:
    """Stand-in generator whose normal draws are a constant."""

    def __init__(self, value):
        self.value = value

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.value if size is None else np.full(size, self.value)

    def standard_normal(self, size=None):
        return self.normal(size=size)


def test_sigma_with_zero_eps():
    assert sample_sigma(NoiseDistParams(), FixedNormal(0.0)) == 1.0


def test_sigma_at_distribution_mean():
    assert sample_sigma(NoiseDistParams(), FixedNormal(0.7)) == pytest.approx(math.exp(0.7), rel=1e-15)


def test_sigma_seeded():
    a = sample_sigma(rng=np.random.default_rng(3), size=10)
    b = sample_sigma(rng=np.random.default_rng(3), size=10)
    np.testing.assert_array_equal(a, b)


def test_noise_params_validation():
    with pytest.raises(ConfigError):
        NoiseDistParams(std=0)


def test_precondition_at_one():
    k = precondition(1.0)
    assert k.c_in == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert k.c_skip == 0.5
    assert k.c_out == pytest.approx(-1 / math.sqrt(2), rel=1e-15)
    assert k.loss_weight == 2.0


def test_precondition_small_sigma_limit():
    k = precondition(1e-9)
    assert k.c_skip == pytest.approx(1.0) and k.c_in == pytest.approx(1.0)
    assert abs(k.c_out) < 1e-8


@pytest.mark.parametrize("sigma", [0.1, 1.0, 10.0])
def test_loss_weight_identity(sigma):
    k = precondition(sigma)
    assert abs(k.loss_weight * k.c_out**2 - 1.0) <= 1e-12


@pytest.mark.parametrize("sigma", [0.0, -1.0, math.inf, math.nan])
def test_precondition_domain(sigma):
    with pytest.raises(DomainError):
        precondition(sigma)


def test_add_noise_zero_draw(rng):
    z = rng.normal(size=(3, 4))
    np.testing.assert_array_equal(add_noise(z, 2.5, FixedNormal(0.0)), z)


def test_add_noise_variance():
    z = np.zeros(10**6)
    sigma = 1.7
    out = add_noise(z, sigma, np.random.default_rng(11))
    assert abs(out.var() / sigma**2 - 1) < 0.02


def test_add_noise_seeded(rng):
    z = rng.normal(size=100)
    a = add_noise(z, 0.5, np.random.default_rng(5))
    b = add_noise(z, 0.5, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)


def test_reconstruct_zero_prediction(rng):
    z = rng.normal(size=(2, 5))
    np.testing.assert_array_equal(reconstruct(np.zeros_like(z), z, 1.0), z / 2)


def test_reconstruct_small_sigma_returns_input(rng):
    z = rng.normal(size=8)
    np.testing.assert_allclose(reconstruct(rng.normal(size=8), z, 1e-10), z, atol=1e-9)


def test_reconstruct_shape_check():
    with pytest.raises(ShapeError):
        reconstruct(np.zeros(3), np.zeros(4), 1.0)


@pytest.mark.parametrize("sigma", [0.05, 0.3, 1.0, 4.0, 40.0])
@pytest.mark.parametrize("mu,s", [(0.0, 1.0), (3.0, 0.5), (-1.2, 2.0)])
def test_oracle_reconstructs_posterior_mean(rng, sigma, mu, s):
    z_noisy = mu + math.sqrt(s * s + sigma * sigma) * rng.normal(size=200)
    den = gaussian_oracle_denoiser(mu, s)
    z_pred = den(z_noisy * precondition(sigma).c_in, None, sigma)
    expected = mu + s * s / (s * s + sigma * sigma) * (z_noisy - mu)
    np.testing.assert_allclose(reconstruct(z_pred, z_noisy, sigma), expected, rtol=1e-9, atol=1e-9)


def test_posterior_mean_limits():
    z = np.array([2.0, -1.0])
    np.testing.assert_allclose(gaussian_posterior_mean(z, 1e-8, 0.5, 1.0), z, atol=1e-12)
    np.testing.assert_allclose(gaussian_posterior_mean(z, 1e8, 0.5, 1.0), 0.5, atol=1e-12)
    np.testing.assert_array_equal(gaussian_posterior_mean(z, 1.0, 0.0, 1.0), z / 2)


def test_cheating_denoiser_has_zero_loss(rng):
    z = rng.normal(size=(4, 8, 8))
    sigma = 0.8

    def cheat(x_norm, condition, s):
        k = precondition(s)
        z_noisy = x_norm / k.c_in
        return (z - k.c_skip * z_noisy) / k.c_out

    assert denoise_loss(z, cheat, None, sigma, np.random.default_rng(0)) < 1e-25


def test_zero_predictor_loss_by_hand():
    sigma = 1.3
    z = np.zeros(1000)
    loss = denoise_loss(z, lambda x, c, s: np.zeros_like(x), None, sigma, np.random.default_rng(9))
    z_noisy = add_noise(z, sigma, np.random.default_rng(9))
    k = precondition(sigma)
    assert loss == pytest.approx(k.loss_weight * k.c_skip**2 * np.mean(z_noisy**2), rel=1e-9)


def test_loss_ignores_condition_when_denoiser_does(rng):
    z = rng.normal(size=50)
    den = gaussian_oracle_denoiser(0.0, 1.0)
    a = denoise_loss(z, den, "cond-a", 0.7, np.random.default_rng(2))
    b = denoise_loss(z, den, None, 0.7, np.random.default_rng(2))
    assert a == b


@pytest.mark.parametrize("sigma", [0.3, 1.0, 3.0])
def test_oracle_minimises_expected_loss(sigma):
    mu, s = 1.5, 0.7
    z = mu + s * np.random.default_rng(1).standard_normal(10**5)

    def data_mean(x_norm, condition, sg):
        k = precondition(sg)
        return (mu - k.c_skip * x_norm / k.c_in) / k.c_out

    losses = {
        name: denoise_loss(z, den, None, sigma, np.random.default_rng(4))
        for name, den in [
            ("oracle", gaussian_oracle_denoiser(mu, s)),
            ("zero", lambda x, c, sg: np.zeros_like(x)),
            ("mean", data_mean),
        ]
    }
    assert losses["oracle"] < losses["zero"] and losses["oracle"] < losses["mean"]


def test_schedule_shape():
    cfg = SamplerConfig(steps=5, sigma_min=0.1, sigma_max=10.0, rho=7)
    sig = sigma_schedule(cfg)
    assert sig.shape == (6,)
    assert sig[0] == pytest.approx(10.0) and sig[4] == pytest.approx(0.1) and sig[5] == 0.0
    assert np.all(np.diff(sig) < 0)


def test_single_step_is_posterior_mean_at_sigma_max():
    mu, s = 3.0, 0.5
    cfg = SamplerConfig(steps=1, seed=21)
    den = gaussian_oracle_denoiser(mu, s)
    out = sample(den, None, None, (100,), cfg)
    x0 = cfg.sigma_max * np.random.default_rng(21).standard_normal(100)
    np.testing.assert_allclose(out, gaussian_posterior_mean(x0, cfg.sigma_max, mu, s), rtol=1e-12, atol=1e-12)


def test_single_step_guidance_closed_form():
    cfg = SamplerConfig(steps=1, seed=3, cfg_scale=2.5)
    cond, uncond = gaussian_oracle_denoiser(3.0, 0.5), gaussian_oracle_denoiser(0.0, 1.0)
    out = sample(cond, uncond, "c", (50,), cfg)
    x0 = cfg.sigma_max * np.random.default_rng(3).standard_normal(50)
    pc = gaussian_posterior_mean(x0, cfg.sigma_max, 3.0, 0.5)
    pu = gaussian_posterior_mean(x0, cfg.sigma_max, 0.0, 1.0)
    np.testing.assert_allclose(out, pu + 2.5 * (pc - pu), rtol=1e-12, atol=1e-12)


def test_guidance_scale_one_bypasses_uncond():
    def poisoned(*args):
        raise AssertionError("unconditional branch must not run")

    den = gaussian_oracle_denoiser(3.0, 0.5)
    cfg = SamplerConfig(steps=20, seed=8)
    a = sample(den, den, None, (64,), cfg)
    b = sample(den, poisoned, None, (64,), cfg)
    assert np.array_equal(a, b)


def test_guidance_needs_uncond():
    with pytest.raises(ConfigError):
        sample(gaussian_oracle_denoiser(0, 1), None, None, (2,), SamplerConfig(cfg_scale=2.0))


def test_sampler_deterministic():
    den = gaussian_oracle_denoiser(0.0, 1.0)
    cfg = SamplerConfig(steps=30, seed=99)
    assert np.array_equal(sample(den, None, None, (3, 4), cfg), sample(den, None, None, (3, 4), cfg))


def test_batch_samples_independent_of_batch_size():
    den = gaussian_oracle_denoiser(1.0, 2.0)
    cfg = SamplerConfig(steps=10, seed=4)
    small = sample_batch(den, None, None, (2,), 3, cfg)
    large = sample_batch(den, None, None, (2,), 7, cfg)
    np.testing.assert_array_equal(small, large[:3])


def test_sampler_config_validation():
    for kwargs in ({"steps": 0}, {"sigma_min": 0.0}, {"sigma_min": 5.0, "sigma_max": 1.0}, {"rho": 0}):
        with pytest.raises(ConfigError):
            SamplerConfig(**kwargs)


def _w1_to_gaussian(x, mu, s):
    """Wasserstein-1 distance between the empirical law of ``x`` and N(mu, s^2), via quantiles."""
    from statistics import NormalDist

    n = x.size
    q = np.array([NormalDist(mu, s).inv_cdf((i + 0.5) / n) for i in range(n)])
    return float(np.mean(np.abs(np.sort(x) - q)))


@pytest.mark.slow
def test_more_steps_move_closer_to_data():
    mu, s = 3.0, 0.5
    den = gaussian_oracle_denoiser(mu, s)
    w = {}
    for steps in (10, 50):
        x = sample_batch(den, None, None, (), 10**4, SamplerConfig(steps=steps, seed=1)).ravel()
        w[steps] = _w1_to_gaussian(x, mu, s)
    floor = _w1_to_gaussian(mu + s * np.random.default_rng(0).standard_normal(10**4), mu, s)
    assert w[50] <= w[10] + 2 * floor
