"""EDM-style diffusion arithmetic and a deterministic guided sampler.

Conventions
-----------
A :class:`Denoiser` is any callable ``denoiser(x_norm, condition, sigma)``
that receives the *normalised* noisy latent ``c_in * z_noisy`` and returns a
raw prediction ``z_pred`` of the same shape. :func:`reconstruct` turns that
prediction into the denoised estimate ``c_out * z_pred + c_skip * z_noisy``.

Random numbers come from numpy's ``Generator`` with the PCG64 bit generator
(``np.random.default_rng``); normal variates use numpy's ziggurat method.
Batch sampling gives sample ``i`` the substream ``default_rng([seed, i])``,
so every sample is reproducible on its own, whatever the batch layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import numpy as np

from .errors import ConfigError, DomainError, ShapeError

__all__ = [
    "NoiseDistParams",
    "PreconditionCoeffs",
    "SamplerConfig",
    "Denoiser",
    "sample_sigma",
    "precondition",
    "add_noise",
    "reconstruct",
    "denoise_loss",
    "gaussian_oracle_denoiser",
    "gaussian_posterior_mean",
    "sigma_schedule",
    "sample",
    "sample_batch",
]


@dataclass(frozen=True)
class NoiseDistParams:
    """Normal distribution of ``log(sigma)`` during training. ``std`` is a standard deviation."""

    mean: float = 0.7
    std: float = 1.6

    def __post_init__(self):
        if not self.std > 0:
            raise ConfigError(f"std must be > 0, got {self.std}")


@dataclass(frozen=True)
class PreconditionCoeffs:
    sigma: float
    c_in: float
    c_skip: float
    c_out: float
    loss_weight: float


class Denoiser(Protocol):
    def __call__(self, x_norm: np.ndarray, condition: Any, sigma: float) -> np.ndarray: ...


def _check_sigma(sigma):
    sigma = float(sigma)
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive and finite, got {sigma}")
    return sigma


def sample_sigma(params: NoiseDistParams = NoiseDistParams(), rng=None, size=None):
    """Draw ``sigma = exp(eps)`` with ``eps ~ Normal(mean, std**2)``.

    ``rng`` is anything with a numpy-style ``normal(loc, scale, size)``.
    Returns a float when ``size`` is None, else an array.
    """
    rng = np.random.default_rng() if rng is None else rng
    eps = rng.normal(params.mean, params.std, size)
    return float(np.exp(eps)) if size is None else np.exp(eps)


def precondition(sigma: float) -> PreconditionCoeffs:
    sigma = _check_sigma(sigma)
    s2 = sigma * sigma
    root = math.sqrt(s2 + 1.0)
    return PreconditionCoeffs(
        sigma=sigma,
        c_in=1.0 / root,
        c_skip=1.0 / (s2 + 1.0),
        c_out=-sigma / root,
        loss_weight=(1.0 + s2) / s2,
    )


def add_noise(z, sigma: float, rng) -> np.ndarray:
    """``z + sigma * n`` with ``n`` standard normal per element."""
    z = np.asarray(z, dtype=np.float64)
    return z + sigma * rng.standard_normal(z.shape)


def reconstruct(z_pred, z_noisy, sigma: float) -> np.ndarray:
    """Denoised estimate ``c_out * z_pred + c_skip * z_noisy``."""
    z_pred = np.asarray(z_pred, dtype=np.float64)
    z_noisy = np.asarray(z_noisy, dtype=np.float64)
    if z_pred.shape != z_noisy.shape:
        raise ShapeError(f"prediction shape {z_pred.shape} != noisy shape {z_noisy.shape}")
    k = precondition(sigma)
    return z_pred * k.c_out + z_noisy * k.c_skip


def _denoised(denoiser, z_noisy, condition, sigma):
    k = precondition(sigma)
    z_pred = np.asarray(denoiser(z_noisy * k.c_in, condition, k.sigma), dtype=np.float64)
    if z_pred.shape != z_noisy.shape:
        raise ShapeError(f"denoiser changed shape {z_noisy.shape} -> {z_pred.shape}")
    return z_pred * k.c_out + z_noisy * k.c_skip


def denoise_loss(z, denoiser: Denoiser, condition, sigma: float, rng) -> float:
    """Noise-level-weighted loss for one draw of noise.

    ``loss_weight(sigma) * mean((denoised - z) ** 2)``; the mean runs over all
    elements so the value does not scale with latent size.
    """
    z = np.asarray(z, dtype=np.float64)
    z_noisy = add_noise(z, sigma, rng)
    d = _denoised(denoiser, z_noisy, condition, sigma) - z
    return precondition(sigma).loss_weight * float(np.mean(d * d))


def gaussian_posterior_mean(z_noisy, sigma, data_mean, data_std):
    """``E[z | z_noisy]`` for ``z ~ N(mean, std**2)`` and Gaussian noise of scale ``sigma``."""
    s2 = data_std * data_std
    return data_mean + (s2 / (s2 + sigma * sigma)) * (np.asarray(z_noisy, dtype=np.float64) - data_mean)


def gaussian_oracle_denoiser(data_mean: float, data_std: float) -> Callable:
    """The exact MMSE denoiser for elementwise ``N(data_mean, data_std**2)`` data.

    It returns the raw prediction that :func:`reconstruct` maps onto the
    posterior mean. The condition is ignored.
    """
    if not data_std > 0:
        raise ConfigError(f"data_std must be > 0, got {data_std}")

    def denoiser(x_norm, condition, sigma):
        k = precondition(sigma)
        z_noisy = np.asarray(x_norm, dtype=np.float64) / k.c_in
        post = gaussian_posterior_mean(z_noisy, k.sigma, data_mean, data_std)
        return (post - k.c_skip * z_noisy) / k.c_out

    denoiser.data_mean = data_mean
    denoiser.data_std = data_std
    return denoiser


def _default_sigma_max():
    p = NoiseDistParams()
    return math.exp(p.mean + 2 * p.std)


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler settings.

    ``sigma_max`` defaults to the training distribution's ``exp(mean + 2 std)``.
    """

    steps: int = 50
    sigma_min: float = 0.02
    sigma_max: float = field(default_factory=_default_sigma_max)
    rho: float = 7.0
    cfg_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if not (0 < self.sigma_min < self.sigma_max and math.isfinite(self.sigma_max)):
            raise ConfigError(f"need 0 < sigma_min < sigma_max, got {self.sigma_min}, {self.sigma_max}")
        if not self.rho > 0:
            raise ConfigError(f"rho must be > 0, got {self.rho}")
        if not math.isfinite(self.cfg_scale):
            raise ConfigError(f"cfg_scale must be finite, got {self.cfg_scale}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


def sigma_schedule(cfg: SamplerConfig) -> np.ndarray:
    """``steps`` rho-spaced noise levels from ``sigma_max`` down to ``sigma_min``, then 0."""
    n = cfg.steps
    if n == 1:
        sig = np.array([cfg.sigma_max])
    else:
        a = cfg.sigma_max ** (1.0 / cfg.rho)
        b = cfg.sigma_min ** (1.0 / cfg.rho)
        sig = (a + np.arange(n) / (n - 1) * (b - a)) ** cfg.rho
    return np.append(sig, 0.0)


def _run(x, denoiser_cond, denoiser_uncond, condition, cfg):
    sigmas = sigma_schedule(cfg)
    guided = cfg.cfg_scale != 1.0
    for s_cur, s_next in zip(sigmas[:-1], sigmas[1:]):
        x_hat = _denoised(denoiser_cond, x, condition, s_cur)
        if guided:
            x_unc = _denoised(denoiser_uncond, x, None, s_cur)
            x_hat = x_unc + cfg.cfg_scale * (x_hat - x_unc)
        x = x_hat + (s_next / s_cur) * (x - x_hat)
    return x


def sample(denoiser_cond: Denoiser, denoiser_uncond: Denoiser | None, condition, shape, cfg: SamplerConfig = SamplerConfig()):
    """Draw one sample of ``shape`` with the deterministic first-order sampler.

    Starts from ``sigma_max * n`` (``n`` from ``default_rng(cfg.seed)``) and
    applies ``x <- x_hat + (sigma_next / sigma_cur) * (x - x_hat)`` along
    :func:`sigma_schedule`, where ``x_hat`` is the guided reconstruction
    ``uncond + cfg_scale * (cond - uncond)``. The unconditional denoiser is
    called with ``condition=None``, and never at all when ``cfg_scale == 1``.
    """
    if cfg.cfg_scale != 1.0 and denoiser_uncond is None:
        raise ConfigError("cfg_scale != 1 needs an unconditional denoiser")
    rng = np.random.default_rng(cfg.seed)
    x = cfg.sigma_max * rng.standard_normal(tuple(shape))
    return _run(x, denoiser_cond, denoiser_uncond, condition, cfg)


def sample_batch(denoiser_cond, denoiser_uncond, condition, shape, count: int, cfg: SamplerConfig = SamplerConfig()):
    """``count`` samples stacked on a new leading axis.

    Sample ``i`` starts from the substream ``default_rng([cfg.seed, i])``. The
    denoisers are called once per step on the whole ``(count, *shape)`` batch,
    so they must act independently along the leading axis.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if cfg.cfg_scale != 1.0 and denoiser_uncond is None:
        raise ConfigError("cfg_scale != 1 needs an unconditional denoiser")
    shape = tuple(shape)
    x = np.stack([np.random.default_rng([cfg.seed, i]).standard_normal(shape) for i in range(count)])
    return _run(cfg.sigma_max * x, denoiser_cond, denoiser_uncond, condition, cfg)
