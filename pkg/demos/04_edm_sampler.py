"""
Guided sampling with an exact denoiser
======================================

For Gaussian data the optimal denoiser is known in closed form, so the
sampler can be checked without a network. Conditional data is N(3, 0.5^2),
the unconditional prior is N(0, 1).
"""

# %%
import numpy as np

from eventvfi import SamplerConfig, gaussian_oracle_denoiser, precondition, sample_batch, sigma_schedule

for sigma in (0.1, 1.0, 10.0):
    k = precondition(sigma)
    print(f"sigma={sigma:5}: c_in={k.c_in:.4f} c_skip={k.c_skip:.4f} c_out={k.c_out:+.4f} weight={k.loss_weight:.3f}")

# %%
# The noise levels fall steeply near zero with rho = 7.
print(np.round(sigma_schedule(SamplerConfig(steps=10)), 3))

# %%
# More steps bring the sample spread closer to the true 0.5.
cond = gaussian_oracle_denoiser(3.0, 0.5)
uncond = gaussian_oracle_denoiser(0.0, 1.0)
for steps in (5, 10, 50):
    x = sample_batch(cond, uncond, None, (), 5000, SamplerConfig(steps=steps, seed=1))
    print(f"{steps:3d} steps: mean={x.mean():.3f} std={x.std():.3f}")

# %%
# Guidance above 1 pushes samples away from the unconditional prior.
for scale in (1.0, 1.5, 2.0):
    x = sample_batch(cond, uncond, None, (), 5000, SamplerConfig(steps=50, cfg_scale=scale, seed=1))
    print(f"scale {scale}: mean={x.mean():.3f}")
