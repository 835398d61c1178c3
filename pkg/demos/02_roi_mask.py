"""
Region-of-interest mask from a voxel grid
=========================================

The mask marks pixels where motion happened. It normalizes the grid,
smooths each bin, thresholds, then dilates and median-filters the result.
"""

# %%
import numpy as np

from eventvfi import RoiMaskConfig, SimConfig, roi_mask, simulate_events, voxelize
from eventvfi.scenes import translating_square

scene = translating_square()
events = simulate_events(scene, SimConfig())
grid = voxelize(events, int(scene.timestamps[0]), int(scene.timestamps[4]), 8)

# %%
# Default settings: sigma 1, threshold 0.01, dilation radius 2, median radius 1.
mask = roi_mask(grid)
print(f"mask covers {mask.mean():.1%} of the frame")


def show(m, step=4):
    for row in m[::step, ::step]:
        print("".join("#" if v else "." for v in row))


show(mask)

# %%
# A stricter threshold and no dilation shrink the region to the moving edges.
tight = roi_mask(grid, RoiMaskConfig(threshold=0.2, dilate_radius=0))
print(f"tight mask covers {tight.mean():.1%}")
show(tight)
assert np.all(mask[tight])
