"""
Simulating events and binning them into a voxel grid
====================================================

A bright square slides across a dark background. The simulator turns the
frame sequence into a stream of polarity events, and the voxel grid spreads
those events over a few temporal bins.
"""

# %%
# Build the scene and simulate events at contrast 0.15.
import numpy as np

from eventvfi import SimConfig, simulate_events, slice_window, voxelize
from eventvfi.scenes import translating_square

scene = translating_square(size=64, n_frames=13, step=4)
events = simulate_events(scene, SimConfig(contrast=0.15))
print(events)
print("positive:", int(np.sum(events.p > 0)), "negative:", int(np.sum(events.p < 0)))

# %%
# Each pixel fires only while an edge passes over it. The leading edge
# brightens (+1) and the trailing edge darkens (-1).
first = slice_window(events, scene.timestamps[0], scene.timestamps[1])
print("events in the first interval:", len(first))
print("columns touched:", sorted(set(first.x.tolist()))[:8], "...")

# %%
# An 8-bin grid over the first four intervals. Bilinear weights in time keep
# the total polarity unchanged.
t0, t1 = int(scene.timestamps[0]), int(scene.timestamps[4])
grid = voxelize(events, t0, t1, bins=8)
window = slice_window(events, t0, t1)
print("grid shape:", grid.shape)
print("sum of grid:", grid.sum(), " sum of polarities:", window.polarity_sum())
for b in range(grid.shape[0]):
    print(f"bin {b}: {np.count_nonzero(grid[b]):4d} active pixels, net {grid[b].sum():+8.2f}")
