"""
Per-step conditions from frames and events
==========================================

Each intermediate step gets a condition that mixes the two key frames with
event-derived features. Here the features are residuals of event-based
interpolation, so a condition is a coarse estimate of the missing frame.
"""

# %%
from eventvfi import (
    IdentityFeatures,
    SimConfig,
    build_instances,
    coarse_condition_provider,
    crossfade,
    mmcg_objective,
    simulate_events,
    weight_schedule,
)
from eventvfi.scenes import translating_square

scene = translating_square()
instances = build_instances(scene, simulate_events(scene, SimConfig(contrast=0.15)), skip=3)
inst = instances[0]

# %%
# The schedule for T = 4 steps. The key frames get no event term.
sched = weight_schedule(inst.steps)
for k in range(inst.steps + 1):
    print(k, sched[k])

# %%
# Compare the objective of event-aware conditions against plain cross-fades.
ident = IdentityFeatures()
targets = [ident(f) for f in (inst.frame_a, *inst.intermediates, inst.frame_b)]
coarse = coarse_condition_provider(inst, contrast=0.15)
fade = [targets[0]] + [ident(f) for f in crossfade(inst)] + [targets[-1]]
print(f"objective with events:    {mmcg_objective(coarse, targets):10.4f}")
print(f"objective with crossfade: {mmcg_objective(fade, targets):10.4f}")
