import numpy as np
import pytest

from eventvfi import (
    DownsampleFeatures,
    FusionWeights,
    IdentityFeatures,
    MaskedVoxelFeatures,
    SimConfig,
    assemble_conditions,
    build_instances,
    coarse_condition_provider,
    crossfade,
    fuse_mmf,
    mmcg_objective,
    simulate_events,
    weight_schedule,
)
from eventvfi.errors import ConfigError, ShapeError
from oracles import fuse_loop, sq_error_loop


@pytest.mark.parametrize("orientation", ["paper", "corrected"])
def test_midpoint_weights(orientation):
    assert weight_schedule(4, orientation)[2][:2] == (0.5, 0.5)


def test_literal_orientation_weights():
    s = weight_schedule(4, "paper")
    np.testing.assert_array_equal(s.w_prev, [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_array_equal(s.w_next, [1, 0.75, 0.5, 0.25, 0])


def test_event_weight_only_on_intermediates():
    s = weight_schedule(5)
    np.testing.assert_array_equal(s.w_evs, [0, 1, 1, 1, 1, 0])


def test_corrected_boundaries():
    s = weight_schedule(6, "corrected")
    assert s[0][:2] == (1.0, 0.0)
    assert s[6][:2] == (0.0, 1.0)


@pytest.mark.parametrize("orientation", ["paper", "corrected"])
def test_weights_sum_exactly_one(orientation):
    for T in range(1, 65):
        s = weight_schedule(T, orientation)
        assert np.all(s.w_prev + s.w_next == 1.0)


def test_schedule_validation():
    with pytest.raises(ConfigError):
        weight_schedule(0)
    with pytest.raises(ConfigError):
        weight_schedule(3, "sideways")


def test_fuse_selector_and_residual(rng):
    h_t, h_t1, h_e, f = (rng.normal(size=(3, 4, 5)) for _ in range(4))
    np.testing.assert_array_equal(fuse_mmf(h_t, h_t1, h_e, FusionWeights(1, 0, 0), np.zeros_like(h_t)), h_t)
    np.testing.assert_array_equal(fuse_mmf(h_t, h_t1, h_e, FusionWeights(0, 0, 0), f), f)


@pytest.mark.parametrize("per_element", [False, True])
def test_fuse_matches_loop(rng, per_element):
    h_t, h_t1, h_e, f = (rng.normal(size=(2, 3, 4)) for _ in range(4))
    if per_element:
        w = [rng.normal(size=(2, 3, 4)) for _ in range(3)]
    else:
        w = list(rng.normal(size=3))
    out = fuse_mmf(h_t, h_t1, h_e, FusionWeights(*w), f)
    np.testing.assert_allclose(out, fuse_loop(h_t, h_t1, h_e, *w, f), rtol=0, atol=1e-12)


def test_fuse_shape_mismatch(rng):
    a = rng.normal(size=(2, 3))
    with pytest.raises(ShapeError):
        fuse_mmf(a, a, rng.normal(size=(3, 2)), FusionWeights(1, 1, 1), a)
    with pytest.raises(ShapeError):
        fuse_mmf(a, a, a, FusionWeights(np.ones(4), 1, 1), a)


def test_corrected_conditions_keep_key_frames(rng):
    h_t, h_t1 = rng.normal(size=(2, 4, 6, 6))
    f_evs = [rng.normal(size=(4, 6, 6)) for _ in range(5)]
    c = assemble_conditions(h_t, h_t1, f_evs, weight_schedule(4))
    assert np.array_equal(c[0], h_t) and np.array_equal(c[-1], h_t1)


def test_midpoint_condition_is_average(rng):
    h_t, h_t1 = rng.normal(size=(2, 3, 5, 5))
    zero = np.zeros_like(h_t)
    c = assemble_conditions(h_t, h_t1, [rng.normal(size=h_t.shape), zero, rng.normal(size=h_t.shape)], weight_schedule(2))
    np.testing.assert_allclose(c[1], (h_t + h_t1) / 2, rtol=0, atol=1e-15)


def test_zero_event_features_give_crossfade(rng):
    h_t, h_t1 = rng.normal(size=(2, 1, 4, 4))
    T = 5
    c = assemble_conditions(h_t, h_t1, [np.zeros_like(h_t)] * (T + 1), weight_schedule(T))
    for k in range(T + 1):
        np.testing.assert_allclose(c[k], (T - k) / T * h_t + k / T * h_t1, rtol=0, atol=1e-15)


def test_conditions_are_linear(rng):
    T = 4
    sched = weight_schedule(T, "paper")
    shape = (2, 3, 3)

    def draw():
        return rng.normal(size=shape), rng.normal(size=shape), [rng.normal(size=shape) for _ in range(T + 1)]

    (a1, b1, f1), (a2, b2, f2) = draw(), draw()
    alpha, beta = 1.7, -0.4
    mixed = assemble_conditions(alpha * a1 + beta * a2, alpha * b1 + beta * b2, [alpha * x + beta * y for x, y in zip(f1, f2)], sched)
    c1, c2 = assemble_conditions(a1, b1, f1, sched), assemble_conditions(a2, b2, f2, sched)
    for m, x, y in zip(mixed, c1, c2):
        np.testing.assert_allclose(m, alpha * x + beta * y, rtol=0, atol=1e-9)


def test_assemble_length_mismatch(rng):
    h = rng.normal(size=(1, 2, 2))
    with pytest.raises(ShapeError):
        assemble_conditions(h, h, [h] * 3, weight_schedule(3))


def test_objective_zero_and_offset(rng):
    targets = [rng.normal(size=(3, 4, 4)) for _ in range(5)]
    assert mmcg_objective(targets, targets) == 0.0
    delta = 0.3
    pred = [t + delta for t in targets]
    assert mmcg_objective(pred, targets) == pytest.approx(delta**2 * 48, rel=1e-12)
    assert mmcg_objective(pred, targets) == pytest.approx(sq_error_loop(pred, targets), rel=1e-12)


def test_objective_two_key_frames():
    targets = [np.zeros((1, 2, 2)), np.zeros((1, 2, 2))]
    pred = [np.ones((1, 2, 2)), np.zeros((1, 2, 2))]
    assert mmcg_objective(pred, targets) == 2.0


def test_objective_nonnegative_and_zero_only_when_equal(rng):
    t = [rng.normal(size=(2, 2)) for _ in range(3)]
    p = [x.copy() for x in t]
    p[1][0, 0] += 1e-6
    assert mmcg_objective(p, t) > 0


def test_objective_length_mismatch(rng):
    with pytest.raises(ShapeError):
        mmcg_objective([np.zeros(2)] * 3, [np.zeros(2)] * 4)


def test_providers(rng):
    frame_px = rng.random((16, 24, 3))
    from eventvfi import Frame

    f = Frame(frame_px)
    ident = IdentityFeatures()(f)
    assert ident.shape == (3, 16, 24)
    np.testing.assert_array_equal(ident[1], frame_px[:, :, 1])
    down = DownsampleFeatures(8)(f)
    assert down.shape == (3, 2, 3)
    assert down[0, 1, 2] == pytest.approx(frame_px[8:16, 16:24, 0].mean())
    grid = rng.normal(size=(8, 4, 4))
    mask = rng.random((4, 4)) > 0.5
    out = MaskedVoxelFeatures()(grid, mask)
    assert not out[:, ~mask].any()
    np.testing.assert_array_equal(out[:, mask], grid[:, mask])


def _instances(scene, c=0.15):
    return build_instances(scene, simulate_events(scene, SimConfig(contrast=c)), 3)


def test_coarse_conditions_keep_key_frames(square_scene):
    inst = _instances(square_scene)[0]
    conds = coarse_condition_provider(inst, 0.15)
    assert len(conds) == 5
    assert np.array_equal(conds[0], IdentityFeatures()(inst.frame_a))
    assert np.array_equal(conds[-1], IdentityFeatures()(inst.frame_b))


def test_coarse_conditions_without_events_are_crossfades(square_scene):
    from eventvfi import EventStream
    from eventvfi.sim import InterpInstance

    inst = _instances(square_scene)[0]
    quiet = InterpInstance(inst.frame_a, inst.frame_b, inst.intermediates, EventStream(64, 64), 3, inst.timestamps)
    conds = coarse_condition_provider(quiet, 0.15)
    for c, f in zip(conds[1:-1], crossfade(quiet)):
        np.testing.assert_allclose(c, IdentityFeatures()(f), rtol=0, atol=1e-12)


def test_coarse_conditions_beat_crossfade(square_scene):
    ident = IdentityFeatures()
    for inst in _instances(square_scene):
        targets = [ident(f) for f in (inst.frame_a, *inst.intermediates, inst.frame_b)]
        coarse = coarse_condition_provider(inst, 0.15)
        fade = [ident(inst.frame_a)] + [ident(f) for f in crossfade(inst)] + [ident(inst.frame_b)]
        assert mmcg_objective(coarse, targets) < mmcg_objective(fade, targets)
