import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softpercept.cvae import ModalityConfig, PerceptionModel, predict
from softpercept.genprobe import (
    ProbeConfigError,
    ProbeReport,
    action_perturbation,
    action_sweep,
    advect,
    default_grid,
    feedback_rollout,
    flow_strip_png,
    flow_to_rgb,
    resample_stability,
    rollout_drift,
    synthetic_latent,
)


@pytest.fixture(scope="module")
def pair(small_dataset):
    src, dst = small_dataset.pairs()
    return small_dataset.frames[src[10]], small_dataset.frames[dst[10]]


# -- advection ----------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_zero_flow_leaves_image(seed):
    img = np.random.default_rng(seed).random((16, 12, 3)).astype(np.float32)
    np.testing.assert_array_equal(advect(img, np.zeros((16, 12, 2))), img)


def test_integer_shift_moves_content():
    img = np.zeros((8, 8, 1), np.float32)
    img[3, 2] = 1.0
    flow = np.zeros((8, 8, 2))
    flow[..., 0] = 2.0  # two columns right
    flow[..., 1] = 1.0  # one row down
    out = advect(img, flow)
    assert out[4, 4, 0] == 1.0 and out.sum() == 1.0


def test_half_pixel_shift_interpolates():
    img = np.zeros((4, 4, 1), np.float32)
    img[:, 1] = 1.0
    flow = np.zeros((4, 4, 2))
    flow[..., 0] = 0.5
    out = advect(img, flow)
    np.testing.assert_allclose(out[:, 1, 0], 0.5)
    np.testing.assert_allclose(out[:, 2, 0], 0.5)


# -- reports ------------------------------------------------------------------


def test_report_summary_and_json():
    r = ProbeReport("resample", {"k": 3}, {"force": [1.0, 2.0, 3.0]})
    assert r.summary["force"]["mean"] == 2.0
    assert r.summary["force"]["std"] == pytest.approx(np.std([1, 2, 3]))
    assert json.loads(r.to_json())["config"] == {"k": 3}
    with pytest.raises(ValueError):
        ProbeReport("nonsense", {}, {})


# -- resampling ---------------------------------------------------------------


def test_clamped_variance_gives_zero_spread(tiny_model, pair):
    rep = resample_stability(tiny_model, *pair, k=20, logvar_override=-np.inf)
    for m, s in rep.summary.items():
        assert s["std"] == 0.0, m
    assert all(len(v) == 20 for v in rep.trials.values())


def test_single_draw_has_no_spread(tiny_model, pair):
    rep = resample_stability(tiny_model, *pair, k=1)
    assert all(s["std"] is None for s in rep.summary.values())
    assert rep.config["k"] == 1


def test_resampling_is_seeded(tiny_model, pair):
    a = resample_stability(tiny_model, *pair, k=10, seed=3)
    b = resample_stability(tiny_model, *pair, k=10, seed=3)
    assert a.to_json() == b.to_json()


# -- action perturbation ------------------------------------------------------


def test_zero_width_bounds_make_random_equal_null(tiny_model, small_dataset):
    out = action_perturbation(tiny_model, small_dataset, bounds=[0.0, 0.0, 0.0], max_frames=20)
    assert out["action-null"].trials == out["action-random"].trials
    assert out["action-null"].extra == out["action-random"].extra


def test_perturbation_report_echoes_config(tiny_model, small_dataset):
    out = action_perturbation(tiny_model, small_dataset, max_frames=15, seed=4)
    for kind, rep in out.items():
        assert rep.kind == kind
        assert rep.config["frames"] == 15 and rep.config["seed"] == 4
        assert all(len(v) == 15 for v in rep.trials.values())
        assert "mean_flow_magnitude" in rep.extra


# -- synthetic latents --------------------------------------------------------


def test_zero_noise_matches_baseline(tiny_model, pair):
    rep, pred = synthetic_latent(tiny_model, pair[0], sigma=0.0, draws=5)
    for m, v in rep.trials.items():
        assert max(v) == 0.0, m
    base = predict(tiny_model, pair[0], mean_mode=True).state
    np.testing.assert_array_equal(pred.force[0], base.force[0])


@pytest.mark.parametrize("sigma", [0.1, 1.0, 10.0])
def test_noisy_latents_stay_in_range(tiny_model, pair, sigma):
    rep, pred = synthetic_latent(tiny_model, pair[0], sigma=sigma, draws=20)
    assert rep.extra["finite"] and rep.extra["min_force"] >= 0
    assert np.all(pred.force >= 0)


def test_deviation_grows_with_noise(tiny_model, pair):
    means = [synthetic_latent(tiny_model, pair[0], sigma=s, draws=100)[0].summary["proprio"]["mean"] for s in (0.0, 0.1, 1.0, 10.0)]
    assert all(a <= b for a, b in zip(means, means[1:]))


def test_prior_mode_and_bad_arguments(tiny_model, pair):
    rep, _ = synthetic_latent(tiny_model, pair[0], mode="prior", draws=4)
    assert rep.config["mode"] == "prior"
    with pytest.raises(ValueError):
        synthetic_latent(tiny_model, pair[0], sigma=-1.0)
    with pytest.raises(ValueError):
        synthetic_latent(tiny_model, pair[0], mode="uniform")


# -- action sweep -------------------------------------------------------------


def test_sweep_covers_grid(tiny_model, pair, small_dataset):
    grid = default_grid(small_dataset.manifest["scene"]["action_bounds"])
    out = action_sweep(tiny_model, pair[0], grid)
    assert out["count"] == 275
    assert out["force"].shape == (11, 5, 5, 20)
    assert out["flow"].shape == (11, 5, 5, 64, 64, 2)


def test_null_action_sweep_equals_prediction(tiny_model, pair):
    out = action_sweep(tiny_model, pair[0], ([0.0], [0.0], [0.0]))
    base = predict(tiny_model, pair[0], actions=np.zeros((1, 3), np.float32), mean_mode=True).state
    for m in ("proprio", "force", "flow"):
        np.testing.assert_array_equal(out[m].reshape(base.get(m).shape), base.get(m))


# -- rollouts -----------------------------------------------------------------


def test_single_step_rollout_is_predict(tiny_model, pair):
    a = pair[0].a
    [state] = feedback_rollout(tiny_model, pair[0], a, horizon=1)
    ref = predict(tiny_model, pair[0], actions=a, mean_mode=True).state
    for m in ("proprio", "force", "flow"):
        assert state.get(m).tobytes() == ref.get(m).tobytes()


def test_rollout_needs_reconstructable_inputs(pair):
    m = PerceptionModel(ModalityConfig(inputs=("proprio", "vision"), outputs=("proprio", "force"), latent_dim=4))
    with pytest.raises(ProbeConfigError, match="flow"):
        feedback_rollout(m, pair[0], np.zeros((3, 3)))


def test_rollout_drift_report(tiny_model, small_dataset):
    src, _ = small_dataset.pairs()
    rep = rollout_drift(tiny_model, small_dataset, int(src[0]), horizon=3)
    assert rep.kind == "rollout" and rep.config["horizon"] == 3
    assert all(len(v) == 3 for v in rep.trials.values())
    again = rollout_drift(tiny_model, small_dataset, int(src[0]), horizon=3)
    assert again.to_json() == rep.to_json()
    null = rollout_drift(tiny_model, small_dataset, int(src[0]), horizon=3, actions=np.zeros((3, 3)))
    assert null.config["actions"] == [[0.0, 0.0, 0.0]] * 3


def test_rollout_refuses_episode_boundary(tiny_model, small_dataset):
    ep = small_dataset.episode_of()
    last = int(np.flatnonzero(ep == ep[0])[-1])
    with pytest.raises(ValueError, match="episode"):
        rollout_drift(tiny_model, small_dataset, last - 1, horizon=3)


# -- plots --------------------------------------------------------------------


def test_flow_colour_wheel(tmp_path):
    flow = np.zeros((4, 4, 2))
    flow[0, 0] = [1.0, 0.0]
    rgb = flow_to_rgb(flow)
    assert rgb.shape == (4, 4, 3)
    np.testing.assert_allclose(rgb[1, 1], 1.0)  # no motion is white
    assert not np.allclose(rgb[0, 0], 1.0)
    flow_strip_png(tmp_path / "s.png", [flow, flow])
    assert (tmp_path / "s.png").stat().st_size > 0
