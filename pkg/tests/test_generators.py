"""Closed-form geometry checks for the synthetic trajectory generators."""

import math

import numpy as np
import pytest
from scipy.stats import chisquare

from bosampler import (
    DT,
    OBS_LEN,
    PRED_LEN,
    Agent,
    GeneratorSpec,
    Scene,
    cv_generate,
    endpoint_generate,
    make_generator,
    mixture_generate,
    synthetic_corpus,
    true_mode_of,
)
from bosampler.generators import mode_of_latent, mode_quantile_bands
from bosampler.sobol import inverse_normal_cdf

Z95 = 1.6448536269514726  # standard-normal quantile at 0.95


def straight_obs(speed=1.0, heading=0.0, start=(0.0, 0.0)):
    v = speed * np.array([math.cos(heading), math.sin(heading)])
    t = np.arange(OBS_LEN, dtype=float)[:, None]
    return np.asarray(start) + t * DT * v


def test_cv_zero_latent_is_constant_velocity():
    for heading in (0.0, 0.7, -2.1):
        obs = straight_obs(speed=1.3, heading=heading, start=(2.0, -1.0))
        fut = cv_generate(obs, np.zeros(2), GeneratorSpec(kind="cv_gauss"))
        v = (obs[-1] - obs[-2]) / DT
        k = np.arange(1, PRED_LEN + 1)[:, None]
        expected = obs[-1] + k * DT * v
        assert np.allclose(fut, expected, atol=1e-9)


def test_cv_stationary_history_stays_put():
    obs = np.tile([3.0, 4.0], (OBS_LEN, 1))
    spec = GeneratorSpec(kind="cv_gauss")
    for z in (np.zeros(2), np.array([5.0, -5.0])):
        fut = cv_generate(obs, z, spec)
        assert np.array_equal(fut, np.tile([3.0, 4.0], (PRED_LEN, 1)))
    mfut = mixture_generate(obs, np.array([9.0, 0.0, 0.0]), GeneratorSpec(kind="turn_mixture", latent_dim=3))
    assert np.array_equal(mfut, np.tile([3.0, 4.0], (PRED_LEN, 1)))


def test_cv_heading_gain_rotates_displacements():
    spec = GeneratorSpec(kind="cv_gauss", heading_gain=0.15)
    obs = straight_obs(speed=1.0, heading=0.4)
    base = cv_generate(obs, np.zeros(2), spec)
    turned = cv_generate(obs, np.array([2.0, 0.0]), spec)
    a = 0.15 * 2.0
    R = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    assert np.allclose(turned - obs[-1], (base - obs[-1]) @ R.T, atol=1e-12)


def test_cv_speed_gain_scales_displacements():
    spec = GeneratorSpec(kind="cv_gauss", speed_gain=0.2)
    obs = straight_obs(speed=0.8, heading=-0.3)
    base = cv_generate(obs, np.zeros(2), spec)
    fast = cv_generate(obs, np.array([0.0, 1.5]), spec)
    assert np.allclose(fast - obs[-1], math.exp(0.2 * 1.5) * (base - obs[-1]), atol=1e-12)


def test_cv_surplus_latent_coordinates_are_inert():
    obs = straight_obs()
    lo = cv_generate(obs, np.array([0.3, -0.7]), GeneratorSpec(kind="cv_gauss"))
    z16 = np.zeros(16)
    z16[0], z16[1] = 0.3, -0.7
    z16[2:] = np.linspace(-3, 3, 14)
    hi = cv_generate(obs, z16, GeneratorSpec(kind="cv_gauss", latent_dim=16))
    assert np.array_equal(lo, hi)


def test_mode_thresholds_at_default_table():
    probs = {"straight": 0.90, "left": 0.05, "right": 0.05}
    assert mode_of_latent(Z95 + 1e-9, probs) == "left"
    assert mode_of_latent(Z95 - 1e-6, probs) == "straight"
    assert mode_of_latent(-Z95 - 1e-9, probs) == "right"
    assert mode_of_latent(0.0, probs) == "straight"


def test_mode_bands_partition_unit_interval():
    probs = {"straight": 0.90, "left": 0.04, "right": 0.04, "uturn": 0.02}
    bands = mode_quantile_bands(probs)
    assert bands["uturn"] == ((0.0, 0.01), (0.99, 1.0))
    assert bands["left"] == ((0.95, 0.99),)
    assert bands["right"] == ((0.01, 0.05),)
    assert bands["straight"] == ((0.05, 0.95),)
    total = sum(hi - lo for spans in bands.values() for lo, hi in spans)
    assert total == pytest.approx(1.0, abs=1e-12)
    assert mode_of_latent(inverse_normal_cdf(0.995) + 1e-9, probs) == "uturn"
    assert mode_of_latent(inverse_normal_cdf(0.005) - 1e-9, probs) == "uturn"
    assert mode_of_latent(inverse_normal_cdf(0.97), probs) == "left"
    assert mode_of_latent(inverse_normal_cdf(0.03), probs) == "right"


def classify_by_bands(z1, probs):
    """Vectorized reference classification through the quantile partition."""
    bands = mode_quantile_bands(probs)
    labels = np.empty(z1.shape, dtype=object)
    for mode, spans in bands.items():
        for lo, hi in spans:
            zlo = -np.inf if lo <= 0.0 else inverse_normal_cdf(lo)
            zhi = np.inf if hi >= 1.0 else inverse_normal_cdf(hi)
            labels[(z1 > zlo) & (z1 <= zhi)] = mode
    return labels


def test_mode_masses_match_table():
    probs = {"straight": 0.90, "left": 0.04, "right": 0.04, "uturn": 0.02}
    z1 = np.random.default_rng(0).standard_normal(1_000_000)
    labels = classify_by_bands(z1, probs)
    for mode, p in probs.items():
        assert abs(np.mean(labels == mode) - p) < 0.003
    # scalar classifier agrees with the vectorized partition pointwise
    for z in z1[:2000]:
        assert mode_of_latent(float(z), probs) == labels_at(z, labels, z1)


def labels_at(z, labels, z1):
    return labels[np.nonzero(z1 == z)[0][0]]


def test_mode_counts_pass_chi_square():
    probs = {"straight": 0.90, "left": 0.05, "right": 0.05}
    z1 = np.random.default_rng(7).standard_normal(100_000)
    labels = classify_by_bands(z1, probs)
    modes = list(probs)
    counts = [int(np.sum(labels == m)) for m in modes]
    expected = [probs[m] * len(z1) for m in modes]
    assert chisquare(counts, expected).pvalue > 1e-3


def test_mode_table_validation():
    with pytest.raises(ValueError, match="unknown maneuver mode"):
        mode_of_latent(0.0, {"straight": 0.5, "zigzag": 0.5})
    with pytest.raises(ValueError, match="sum to 1"):
        mode_of_latent(0.0, {"straight": 0.5, "left": 0.2})
    with pytest.raises(ValueError, match="out of range"):
        mode_of_latent(0.0, {"straight": 1.5, "left": -0.5})


def test_mixture_drift_is_linear_in_time():
    spec = GeneratorSpec(kind="turn_mixture", latent_dim=3, jitter_gain=0.5)
    obs = straight_obs(speed=1.0, heading=0.2)
    base = mixture_generate(obs, np.array([0.0, 0.0, 0.0]), spec)
    drifted = mixture_generate(obs, np.array([0.0, 2.0, -1.0]), spec)
    k = np.arange(1, PRED_LEN + 1, dtype=float)[:, None]
    assert np.allclose(drifted - base, 0.5 * DT * k * np.array([2.0, -1.0]), atol=1e-12)


def test_mixture_turn_sweeps_expected_angle():
    spec = GeneratorSpec(kind="turn_mixture", latent_dim=1, turn_angle=math.pi / 2.0)
    obs = straight_obs(speed=1.0, heading=0.0)
    left = mixture_generate(obs, np.array([3.0]), spec)
    last_step = left[-1] - left[-2]
    final_heading = math.atan2(last_step[1], last_step[0])
    assert final_heading == pytest.approx(math.pi / 2.0, abs=1e-9)
    steps = np.diff(np.vstack([obs[-1], left]), axis=0)
    assert np.allclose(np.linalg.norm(steps, axis=1), 1.0 * DT, atol=1e-12)


def test_true_mode_recovers_label_despite_large_drift():
    spec = GeneratorSpec(
        kind="turn_mixture",
        latent_dim=3,
        jitter_gain=0.8,
        mode_probs={"straight": 0.7, "left": 0.1, "right": 0.1, "uturn": 0.1},
    )
    obs = straight_obs(speed=1.4, heading=1.1, start=(-3.0, 2.0))
    cases = {
        "straight": 0.0,
        "left": inverse_normal_cdf(0.88),
        "right": inverse_normal_cdf(0.12),
        "uturn": inverse_normal_cdf(0.99),
    }
    for mode, z1 in cases.items():
        fut = mixture_generate(obs, np.array([z1, 3.0, -3.0]), spec)
        scene = Scene(scene_id=0, agents=(Agent(agent_id=5, obs=obs, future=fut),))
        got, mass = true_mode_of(scene, 5, spec)
        assert got == mode
        assert mass == spec.mode_probs[mode]


def test_true_mode_requires_mixture_and_known_agent():
    scenes = synthetic_corpus(GeneratorSpec(kind="turn_mixture", latent_dim=3), 1, seed=0)
    with pytest.raises(ValueError, match="turn_mixture"):
        true_mode_of(scenes[0], 0, GeneratorSpec(kind="cv_gauss"))
    with pytest.raises(ValueError, match="no agent"):
        true_mode_of(scenes[0], 42, GeneratorSpec(kind="turn_mixture", latent_dim=3))


def test_endpoint_shift_and_linear_interpolation():
    spec = GeneratorSpec(kind="endpoint_cond", endpoint_gain=1.0)
    obs = straight_obs(speed=1.0, heading=0.5)
    z = np.array([0.8, -0.4])
    fut = endpoint_generate(obs, z, spec)
    v = (obs[-1] - obs[-2]) / DT
    endpoint = obs[-1] + PRED_LEN * DT * v + 1.0 * z
    assert np.allclose(fut[-1], endpoint, atol=1e-12)
    frac = np.arange(1, PRED_LEN + 1, dtype=float)[:, None] / PRED_LEN
    assert np.allclose(fut, obs[-1] + frac * (endpoint - obs[-1]), atol=1e-12)
    # zero latent reduces to plain constant velocity
    assert np.allclose(
        endpoint_generate(obs, np.zeros(2), spec),
        cv_generate(obs, np.zeros(2), GeneratorSpec(kind="cv_gauss")),
        atol=1e-9,
    )


def test_spec_validation():
    with pytest.raises(ValueError, match="unknown generator kind"):
        GeneratorSpec(kind="rnn")
    with pytest.raises(ValueError, match="latent_dim"):
        GeneratorSpec(kind="cv_gauss", latent_dim=1)
    with pytest.raises(ValueError, match="latent_dim"):
        GeneratorSpec(kind="endpoint_cond", latent_dim=1)
    GeneratorSpec(kind="turn_mixture", latent_dim=1)


def test_latent_and_history_validation():
    spec = GeneratorSpec(kind="cv_gauss")
    obs = straight_obs()
    with pytest.raises(ValueError, match="latent code must have shape"):
        cv_generate(obs, np.zeros(3), spec)
    with pytest.raises(ValueError, match="non-finite"):
        cv_generate(obs, np.array([np.nan, 0.0]), spec)
    with pytest.raises(ValueError, match="observed trajectory must have shape"):
        cv_generate(obs[:5], np.zeros(2), spec)
    bad = obs.copy()
    bad[3, 1] = np.inf
    with pytest.raises(ValueError, match="non-finite"):
        cv_generate(bad, np.zeros(2), spec)


def test_make_generator_binds_spec():
    spec = GeneratorSpec(kind="turn_mixture", latent_dim=3)
    gen = make_generator(spec)
    assert gen.spec is spec
    obs = straight_obs()
    z = np.array([0.1, 0.2, 0.3])
    assert np.array_equal(gen(obs, z), mixture_generate(obs, z, spec))


def test_generators_do_not_mutate_inputs():
    spec = GeneratorSpec(kind="cv_gauss")
    obs = straight_obs()
    z = np.array([0.5, -0.5])
    obs_copy, z_copy = obs.copy(), z.copy()
    first = cv_generate(obs, z, spec)
    second = cv_generate(obs, z, spec)
    assert np.array_equal(obs, obs_copy) and np.array_equal(z, z_copy)
    assert np.array_equal(first, second)


def test_corpus_shapes_and_determinism():
    spec = GeneratorSpec(kind="cv_gauss")
    a = synthetic_corpus(spec, 3, agents_per_scene=2, seed=5)
    b = synthetic_corpus(spec, 3, agents_per_scene=2, seed=5)
    c = synthetic_corpus(spec, 3, agents_per_scene=2, seed=6)
    assert [s.scene_id for s in a] == [0, 1, 2]
    assert all(len(s.agents) == 2 for s in a)
    assert all(ag.obs.shape == (OBS_LEN, 2) and ag.future.shape == (PRED_LEN, 2) for s in a for ag in s.agents)
    for sa, sb in zip(a, b):
        for ga, gb in zip(sa.agents, sb.agents):
            assert np.array_equal(ga.obs, gb.obs) and np.array_equal(ga.future, gb.future)
    assert not np.array_equal(a[0].agents[0].obs, c[0].agents[0].obs)


def test_corpus_histories_walk_constant_velocity():
    scenes = synthetic_corpus(GeneratorSpec(kind="cv_gauss"), 5, seed=1, speed_range=(0.5, 2.0))
    for scene in scenes:
        for agent in scene.agents:
            steps = np.diff(agent.obs, axis=0)
            assert np.allclose(steps, steps[0], atol=1e-9)
            speed = np.linalg.norm(steps[0]) / DT
            assert 0.5 - 1e-9 <= speed <= 2.0 + 1e-9


def test_corpus_obs_noise_leaves_future_clean():
    spec = GeneratorSpec(kind="cv_gauss")
    clean = synthetic_corpus(spec, 2, seed=9, obs_noise=0.0)
    noisy = synthetic_corpus(spec, 2, seed=9, obs_noise=0.05)
    # noise is applied after the future is generated, so the first agent's
    # future matches the clean run even though its history differs
    first_c, first_n = clean[0].agents[0], noisy[0].agents[0]
    assert np.array_equal(first_c.future, first_n.future)
    assert not np.array_equal(first_c.obs, first_n.obs)
    for scene in noisy:
        for agent in scene.agents:
            obs_steps = np.diff(agent.obs, axis=0)
            assert not np.allclose(obs_steps, obs_steps[0], atol=1e-9)
            # futures keep exact constant velocity: built from the clean walk
            fut_steps = np.diff(agent.future, axis=0)
            assert np.allclose(fut_steps, fut_steps[0], atol=1e-9)


def test_corpus_mode_fractions_control_frequencies():
    spec = GeneratorSpec(
        kind="turn_mixture",
        latent_dim=3,
        mode_probs={"straight": 0.9, "left": 0.05, "right": 0.05},
    )
    fractions = {"straight": 0.5, "left": 0.25, "right": 0.25}
    scenes = synthetic_corpus(spec, 2000, seed=3, mode_fractions=fractions)
    labels = [true_mode_of(s, 0, spec)[0] for s in scenes]
    for mode, f in fractions.items():
        got = labels.count(mode) / len(labels)
        assert abs(got - f) < 0.04


def test_corpus_validation():
    spec = GeneratorSpec(kind="cv_gauss")
    assert synthetic_corpus(spec, 0) == []
    with pytest.raises(ValueError, match="n_scenes"):
        synthetic_corpus(spec, -1)
    with pytest.raises(ValueError, match="agents_per_scene"):
        synthetic_corpus(spec, 1, agents_per_scene=0)
    with pytest.raises(ValueError, match="speed_range"):
        synthetic_corpus(spec, 1, speed_range=(0.0, 1.0))
    with pytest.raises(ValueError, match="speed_range"):
        synthetic_corpus(spec, 1, speed_range=(2.0, 1.0))
    with pytest.raises(ValueError, match="mode_fractions"):
        synthetic_corpus(spec, 1, mode_fractions={"straight": 1.0})


def test_scene_and_agent_validation():
    with pytest.raises(ValueError, match="at least one agent"):
        Scene(scene_id=0, agents=())
    with pytest.raises(ValueError, match="observed trajectory"):
        Agent(agent_id=0, obs=np.zeros((3, 2)), future=np.zeros((PRED_LEN, 2)))
    with pytest.raises(ValueError, match="future trajectory"):
        Agent(agent_id=0, obs=np.zeros((OBS_LEN, 2)), future=np.zeros((5, 2)))
