"""Pseudo-scoring and confidence-bound candidate selection."""

import numpy as np
import pytest

from bosampler import (
    AcquisitionConfig,
    GeneratorSpec,
    LatentPrior,
    PseudoScorer,
    make_generator,
    maximize_acquisition,
    pseudo_score,
    ucb,
)
from bosampler.generators import DT, OBS_LEN
from bosampler.gp import KernelConfig, PosteriorMoment, ScoredSample, fit_gp, posterior_batch


def walking_obs(speed=1.0, heading=0.0):
    t = np.arange(OBS_LEN) * DT
    v = speed * np.array([np.cos(heading), np.sin(heading)])
    return np.outer(t, v)


def cv_shift_generator(c):
    """Constant-velocity predictor whose first latent shifts x by a fixed gain."""
    base = make_generator(GeneratorSpec(kind="cv_gauss", heading_gain=0.0, speed_gain=0.0))

    def gen(X, z):
        out = base(X, np.zeros(2)).copy()
        out[:, 0] += c * z[0]
        return out

    return gen


def test_score_is_zero_at_the_reference_point():
    obs = walking_obs()
    for kind in ("cv_gauss", "turn_mixture", "endpoint_cond"):
        spec = GeneratorSpec(kind=kind, latent_dim=3 if kind == "turn_mixture" else 2)
        scorer = PseudoScorer(make_generator(spec), [obs], np.zeros(spec.latent_dim))
        assert pseudo_score(scorer, np.zeros(spec.latent_dim)) == 0.0


def test_score_equals_negative_shift():
    c = 0.37
    scorer = PseudoScorer(cv_shift_generator(c), [walking_obs()], np.zeros(2))
    for delta in (-2.0, -0.5, 0.0, 1.25):
        z = np.array([delta, 0.0])
        assert pseudo_score(scorer, z) == pytest.approx(-abs(delta * c), rel=1e-12, abs=1e-15)


def test_score_sums_over_scene_observations():
    c = 0.5
    obs_a = walking_obs()
    obs_b = walking_obs(speed=1.5, heading=1.0)
    scorer = PseudoScorer(cv_shift_generator(c), [obs_a, obs_b], np.zeros(2))
    z = np.array([2.0, 0.0])
    assert pseudo_score(scorer, z) == pytest.approx(-2.0 * abs(2.0 * c), rel=1e-12)


def test_scores_never_positive():
    rng = np.random.default_rng(4)
    spec = GeneratorSpec(kind="turn_mixture", latent_dim=3)
    scorer = PseudoScorer(make_generator(spec), [walking_obs()], np.zeros(3))
    for _ in range(50):
        assert pseudo_score(scorer, rng.normal(size=3)) <= 0.0


def test_ucb_hand_values():
    assert ucb(PosteriorMoment(1.0, 4.0), 0.25) == pytest.approx(2.0)
    assert ucb(PosteriorMoment(-0.5, 0.0), 0.9) == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        ucb(PosteriorMoment(0.0, -1e-6), 0.5)


def test_config_validation():
    assert AcquisitionConfig().beta == 0.5
    assert AcquisitionConfig().candidate_pool_size == 512
    AcquisitionConfig(beta=0.0)  # exploration-free is allowed
    with pytest.raises(ValueError):
        AcquisitionConfig(beta=-0.1)
    with pytest.raises(ValueError):
        AcquisitionConfig(beta=np.inf)
    with pytest.raises(ValueError):
        AcquisitionConfig(candidate_pool_size=0)


def test_empty_state_returns_first_candidate():
    """With no observations the bound is flat, so ties break to index 0."""
    state = fit_gp([], KernelConfig(), 1e-6)
    prior = LatentPrior(dim=3)
    cfg = AcquisitionConfig(candidate_pool_size=64)
    rng = np.random.default_rng(123)
    picked = maximize_acquisition(state, cfg, prior, rng)
    replay = np.random.default_rng(123).standard_normal((64, 3))
    assert np.array_equal(picked, replay[0])


def test_argmax_matches_pool_replay():
    rng_fit = np.random.default_rng(7)
    samples = [ScoredSample(rng_fit.normal(size=2), float(rng_fit.normal())) for _ in range(9)]
    state = fit_gp(samples, KernelConfig(lengthscale=0.8), 1e-6, prior_mean=-0.2)
    cfg = AcquisitionConfig(beta=0.7, candidate_pool_size=128)
    prior = LatentPrior(dim=2)

    picked = maximize_acquisition(state, cfg, prior, np.random.default_rng(55))
    pool = np.random.default_rng(55).standard_normal((128, 2))
    means, variances = posterior_batch(state, pool)
    phi = means + np.sqrt(0.7 * variances)
    assert np.array_equal(picked, pool[int(np.argmax(phi))])


def test_determinism_and_pool_membership():
    state = fit_gp(
        [ScoredSample(np.array([0.0, 0.0]), -1.0), ScoredSample(np.array([1.0, 1.0]), -0.5)],
        KernelConfig(),
        1e-6,
    )
    cfg = AcquisitionConfig(candidate_pool_size=32)
    prior = LatentPrior(dim=2)
    a = maximize_acquisition(state, cfg, prior, np.random.default_rng(9))
    b = maximize_acquisition(state, cfg, prior, np.random.default_rng(9))
    assert np.array_equal(a, b)
    pool = np.random.default_rng(9).standard_normal((32, 2))
    assert any(np.array_equal(a, row) for row in pool)


def test_scorer_requires_a_mode():
    with pytest.raises(ValueError, match="mode"):
        PseudoScorer(cv_shift_generator(1.0), [walking_obs()], None)


def test_unknown_prior_kind_rejected():
    state = fit_gp([], KernelConfig(), 1e-6)

    class OddPrior:
        kind = "uniform"
        dim = 2

    with pytest.raises(ValueError, match="prior kind"):
        maximize_acquisition(state, AcquisitionConfig(), OddPrior(), np.random.default_rng(0))
