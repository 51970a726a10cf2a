"""The four latent sampling strategies and per-agent session execution.

``mc`` draws i.i.d. from the prior; ``qmc`` maps an unscrambled Sobol
sequence through the inverse normal CDF; ``bo`` spends a warm-up budget on
prior draws, then sequentially proposes the remaining samples by fitting a
GP surrogate to pseudo-scores and maximizing a UCB acquisition; ``bo_qmc``
is ``bo`` with the warm-up drawn quasi-randomly.

Sessions are independent across (scene, agent) and internally strictly
sequential.  Each session's random stream is seeded from (config seed,
scene id, agent id), so sampler kind never perturbs the stream: with
warm-up equal to the full budget, ``bo`` degenerates to ``mc`` bitwise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .acquisition import AcquisitionConfig, PseudoScorer, maximize_acquisition
from .generators import GeneratorSpec, Scene, make_generator
from .gp import ScoredSample, fit_gp, warmup_kernel_config
from .sobol import inverse_normal_cdf, normal_qmc_points, sobol_points

__all__ = [
    "SAMPLER_KINDS",
    "LatentPrior",
    "SamplerConfig",
    "SessionResult",
    "mix_seed",
    "seeded_rng",
    "mc_draw",
    "qmc_draw",
    "sobol_points",
    "inverse_normal_cdf",
    "run_session",
]

SAMPLER_KINDS = ("mc", "qmc", "bo", "bo_qmc")

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class LatentPrior:
    """Sampling distribution of the generator's latent code.

    ``mode`` is the density maximum used as the pseudo-score reference;
    it defaults to the zero vector, the standard-normal mode.
    """

    dim: int
    kind: str = "standard-normal"
    mode: np.ndarray | None = None

    def __post_init__(self):
        if self.kind != "standard-normal":
            raise ValueError(f"unsupported prior kind: {self.kind!r}")
        if self.dim < 1:
            raise ValueError("latent dimension must be at least 1")
        mode = self.mode
        if mode is not None:
            mode = np.asarray(mode, dtype=float)
            if mode.shape != (self.dim,) or not np.all(np.isfinite(mode)):
                raise ValueError("prior mode must be a finite vector of length dim")
        else:
            mode = np.zeros(self.dim)
        object.__setattr__(self, "mode", mode)


@dataclass(frozen=True)
class SamplerConfig:
    """One sampling strategy instance.

    ``warmup`` defaults to ceil(n_samples / 2) when left unset and only
    matters for the ``bo``/``bo_qmc`` kinds.  ``noise_variance`` is the GP
    observation noise (the pseudo-score is deterministic, so this is
    numerical regularization).  With ``scene_shared`` one latent code is
    scored summed over all agents in the scene instead of per agent.
    """

    kind: str = "mc"
    n_samples: int = 20
    warmup: int | None = None
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    seed: int = 0
    noise_variance: float = 1e-6
    scene_shared: bool = False

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind: {self.kind!r}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.warmup is not None and not 1 <= self.warmup <= self.n_samples:
            raise ValueError("warmup must satisfy 1 <= warmup <= n_samples")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")

    @property
    def resolved_warmup(self) -> int:
        return ceil(self.n_samples / 2) if self.warmup is None else self.warmup


@dataclass(frozen=True)
class SessionResult:
    """All samples of one (scene, agent, sampler) session, in draw order.

    ``latents`` is (N, d); ``trajectories`` (N, 12, 2) holds the target
    agent's predicted futures; ``scores[i]`` is the pseudo-score of
    ``latents[i]``.  The first ``resolved_warmup`` latents came from the
    warm-up rule for bo kinds.
    """

    latents: np.ndarray
    trajectories: np.ndarray
    scores: np.ndarray
    sampler: SamplerConfig
    wall_time: float


def mix_seed(seed: int, index: int) -> int:
    """Derived 64-bit seed for an enumerated sub-run (e.g. a repeat)."""
    ss = np.random.SeedSequence([seed & _MASK64, index & _MASK64])
    return int(ss.generate_state(1, np.uint64)[0])


def seeded_rng(*words: int) -> np.random.Generator:
    """Independent stream keyed by integer words (seed, scene id, ...).

    SFC64 rather than the numpy default: sessions draw large candidate
    pools of normals and SFC64 generates them noticeably faster with the
    same reproducibility guarantees.
    """
    ss = np.random.SeedSequence([w & _MASK64 for w in words])
    return np.random.Generator(np.random.SFC64(ss))


def mc_draw(prior: LatentPrior, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. prior draws, shape (n, dim); deterministic given rng state."""
    if n < 0:
        raise ValueError("draw count must be nonnegative")
    return rng.standard_normal((n, prior.dim))


def qmc_draw(prior: LatentPrior, n: int) -> np.ndarray:
    """First n Gaussianized Sobol points, shape (n, dim); deterministic."""
    return normal_qmc_points(n, prior.dim)


def _session_rng(cfg: SamplerConfig, scene_id: int, agent_id: int) -> np.random.Generator:
    return seeded_rng(cfg.seed, scene_id, agent_id)


def run_session(scene: Scene, agent, generator, prior: LatentPrior, cfg: SamplerConfig) -> SessionResult:
    """Draw, generate, and score all N samples for one agent.

    ``agent`` is an Agent of the scene or its id; ``generator`` is a
    GeneratorSpec or a bare ``(X, z) -> future`` callable.  For mc/qmc all
    N latents come from the corresponding draw; for bo/bo_qmc the first w
    are warm-up draws, after which each step refits the GP on every scored
    sample so far and appends the acquisition argmax.  GP hyperparameters
    are frozen after warm-up (median-heuristic lengthscale, score-variance
    signal, score-mean prior).
    """
    t0 = time.perf_counter()
    if isinstance(agent, (int, np.integer)):
        target = next((a for a in scene.agents if a.agent_id == agent), None)
        if target is None:
            raise ValueError(f"scene {scene.scene_id} has no agent {agent}")
        agent = target
    gen = make_generator(generator) if isinstance(generator, GeneratorSpec) else generator
    rng = _session_rng(cfg, scene.scene_id, agent.agent_id)

    if cfg.scene_shared:
        observations = [agent.obs] + [a.obs for a in scene.agents if a is not agent]
    else:
        observations = [agent.obs]

    def fail(stage: str, err: Exception):
        raise RuntimeError(
            f"generator failed during {stage} "
            f"(scene {scene.scene_id}, agent {agent.agent_id})"
        ) from err

    if prior.mode is None:
        raise ValueError("pseudo-scoring needs a prior mode and this prior declares none")
    try:
        scorer = PseudoScorer(gen, observations, prior.mode)
    except Exception as e:
        fail("reference generation", e)

    N, d = cfg.n_samples, prior.dim
    latents = np.empty((N, d))
    trajectories = np.empty((N,) + scorer.references[0].shape)
    scores = np.empty(N)

    def record(i: int, z: np.ndarray):
        try:
            trajs = scorer.generate_all(z)
        except Exception as e:
            fail(f"sample {i}", e)
        latents[i] = z
        trajectories[i] = trajs[0]
        scores[i] = scorer.score_trajectories(trajs)

    bo = cfg.kind in ("bo", "bo_qmc")
    n_init = cfg.resolved_warmup if bo else N
    if cfg.kind in ("mc", "bo"):
        init = mc_draw(prior, n_init, rng)
    else:
        init = qmc_draw(prior, n_init)
    for i in range(n_init):
        record(i, init[i])

    if bo and n_init < N:
        kernel_cfg, prior_mean = warmup_kernel_config(latents[:n_init], scores[:n_init])
        observed = [ScoredSample(latents[i], scores[i]) for i in range(n_init)]
        for n in range(n_init, N):
            state = fit_gp(observed, kernel_cfg, cfg.noise_variance, prior_mean)
            record(n, maximize_acquisition(state, cfg.acquisition, prior, rng))
            observed.append(ScoredSample(latents[n], scores[n]))

    return SessionResult(
        latents=latents,
        trajectories=trajectories,
        scores=scores,
        sampler=cfg,
        wall_time=time.perf_counter() - t0,
    )
