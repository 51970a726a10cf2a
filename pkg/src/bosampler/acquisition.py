"""Pseudo-score objective and UCB acquisition over latent codes.

Ground truth is unavailable while sampling, so candidates are scored
against the generator's most-likely trajectory (the one at the prior
mode): score(z) = -sum over agents of ADE(G(X, z), G(X, mode)).  The
score is always <= 0 and is 0 exactly at the mode.  Acquisition is the
UCB form mean + sqrt(beta * variance), maximized by scanning a pool of
i.i.d. prior draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .gp import GPState, PosteriorMoment, posterior_batch
from .metrics import ade

__all__ = [
    "AcquisitionConfig",
    "PseudoScorer",
    "pseudo_score",
    "ucb",
    "maximize_acquisition",
]


@dataclass(frozen=True)
class AcquisitionConfig:
    """UCB weight and candidate-pool size for the argmax scan."""

    beta: float = 0.5
    candidate_pool_size: int = 512

    def __post_init__(self):
        if not (self.beta >= 0.0 and np.isfinite(self.beta)):
            raise ValueError("beta must be a nonnegative finite real")
        if self.candidate_pool_size < 1:
            raise ValueError("candidate_pool_size must be at least 1")


class PseudoScorer:
    """Scores latent codes by displacement from the prior-mode trajectory.

    ``observations`` holds one history per agent sharing the latent code;
    the single-agent case is a one-element list.  Reference trajectories
    at the mode are generated once at construction.
    """

    def __init__(
        self,
        generator: Callable[[np.ndarray, np.ndarray], np.ndarray],
        observations: Sequence[np.ndarray],
        mode: np.ndarray | None,
    ):
        if mode is None:
            raise ValueError("pseudo-scoring needs a prior mode and this prior declares none")
        if len(observations) < 1:
            raise ValueError("pseudo-scoring needs at least one observed history")
        self.generator = generator
        self.observations = list(observations)
        self.mode = np.asarray(mode, dtype=float)
        self.references = [generator(X, self.mode) for X in self.observations]

    def generate_all(self, z) -> list[np.ndarray]:
        """One candidate trajectory per observed history."""
        return [self.generator(X, z) for X in self.observations]

    def score_trajectories(self, trajectories: Sequence[np.ndarray]) -> float:
        """Score pre-generated trajectories (one per history, same order)."""
        if len(trajectories) != len(self.references):
            raise ValueError("one trajectory per observed history is required")
        return -sum(ade(t, ref) for t, ref in zip(trajectories, self.references))

    def __call__(self, z) -> float:
        return self.score_trajectories(self.generate_all(z))


def pseudo_score(scorer: PseudoScorer, z) -> float:
    """Negative summed ADE between trajectories at z and at the prior mode."""
    return scorer(z)


def ucb(m: PosteriorMoment, beta: float) -> float:
    """Upper confidence bound: mean + sqrt(beta * variance)."""
    if m.variance < 0:
        raise ValueError("posterior variance must be nonnegative")
    return m.mean + float(np.sqrt(beta * m.variance))


def maximize_acquisition(
    state: GPState,
    cfg: AcquisitionConfig,
    prior,
    rng: np.random.Generator,
) -> np.ndarray:
    """Argmax of the UCB over a pool of i.i.d. prior draws.

    The full pool is scored in one batch and ties break to the lowest
    candidate index, so the result is deterministic given the rng state
    and independent of any evaluation order.
    """
    if getattr(prior, "kind", "standard-normal") != "standard-normal":
        raise ValueError(f"cannot draw candidates from prior kind {prior.kind!r}")
    pool = rng.standard_normal((cfg.candidate_pool_size, prior.dim))
    means, variances = posterior_batch(state, pool)
    # phi = mean + sqrt(beta * var), composed in place on the variance buffer
    variances *= cfg.beta
    np.sqrt(variances, out=variances)
    variances += means
    return pool[int(np.argmax(variances))].copy()
