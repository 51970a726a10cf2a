"""Exact Gaussian-process regression over latent codes.

A latent point is a plain 1-D float array of length ``d``.  Scored samples
pair a latent point with a scalar evaluation score; fitting factors the
regularized Gram matrix once (Cholesky), after which posterior queries are
cheap and the fitted state is immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg.lapack import dpotrf as _dpotrf, dpotri as _dpotri, dpotrs as _dpotrs

__all__ = [
    "KernelConfig",
    "ScoredSample",
    "GPState",
    "PosteriorMoment",
    "kernel_eval",
    "fit_gp",
    "posterior",
    "posterior_batch",
    "median_lengthscale",
    "warmup_kernel_config",
]

# Jitter escalation for a Gram matrix that fails to factor: each retry
# multiplies by 10, starting at JITTER_START, giving up past JITTER_CAP.
JITTER_START = 1e-6
JITTER_CAP = 1e-2


def _as_point(z, dim: int | None = None) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 1:
        raise ValueError(f"latent point must be a 1-D vector, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("latent point has non-finite coordinates")
    if dim is not None and z.size != dim:
        raise ValueError(f"latent dimension mismatch: expected {dim}, got {z.size}")
    return z


@dataclass(frozen=True)
class KernelConfig:
    """Squared-exponential covariance: ``sigma_f2 * exp(-|z-z'|^2 / (2 l^2))``."""

    lengthscale: float = 1.0
    signal_variance: float = 1.0
    kind: str = "squared-exponential"

    def __post_init__(self):
        if self.kind != "squared-exponential":
            raise ValueError(f"unsupported kernel kind: {self.kind!r}")
        if not (self.lengthscale > 0 and np.isfinite(self.lengthscale)):
            raise ValueError("lengthscale must be a positive finite real")
        if not (self.signal_variance > 0 and np.isfinite(self.signal_variance)):
            raise ValueError("signal_variance must be a positive finite real")


class ScoredSample(NamedTuple):
    """One observation for the surrogate: latent point and its score."""

    z: np.ndarray
    score: float


class PosteriorMoment(NamedTuple):
    mean: float
    variance: float


def kernel_eval(z, z_other, cfg: KernelConfig) -> float:
    """Evaluate the covariance between two latent points."""
    a = _as_point(z)
    b = _as_point(z_other, dim=a.size)
    d2 = float(np.dot(a - b, a - b))
    return cfg.signal_variance * float(np.exp(-d2 / (2.0 * cfg.lengthscale**2)))


def _cross_kernel(cfg: KernelConfig, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Gram block k(A, B) for row-stacked point sets, shape (len(A), len(B))."""
    # sf2 * exp(-c |a-b|^2) assembled as one exp over c(2 a.b - |a|^2 - |b|^2)
    # + log sf2, so the big (len(A), len(B)) buffer sees only four passes
    c = 0.5 / (cfg.lengthscale * cfg.lengthscale)
    a2 = np.einsum("ij,ij->i", A, A)
    b2 = a2 if B is A else np.einsum("ij,ij->i", B, B)
    ea = a2 * -c
    eb = b2 * -c + np.log(cfg.signal_variance)
    G = A @ B.T
    G *= 2.0 * c
    G += ea[:, None]
    G += eb[None, :]
    np.exp(G, out=G)
    return G


@dataclass(frozen=True)
class GPState:
    """Fitted surrogate: immutable after :func:`fit_gp`, safe to query concurrently.

    ``chol`` is the lower Cholesky factor of ``K + noise_variance*I`` (plus
    ``jitter*I`` if escalation was needed) and ``alpha`` solves
    ``(K + noise_variance*I) alpha = scores - prior_mean``.  ``inv`` caches
    the full inverse of the regularized Gram matrix so batched variance
    queries cost one small matmul instead of a triangular solve.
    """

    kernel: KernelConfig
    noise_variance: float
    prior_mean: float
    train_z: np.ndarray        # (w, d)
    train_scores: np.ndarray   # (w,)
    chol: np.ndarray           # (w, w) lower triangular
    alpha: np.ndarray          # (w,)
    jitter: float = 0.0
    inv: np.ndarray | None = None

    @property
    def num_observations(self) -> int:
        return self.train_z.shape[0]

    @property
    def observations(self) -> list[ScoredSample]:
        return [
            ScoredSample(self.train_z[i].copy(), float(self.train_scores[i]))
            for i in range(self.num_observations)
        ]


def fit_gp(
    samples: Sequence[ScoredSample],
    cfg: KernelConfig,
    noise_variance: float = 1e-6,
    prior_mean: float = 0.0,
) -> GPState:
    """Condition the surrogate on scored samples.

    Factors ``K + noise_variance*I`` once (O(w^3)); posterior queries reuse
    the factor.  A Cholesky failure is retried with escalating diagonal
    jitter (x10 per retry from 1e-6, capped at 1e-2) before giving up.

    Parameters
    ----------
    samples : sequence of ScoredSample
        May be empty, in which case the state represents the prior.
    cfg : KernelConfig
    noise_variance : float
        Observation noise variance, >= 0.
    prior_mean : float
        Constant prior mean subtracted from scores before solving.
    """
    if noise_variance < 0:
        raise ValueError("noise_variance must be nonnegative")
    w = len(samples)
    if w == 0:
        empty = np.empty((0,), dtype=float)
        return GPState(
            kernel=cfg,
            noise_variance=float(noise_variance),
            prior_mean=float(prior_mean),
            train_z=np.empty((0, 1), dtype=float),
            train_scores=empty,
            chol=np.empty((0, 0), dtype=float),
            alpha=empty,
        )

    try:
        Z = np.asarray([sample.z for sample in samples], dtype=float)
    except ValueError:
        raise ValueError("latent dimension mismatch across samples") from None
    if Z.ndim != 2 or Z.shape[1] < 1:
        raise ValueError("latent points must be 1-D vectors of a common length")
    s = np.asarray([sample.score for sample in samples], dtype=float)
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(s))):
        raise ValueError("latent points and scores must be finite")

    K = _cross_kernel(cfg, Z, Z)
    K.flat[:: w + 1] += noise_variance

    chol, info = _dpotrf(K, lower=1, clean=1)
    jitter = 0.0
    if info != 0:
        jitter = JITTER_START
        while True:
            chol, info = _dpotrf(K + jitter * np.eye(w), lower=1, clean=1)
            if info == 0:
                break
            if jitter >= JITTER_CAP:
                raise ValueError("kernel matrix not PSD")
            jitter *= 10.0

    alpha, _ = _dpotrs(chol, s - prior_mean, lower=1)
    return GPState(
        kernel=cfg,
        noise_variance=float(noise_variance),
        prior_mean=float(prior_mean),
        train_z=Z,
        train_scores=s,
        chol=chol,
        alpha=alpha,
        jitter=jitter,
        inv=_chol_inverse(chol),
    )


def _chol_inverse(chol: np.ndarray) -> np.ndarray:
    """Full inverse of ``L L^T`` from its lower Cholesky factor."""
    half, _ = _dpotri(chol, lower=1)
    return half + np.tril(half, -1).T


def posterior_batch(state: GPState, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances at row-stacked query points.

    Returns ``(means, variances)`` of shape (m,); variances are clamped at 0.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ValueError("query points must be a 2-D (m, d) array")
    sf2 = state.kernel.signal_variance
    m = Z.shape[0]
    if state.num_observations == 0:
        return (
            np.full(m, state.prior_mean),
            np.full(m, sf2),
        )
    if Z.shape[1] != state.train_z.shape[1]:
        raise ValueError(
            f"latent dimension mismatch: expected {state.train_z.shape[1]}, got {Z.shape[1]}"
        )
    Kq = _cross_kernel(state.kernel, Z, state.train_z)  # (m, w)
    means = state.prior_mean + Kq @ state.alpha
    kinv = state.inv if state.inv is not None else _chol_inverse(state.chol)
    variances = sf2 - np.einsum("ij,ij->i", Kq @ kinv, Kq)
    np.clip(variances, 0.0, sf2, out=variances)
    return means, variances


def posterior(state: GPState, z) -> PosteriorMoment:
    """Closed-form posterior moment at a single latent point."""
    if state.num_observations == 0:
        _as_point(z)
        return PosteriorMoment(state.prior_mean, state.kernel.signal_variance)
    zq = _as_point(z, dim=state.train_z.shape[1])
    means, variances = posterior_batch(state, zq[None, :])
    return PosteriorMoment(float(means[0]), float(variances[0]))


def median_lengthscale(points: np.ndarray) -> float:
    """Median pairwise distance of row-stacked points; 1.0 when degenerate.

    Falls back to 1.0 with fewer than two points or when the median pairwise
    distance is zero (all duplicates).
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2:
        return 1.0
    diff = P[:, None, :] - P[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    iu = np.triu_indices(P.shape[0], k=1)
    med = float(np.median(d[iu]))
    if not np.isfinite(med) or med <= 0.0:
        return 1.0
    return med


def warmup_kernel_config(points: np.ndarray, scores: np.ndarray) -> tuple[KernelConfig, float]:
    """Hyperparameters from warm-up data: median-heuristic lengthscale,
    score-variance signal, score-mean prior.

    Returns ``(KernelConfig, prior_mean)``.  No marginal-likelihood
    optimization: the heuristic keeps sampling deterministic per seed and
    cheap at small budgets.
    """
    scores = np.asarray(scores, dtype=float)
    ell = median_lengthscale(points)
    if scores.size >= 2:
        sf2 = float(np.var(scores, ddof=1))
        if not np.isfinite(sf2) or sf2 <= 0.0:
            sf2 = 1.0
    else:
        sf2 = 1.0
    mu0 = float(np.mean(scores)) if scores.size else 0.0
    return KernelConfig(lengthscale=ell, signal_variance=sf2), mu0
