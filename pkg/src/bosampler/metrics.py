"""Evaluation protocol: displacement errors, Best-of-N minima, gain vs the
Monte Carlo baseline, repeated-trial averaging, and the Kalman-filter
exception-subset selector.

Conventions: trajectories are (T, 2) float arrays in meters; Best-of-N
minimizes minADE and minFDE independently (possibly different samples);
gains are computed from unrounded metric values and rounded only at
display time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .generators import Agent, GeneratorSpec, Scene, make_generator

__all__ = [
    "ade",
    "fde",
    "min_of_n",
    "gain",
    "KalmanParams",
    "CvKalman",
    "kalman_cv_predict",
    "exception_select",
    "EvalRow",
    "EvalReport",
    "evaluate",
]


def _paired(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=float)
    g = np.asarray(gt, dtype=float)
    if p.shape != g.shape or p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"trajectory shapes must match, got {p.shape} vs {g.shape}")
    return p, g


def ade(pred, gt) -> float:
    """Mean Euclidean distance over all time steps, meters."""
    p, g = _paired(pred, gt)
    return float(np.mean(np.linalg.norm(p - g, axis=1)))


def fde(pred, gt) -> float:
    """Euclidean distance between the final points, meters."""
    p, g = _paired(pred, gt)
    return float(np.linalg.norm(p[-1] - g[-1]))


def min_of_n(preds, gt) -> tuple[float, float]:
    """Best-of-N errors: (min ADE, min FDE), minimized independently."""
    P = np.asarray(preds, dtype=float)
    if P.ndim != 3 or P.shape[0] < 1:
        raise ValueError("Best-of-N needs at least one predicted trajectory")
    G = np.asarray(gt, dtype=float)
    if P.shape[1:] != G.shape:
        raise ValueError(f"trajectory shapes must match, got {P.shape[1:]} vs {G.shape}")
    dists = np.linalg.norm(P - G[None], axis=2)  # (n, T)
    return float(dists.mean(axis=1).min()), float(dists[:, -1].min())


def gain(mc_value: float, other_value: float) -> float:
    """Percent improvement over the MC baseline: 100*(mc - other)/mc."""
    if not mc_value > 0:
        raise ValueError("gain is defined only against a positive MC baseline")
    return 100.0 * (mc_value - other_value) / mc_value


@dataclass(frozen=True)
class KalmanParams:
    """Constant-velocity filter over state (x, y, vx, vy).

    ``init_variance`` is the diffuse prior variance on each state
    component; only the deviation ranking matters downstream, so defaults
    just need the filter to track clean linear motion closely.
    """

    dt: float = 0.4
    process_noise: float = 1e-2
    measurement_noise: float = 1e-2
    init_variance: float = 1e6

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.process_noise <= 0 or self.measurement_noise <= 0:
            raise ValueError("noise variances must be positive")


class CvKalman:
    """Linear Kalman filter for the constant-velocity motion model."""

    def __init__(self, params: KalmanParams, x0, P0):
        dt = params.dt
        self.F = np.array([
            [1.0, 0.0, dt, 0.0],
            [0.0, 1.0, 0.0, dt],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
        self.H = np.array([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ])
        # discrete white-noise acceleration, per axis
        q = params.process_noise
        q11, q12, q22 = q * dt**4 / 4.0, q * dt**3 / 2.0, q * dt**2
        self.Q = np.array([
            [q11, 0.0, q12, 0.0],
            [0.0, q11, 0.0, q12],
            [q12, 0.0, q22, 0.0],
            [0.0, q12, 0.0, q22],
        ])
        self.R = params.measurement_noise * np.eye(2)
        self.x = np.asarray(x0, dtype=float)
        self.P = np.asarray(P0, dtype=float)

    def predict(self):
        """Propagate state one step under the motion model."""
        self.x = self.F @ self.x
        self.P = self.F @ self.P @ self.F.T + self.Q

    def update(self, z):
        """Condition on a position measurement (Joseph-form covariance)."""
        S = self.H @ self.P @ self.H.T + self.R
        K = self.P @ self.H.T @ np.linalg.inv(S)
        self.x = self.x + K @ (np.asarray(z, dtype=float) - self.H @ self.x)
        ImKH = np.eye(4) - K @ self.H
        self.P = ImKH @ self.P @ ImKH.T + K @ self.R @ K.T


def kalman_cv_predict(obs, params: KalmanParams = KalmanParams()) -> np.ndarray:
    """Reference future: filter the 8 observations, then propagate 12 steps.

    The state starts diffuse at the first observed position with zero
    velocity; each later observation is a position measurement.  Returns
    the 12 predicted positions, shape (12, 2).
    """
    obs = np.asarray(obs, dtype=float)
    if obs.ndim != 2 or obs.shape != (8, 2):
        raise ValueError(f"observed trajectory must have shape (8, 2), got {obs.shape}")
    x0 = np.array([obs[0, 0], obs[0, 1], 0.0, 0.0])
    kf = CvKalman(params, x0, params.init_variance * np.eye(4))
    kf.update(obs[0])
    for t in range(1, 8):
        kf.predict()
        kf.update(obs[t])
    preds = np.empty((12, 2))
    for t in range(12):
        kf.predict()
        preds[t] = kf.x[:2]
    return preds


def exception_select(
    scenes: Sequence[Scene],
    params: KalmanParams = KalmanParams(),
    q: float = 0.04,
) -> list[tuple[int, int]]:
    """Agents whose ground truth deviates most from the Kalman reference.

    Ranks every agent by FDE between the filter's 12-step prediction and
    the ground-truth future, descending, ties stable by (scene id, agent
    id), and returns the top ceil(q * count) as (scene_id, agent_id)
    pairs.  Selection is per call; pass one dataset split at a time.
    """
    if not (0.0 < q <= 1.0):
        raise ValueError("selection fraction must be in (0, 1]")
    ranked = []
    for scene in scenes:
        for agent in scene.agents:
            dev = fde(kalman_cv_predict(agent.obs, params), agent.future)
            ranked.append((-dev, scene.scene_id, agent.agent_id))
    if not ranked:
        return []
    ranked.sort()
    keep = math.ceil(q * len(ranked))
    return [(sid, aid) for _, sid, aid in ranked[:keep]]


@dataclass(frozen=True)
class EvalRow:
    dataset: str
    sampler: str
    subset: str
    min_ade: float
    min_fde: float
    gain_ade_pct: float | None
    gain_fde_pct: float | None


@dataclass(frozen=True)
class EvalReport:
    """Benchmark table: one row per (dataset, subset, sampler).

    ``config`` is an optional JSON-serializable echo of the run
    configuration, carried through to emitted reports.
    """

    rows: tuple[EvalRow, ...]
    repeats: int
    config: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")


def _row_gains(mc_vals, a, f):
    if mc_vals is None:
        return None, None
    mc_a, mc_f = mc_vals
    ga = gain(mc_a, a) if mc_a > 0 else None
    gf = gain(mc_f, f) if mc_f > 0 else None
    return ga, gf


def evaluate(
    corpus,
    generator_spec: GeneratorSpec,
    samplers,
    repeats: int = 10,
    subsets: Mapping[str, Callable[[str, Scene, Agent], bool]] | None = None,
) -> EvalReport:
    """Run every sampler over the corpus and tabulate Best-of-N metrics.

    Parameters
    ----------
    corpus : mapping of split name -> scenes, or a plain scene sequence
        A plain sequence is treated as the single split "all".  With more
        than one split an AVG row set (unweighted mean over splits) is
        appended.
    generator_spec : GeneratorSpec
    samplers : mapping of label -> SamplerConfig, or a config sequence
        Sequences are labeled by sampler kind (duplicates rejected).
        Gains are computed against the first sampler of kind "mc"; rows
        have empty gains when there is none.
    repeats : int
        Sessions per agent per sampler; repeat r derives its seed from
        (config seed, r) and metrics are averaged over repeats.
    subsets : mapping of label -> predicate(split, scene, agent), optional
        Extra report rows restricted to matching agents, alongside the
        full set.  Subsets that match no agent in a split are skipped.

    Sessions are mutually independent (safe to parallelize externally);
    this implementation runs them sequentially in a fixed order, and the
    result is deterministic given seeds, corpus, and configs.
    """
    from .samplers import LatentPrior, mix_seed, run_session

    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if isinstance(corpus, Mapping):
        splits = {str(k): list(v) for k, v in corpus.items()}
    else:
        splits = {"all": list(corpus)}
    if isinstance(samplers, Mapping):
        sampler_map = dict(samplers)
    else:
        sampler_map = {}
        for cfg in samplers:
            if cfg.kind in sampler_map:
                raise ValueError(
                    f"duplicate sampler kind {cfg.kind!r}; pass a label mapping instead"
                )
            sampler_map[cfg.kind] = cfg
    if not sampler_map:
        raise ValueError("at least one sampler is required")

    generate = make_generator(generator_spec)
    prior = LatentPrior(dim=generator_spec.latent_dim)
    subsets = dict(subsets or {})
    mc_label = next((lbl for lbl, c in sampler_map.items() if c.kind == "mc"), None)

    rows: list[EvalRow] = []
    # (subset, label) -> list of per-split (ade, fde), for the AVG block
    avg_acc: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for split_name, scenes in splits.items():
        pairs = [(sc, ag) for sc in scenes for ag in sc.agents]
        if not pairs:
            continue
        masks = {"full": np.ones(len(pairs), dtype=bool)}
        for sub_label, predicate in subsets.items():
            masks[sub_label] = np.array(
                [bool(predicate(split_name, sc, ag)) for sc, ag in pairs]
            )
        per_label: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for label, cfg in sampler_map.items():
            ade_acc = np.zeros(len(pairs))
            fde_acc = np.zeros(len(pairs))
            for r in range(repeats):
                cfg_r = replace(cfg, seed=mix_seed(cfg.seed, r))
                for i, (sc, ag) in enumerate(pairs):
                    result = run_session(sc, ag, generate, prior, cfg_r)
                    best_ade, best_fde = min_of_n(result.trajectories, ag.future)
                    ade_acc[i] += best_ade
                    fde_acc[i] += best_fde
            per_label[label] = (ade_acc / repeats, fde_acc / repeats)
        for subset_label, mask in masks.items():
            if not mask.any():
                continue
            mc_vals = None
            if mc_label is not None:
                mc_a, mc_f = per_label[mc_label]
                mc_vals = (float(mc_a[mask].mean()), float(mc_f[mask].mean()))
            for label in sampler_map:
                a = float(per_label[label][0][mask].mean())
                f = float(per_label[label][1][mask].mean())
                ga, gf = _row_gains(mc_vals, a, f)
                rows.append(EvalRow(split_name, label, subset_label, a, f, ga, gf))
                avg_acc.setdefault((subset_label, label), []).append((a, f))

    if len(splits) > 1:
        for subset_label in ["full", *subsets]:
            mc_vals = None
            if mc_label is not None and (subset_label, mc_label) in avg_acc:
                vals = avg_acc[(subset_label, mc_label)]
                mc_vals = (
                    float(np.mean([v[0] for v in vals])),
                    float(np.mean([v[1] for v in vals])),
                )
            for label in sampler_map:
                vals = avg_acc.get((subset_label, label))
                if not vals:
                    continue
                a = float(np.mean([v[0] for v in vals]))
                f = float(np.mean([v[1] for v in vals]))
                ga, gf = _row_gains(mc_vals, a, f)
                rows.append(EvalRow("AVG", label, subset_label, a, f, ga, gf))

    return EvalReport(rows=tuple(rows), repeats=repeats)
