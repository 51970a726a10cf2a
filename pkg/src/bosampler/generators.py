"""Synthetic stochastic trajectory generators with analytic structure.

Each generator maps (observed history, latent code) to a 12-step future,
deterministically, so every distributional claim about a sampler can be
checked against closed-form geometry instead of a trained network.  Three
families cover the common predictor archetypes:

- ``cv_gauss``: constant velocity with Gaussian heading/speed perturbation.
- ``turn_mixture``: discrete maneuver modes (straight / left / right /
  U-turn) selected by thresholding the first latent coordinate against
  prior quantiles, so mode probabilities are exact by construction.
- ``endpoint_cond``: endpoint-conditioned, latent shifts the endpoint and
  the path interpolates linearly.

Trajectories are (T, 2) float arrays in meters at 0.4 s per step; observed
histories have 8 points, futures 12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .sobol import inverse_normal_cdf

__all__ = [
    "DT",
    "OBS_LEN",
    "PRED_LEN",
    "GENERATOR_KINDS",
    "MODE_ORDER",
    "Trajectory",
    "Agent",
    "Scene",
    "GeneratorSpec",
    "cv_generate",
    "mixture_generate",
    "endpoint_generate",
    "make_generator",
    "mode_of_latent",
    "mode_quantile_bands",
    "true_mode_of",
    "synthetic_corpus",
]

DT = 0.4
OBS_LEN = 8
PRED_LEN = 12

GENERATOR_KINDS = ("cv_gauss", "turn_mixture", "endpoint_cond")

# canonical maneuver order; ties in classification resolve to the earliest
MODE_ORDER = ("straight", "left", "right", "uturn")

Trajectory = np.ndarray


def _check_traj(points, length: int, label: str) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape != (length, 2):
        raise ValueError(f"{label} must have shape ({length}, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{label} has non-finite coordinates")
    return pts


@dataclass(frozen=True)
class Agent:
    """One pedestrian: 8 observed points and the 12-point ground-truth future."""

    agent_id: int
    obs: np.ndarray
    future: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "obs", _check_traj(self.obs, OBS_LEN, "observed trajectory"))
        object.__setattr__(self, "future", _check_traj(self.future, PRED_LEN, "future trajectory"))


@dataclass(frozen=True)
class Scene:
    scene_id: int
    agents: tuple[Agent, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if len(self.agents) < 1:
            raise ValueError("a scene needs at least one agent")


def _normalized_mode_probs(probs: Mapping[str, float]) -> dict[str, float]:
    out = {}
    for mode, p in probs.items():
        if mode not in MODE_ORDER:
            raise ValueError(f"unknown maneuver mode: {mode!r}")
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"mode probability out of range: {mode}={p}")
        out[mode] = float(p)
    total = sum(out.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"mode probabilities must sum to 1, got {total}")
    return out


@dataclass(frozen=True)
class GeneratorSpec:
    """Configuration for a synthetic generator.

    ``latent_dim`` may exceed the coordinates a kind consumes; surplus
    coordinates are inert, which lets the same generator exercise
    high-dimensional latent spaces.
    """

    kind: str
    latent_dim: int = 2
    heading_gain: float = 0.15   # rad per latent unit (cv_gauss)
    speed_gain: float = 0.2      # log-speed per latent unit (cv_gauss)
    endpoint_gain: float = 1.0   # meters per latent unit (endpoint_cond)
    turn_angle: float = math.pi / 2.0
    jitter_gain: float = 0.02    # m/s drift per latent unit (turn_mixture)
    mode_probs: Mapping[str, float] = field(
        default_factory=lambda: {"straight": 0.90, "left": 0.05, "right": 0.05}
    )

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind: {self.kind!r}")
        min_dim = 1 if self.kind == "turn_mixture" else 2
        if self.latent_dim < min_dim:
            raise ValueError(f"{self.kind} requires latent_dim >= {min_dim}")
        object.__setattr__(self, "mode_probs", _normalized_mode_probs(self.mode_probs))


def _as_latent(z, spec: GeneratorSpec) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (spec.latent_dim,):
        raise ValueError(
            f"latent code must have shape ({spec.latent_dim},), got {z.shape}"
        )
    if not np.all(np.isfinite(z)):
        raise ValueError("latent code has non-finite coordinates")
    return z


def _last_motion(X: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Anchor point, speed and heading from the final observed step."""
    p0 = X[-1]
    step = X[-1] - X[-2]
    speed = float(np.hypot(step[0], step[1])) / DT
    heading = math.atan2(step[1], step[0]) if speed > 0.0 else 0.0
    return p0, speed, heading


def _arc_future(p0: np.ndarray, speed: float, heading: float, total_turn: float) -> np.ndarray:
    """Constant-speed path whose heading sweeps ``total_turn`` over 12 steps."""
    k = np.arange(1, PRED_LEN + 1)
    headings = heading + total_turn * k / PRED_LEN
    steps = (speed * DT) * np.stack([np.cos(headings), np.sin(headings)], axis=1)
    return p0 + np.cumsum(steps, axis=0)


def cv_generate(X: Trajectory, z, spec: GeneratorSpec) -> Trajectory:
    """Constant-velocity extrapolation, heading and speed perturbed by z.

    Heading shifts by ``heading_gain * z[0]`` radians, speed scales by
    ``exp(speed_gain * z[1])``.  A stationary history stays put for any z.
    """
    X = _check_traj(X, OBS_LEN, "observed trajectory")
    z = _as_latent(z, spec)
    p0, speed, heading = _last_motion(X)
    if speed == 0.0:
        return np.tile(p0, (PRED_LEN, 1))
    heading = heading + spec.heading_gain * z[0]
    speed = speed * math.exp(spec.speed_gain * z[1])
    return _arc_future(p0, speed, heading, 0.0)


def mode_quantile_bands(probs: Mapping[str, float]) -> dict[str, tuple[tuple[float, float], ...]]:
    """Partition of the unit interval (first-latent quantile space) by mode.

    Straight occupies the center band, left the upper tail, right the lower
    tail, U-turn the two outermost slivers (half its mass per side).  Bands
    of zero-probability modes are empty.
    """
    probs = _normalized_mode_probs(probs)
    p_l = probs.get("left", 0.0)
    p_r = probs.get("right", 0.0)
    p_u = probs.get("uturn", 0.0)
    bands: dict[str, tuple[tuple[float, float], ...]] = {}
    if p_u > 0.0:
        bands["uturn"] = ((0.0, p_u / 2.0), (1.0 - p_u / 2.0, 1.0))
    if p_l > 0.0:
        bands["left"] = ((1.0 - p_u / 2.0 - p_l, 1.0 - p_u / 2.0),)
    if p_r > 0.0:
        bands["right"] = ((p_u / 2.0, p_u / 2.0 + p_r),)
    p_s = probs.get("straight", 0.0)
    if p_s > 0.0:
        bands["straight"] = ((p_u / 2.0 + p_r, 1.0 - p_u / 2.0 - p_l),)
    return bands


def mode_of_latent(z1: float, probs: Mapping[str, float]) -> str:
    """Maneuver mode selected by the first latent coordinate.

    Thresholds are standard-normal quantiles of the mode table, so the
    prior mass of each mode equals its table entry exactly.
    """
    probs = _normalized_mode_probs(probs)
    p_l = probs.get("left", 0.0)
    p_r = probs.get("right", 0.0)
    p_u = probs.get("uturn", 0.0)
    if p_u > 0.0 and (
        z1 > inverse_normal_cdf(1.0 - p_u / 2.0) or z1 < inverse_normal_cdf(p_u / 2.0)
    ):
        return "uturn"
    # a band with no probability above/below it has an infinite threshold
    if p_l > 0.0:
        q = 1.0 - p_u / 2.0 - p_l
        if q <= 0.0 or z1 > inverse_normal_cdf(q):
            return "left"
    if p_r > 0.0:
        q = p_u / 2.0 + p_r
        if q >= 1.0 or z1 < inverse_normal_cdf(q):
            return "right"
    if probs.get("straight", 0.0) <= 0.0:
        # degenerate table without a straight band: fall back to the
        # highest-probability mode
        return max(probs, key=lambda m: (probs[m], -MODE_ORDER.index(m)))
    return "straight"


_MODE_TURNS = {"straight": 0.0, "left": 1.0, "right": -1.0, "uturn": 2.0}


def mixture_generate(X: Trajectory, z, spec: GeneratorSpec) -> Trajectory:
    """Maneuver-mode future: z[0] picks the mode, z[1:3] add a slow drift.

    Left/right sweep ``turn_angle`` over the horizon (U-turn twice that);
    drift displaces point k by ``jitter_gain * k * DT * (z[1], z[2])``.
    Missing drift coordinates (latent_dim < 3) are treated as zero.
    """
    X = _check_traj(X, OBS_LEN, "observed trajectory")
    z = _as_latent(z, spec)
    p0, speed, heading = _last_motion(X)
    if speed == 0.0:
        return np.tile(p0, (PRED_LEN, 1))
    mode = mode_of_latent(float(z[0]), spec.mode_probs)
    future = _arc_future(p0, speed, heading, _MODE_TURNS[mode] * spec.turn_angle)
    drift = np.zeros(2)
    if spec.latent_dim > 1:
        drift[0] = z[1]
    if spec.latent_dim > 2:
        drift[1] = z[2]
    if drift[0] != 0.0 or drift[1] != 0.0:
        k = np.arange(1, PRED_LEN + 1, dtype=float)
        future = future + (spec.jitter_gain * DT) * k[:, None] * drift[None, :]
    return future


def endpoint_generate(X: Trajectory, z, spec: GeneratorSpec) -> Trajectory:
    """Endpoint-conditioned future: latent shifts the constant-velocity
    endpoint by ``endpoint_gain * (z[0], z[1])``; the path interpolates
    linearly from the last observed point.
    """
    X = _check_traj(X, OBS_LEN, "observed trajectory")
    z = _as_latent(z, spec)
    p0 = X[-1]
    v = (X[-1] - X[-2]) / DT
    endpoint = p0 + PRED_LEN * DT * v + spec.endpoint_gain * z[:2]
    frac = np.arange(1, PRED_LEN + 1, dtype=float)[:, None] / PRED_LEN
    return p0 + frac * (endpoint - p0)


_GENERATE = {
    "cv_gauss": cv_generate,
    "turn_mixture": mixture_generate,
    "endpoint_cond": endpoint_generate,
}


def make_generator(spec: GeneratorSpec) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Bind a spec into a plain ``(X, z) -> future`` callable."""
    fn = _GENERATE[spec.kind]
    def generate(X, z):
        return fn(X, z, spec)
    generate.spec = spec
    return generate


def true_mode_of(scene: Scene, agent_id: int, spec: GeneratorSpec) -> tuple[str, float]:
    """Ground-truth maneuver mode of an agent's future, with its prior mass.

    For each mode, regenerates the drift-free template from the agent's own
    history and measures the residual after projecting out the (linear in
    time) drift component; the mode this generator actually produced has
    residual zero, so the label is exact for generated futures regardless
    of drift magnitude.  Ties resolve to the earliest mode in canonical
    order.
    """
    if spec.kind != "turn_mixture":
        raise ValueError(f"mode labels require a turn_mixture generator, got {spec.kind!r}")
    agent = next((a for a in scene.agents if a.agent_id == agent_id), None)
    if agent is None:
        raise ValueError(f"scene {scene.scene_id} has no agent {agent_id}")
    p0, speed, heading = _last_motion(agent.obs)
    # drift basis: displacement grows linearly with step index, per axis
    u = np.arange(1, PRED_LEN + 1, dtype=float)
    uu = float(u @ u)
    modes = [m for m in MODE_ORDER if spec.mode_probs.get(m, 0.0) > 0.0]
    best = modes[0]
    best_err = math.inf
    for mode in modes:
        template = _arc_future(p0, speed, heading, _MODE_TURNS[mode] * spec.turn_angle)
        resid = agent.future - template
        if spec.jitter_gain > 0.0 and spec.latent_dim > 1:
            resid = resid - np.outer(u, (u @ resid) / uu)
        err = float(np.mean(np.linalg.norm(resid, axis=1)))
        if err < best_err - 1e-12:
            best, best_err = mode, err
    return best, spec.mode_probs[best]


def _forced_first_latent(mode: str, probs: Mapping[str, float], rng: np.random.Generator) -> float:
    """Sample z1 conditioned on a maneuver mode (truncated to its quantile band)."""
    bands = mode_quantile_bands(probs)
    if mode not in bands:
        raise ValueError(f"mode {mode!r} has zero probability in the table")
    widths = np.array([hi - lo for lo, hi in bands[mode]])
    u = rng.uniform(0.0, widths.sum())
    q = bands[mode][-1][1] - 1e-12
    for (lo, hi), width in zip(bands[mode], widths):
        if u < width:
            q = lo + u
            break
        u -= width
    return float(inverse_normal_cdf(min(max(q, 1e-15), 1.0 - 1e-15)))


def synthetic_corpus(
    spec: GeneratorSpec,
    n_scenes: int,
    agents_per_scene: int = 1,
    seed: int = 0,
    speed_range: tuple[float, float] = (0.5, 2.0),
    obs_noise: float = 0.0,
    mode_fractions: Mapping[str, float] | None = None,
) -> list[Scene]:
    """Scenes with straight-walking histories and generator-drawn futures.

    Each agent walks a constant-velocity 8-step history (uniform random
    start, heading, and speed), and its ground-truth future is the
    generator applied to a standard-normal latent draw, so the corpus
    follows the generator's own output distribution.  ``mode_fractions``
    (turn_mixture only) instead fixes per-mode frequencies by drawing the
    first latent coordinate from the mode's quantile band.  ``obs_noise``
    adds Gaussian position noise to the observed history only.
    """
    if n_scenes < 0:
        raise ValueError("n_scenes must be nonnegative")
    if agents_per_scene < 1:
        raise ValueError("agents_per_scene must be positive")
    if speed_range[0] <= 0 or speed_range[1] < speed_range[0]:
        raise ValueError("speed_range must be 0 < lo <= hi")
    if mode_fractions is not None:
        if spec.kind != "turn_mixture":
            raise ValueError("mode_fractions requires a turn_mixture generator")
        fractions = _normalized_mode_probs(mode_fractions)
    generate = make_generator(spec)
    rng = np.random.Generator(
        np.random.SFC64(np.random.SeedSequence([seed & (2**64 - 1), 2**32]))
    )
    scenes = []
    for scene_id in range(n_scenes):
        agents = []
        for agent_id in range(agents_per_scene):
            start = rng.uniform(-10.0, 10.0, size=2)
            heading = rng.uniform(0.0, 2.0 * math.pi)
            speed = rng.uniform(*speed_range)
            v = speed * np.array([math.cos(heading), math.sin(heading)])
            t = np.arange(OBS_LEN, dtype=float)[:, None]
            obs = start + t * DT * v
            z = rng.standard_normal(spec.latent_dim)
            if mode_fractions is not None:
                mode = rng.choice(
                    [m for m in MODE_ORDER if m in fractions],
                    p=[fractions[m] for m in MODE_ORDER if m in fractions],
                )
                z[0] = _forced_first_latent(mode, spec.mode_probs, rng)
            future = generate(obs, z)
            if obs_noise > 0.0:
                obs = obs + rng.normal(0.0, obs_noise, size=obs.shape)
            agents.append(Agent(agent_id=agent_id, obs=obs, future=future))
        scenes.append(Scene(scene_id=scene_id, agents=tuple(agents)))
    return scenes
