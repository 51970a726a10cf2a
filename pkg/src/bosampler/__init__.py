"""Bayesian-optimized latent sampling for stochastic trajectory predictors.

Stochastic predictors turn a latent draw into one plausible future; at
small sampling budgets, i.i.d. draws rarely land on low-probability
maneuvers.  This package treats sampling as sequential optimization: a
Gaussian-process surrogate over latent codes, scored against the
most-likely trajectory, steers later draws toward under-explored regions.
Monte Carlo and quasi-Monte Carlo baselines, synthetic generators with
analytic ground truth, the Best-of-N evaluation protocol, and a benchmark
CLI round out the library.
"""

from .acquisition import (
    AcquisitionConfig,
    PseudoScorer,
    maximize_acquisition,
    pseudo_score,
    ucb,
)
from .generators import (
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
from .gp import (
    GPState,
    KernelConfig,
    PosteriorMoment,
    ScoredSample,
    fit_gp,
    kernel_eval,
    posterior,
    posterior_batch,
)
from .metrics import (
    EvalReport,
    EvalRow,
    KalmanParams,
    ade,
    evaluate,
    exception_select,
    fde,
    gain,
    kalman_cv_predict,
    min_of_n,
)
from .samplers import (
    LatentPrior,
    SamplerConfig,
    SessionResult,
    mc_draw,
    mix_seed,
    qmc_draw,
    run_session,
    seeded_rng,
)
from .sobol import inverse_normal_cdf, sobol_points

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig",
    "Agent",
    "DT",
    "EvalReport",
    "EvalRow",
    "GPState",
    "GeneratorSpec",
    "KalmanParams",
    "KernelConfig",
    "LatentPrior",
    "OBS_LEN",
    "PRED_LEN",
    "PosteriorMoment",
    "PseudoScorer",
    "SamplerConfig",
    "Scene",
    "ScoredSample",
    "SessionResult",
    "ade",
    "cv_generate",
    "endpoint_generate",
    "evaluate",
    "exception_select",
    "fde",
    "fit_gp",
    "gain",
    "inverse_normal_cdf",
    "kalman_cv_predict",
    "kernel_eval",
    "make_generator",
    "maximize_acquisition",
    "mc_draw",
    "min_of_n",
    "mix_seed",
    "mixture_generate",
    "posterior",
    "posterior_batch",
    "pseudo_score",
    "qmc_draw",
    "run_session",
    "seeded_rng",
    "sobol_points",
    "synthetic_corpus",
    "true_mode_of",
    "ucb",
]
