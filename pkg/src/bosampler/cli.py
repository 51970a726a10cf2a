"""Command-line driver.

Subcommands: ``bench`` runs the configured benchmark end to end and emits
the report files; ``sample`` runs a single deterministic session on a
built-in demo scene and prints it as JSON; ``exception-split`` selects the
most Kalman-deviated agents from a trajectory file; ``histogram`` tabulates
how each sampler populates the first latent coordinate.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from importlib import resources

import numpy as np

from .acquisition import AcquisitionConfig
from .dataio import (
    build_corpus,
    emit_histogram,
    emit_report,
    load_bench_config,
    parse_trajectories,
    window_scenes,
)
from .generators import GENERATOR_KINDS, OBS_LEN, PRED_LEN, Agent, GeneratorSpec, Scene
from .metrics import evaluate, exception_select
from .samplers import SAMPLER_KINDS, LatentPrior, SamplerConfig, run_session

__all__ = ["main", "demo_config_path", "demo_scene"]


def demo_config_path() -> str:
    """Path of the packaged synthetic benchmark config."""
    return str(resources.files("bosampler").joinpath("configs/synthetic_demo.json"))


def demo_scene(scene_id: int = 0) -> Scene:
    """A canonical single-agent scene: eastward walk at 1.25 m/s."""
    t = np.arange(OBS_LEN, dtype=float)[:, None]
    obs = np.hstack([0.5 * t, np.zeros_like(t)])
    k = np.arange(1, PRED_LEN + 1, dtype=float)[:, None]
    future = obs[-1] + np.hstack([0.5 * k, np.zeros_like(k)])
    return Scene(scene_id=scene_id, agents=(Agent(agent_id=0, obs=obs, future=future),))


class _ArgumentError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(self, message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bosampler", description="Latent-sampling benchmark driver")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run a configured benchmark and emit reports")
    bench.add_argument("--config", required=True, help="JSON benchmark config")
    bench.add_argument("--seed", type=int, default=None, help="override the config seed")
    bench.add_argument("--csv", default=None, help="override the CSV output path")
    bench.add_argument("--json", default=None, help="override the JSON output path")

    sample = sub.add_parser("sample", help="run one session on the demo scene, print JSON")
    sample.add_argument("--generator", choices=GENERATOR_KINDS, default="cv_gauss")
    sample.add_argument("--sampler", choices=SAMPLER_KINDS, default="mc")
    sample.add_argument("--n", type=int, default=20, help="samples per session")
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--latent-dim", type=int, default=2)
    sample.add_argument("--warmup", type=int, default=None)
    sample.add_argument("--beta", type=float, default=None, help="UCB exploration weight")

    exc = sub.add_parser("exception-split", help="select most-deviated agents from a corpus")
    exc.add_argument("--input", required=True, help="trajectory file (frame ped_id x y)")
    exc.add_argument("--q", type=float, default=0.04, help="selection fraction")
    exc.add_argument("--stride", type=int, default=1)
    exc.add_argument("--frame-step", type=int, default=None)
    exc.add_argument("--output", default=None, help="write ids here instead of stdout")

    hist = sub.add_parser("histogram", help="first-latent frequency table per sampler")
    hist.add_argument("--output", default="histogram.csv")
    hist.add_argument("--samplers", default="mc,qmc,bo", help="comma-separated kinds")
    hist.add_argument("--sessions", type=int, default=200)
    hist.add_argument("--n", type=int, default=20, help="samples per session")
    hist.add_argument("--bins", type=int, default=50)
    hist.add_argument("--seed", type=int, default=0)
    hist.add_argument("--generator", choices=GENERATOR_KINDS, default="cv_gauss")
    hist.add_argument("--latent-dim", type=int, default=2)
    return parser


def _cmd_bench(args) -> int:
    cfg = load_bench_config(args.config, seed_override=args.seed)
    corpus = build_corpus(cfg)
    selected = {
        split: set(exception_select(scenes, q=cfg.exception_q))
        for split, scenes in corpus.items()
    }
    subset_label = f"exception-{100.0 * cfg.exception_q:g}%"
    subsets = {
        subset_label: lambda split, sc, ag: (sc.scene_id, ag.agent_id) in selected[split]
    }
    report = evaluate(
        corpus, cfg.generator, cfg.samplers, repeats=cfg.repeats, subsets=subsets
    )
    echo = {
        "seed": cfg.seed,
        "repeats": cfg.repeats,
        "exception_q": cfg.exception_q,
        "generator": asdict(cfg.generator),
        "samplers": {label: asdict(s) for label, s in cfg.samplers.items()},
        "corpus": cfg.corpus,
    }
    report = replace(report, config=echo)
    csv_path = args.csv or cfg.csv_path or "report.csv"
    json_path = args.json or cfg.json_path or "report.json"
    emit_report(report, csv_path=csv_path, json_path=json_path)
    print(f"wrote {csv_path} and {json_path} ({len(report.rows)} rows)")
    return 0


def _cmd_sample(args) -> int:
    spec = GeneratorSpec(kind=args.generator, latent_dim=args.latent_dim)
    acquisition = AcquisitionConfig() if args.beta is None else AcquisitionConfig(beta=args.beta)
    cfg = SamplerConfig(
        kind=args.sampler,
        n_samples=args.n,
        warmup=args.warmup,
        seed=args.seed,
        acquisition=acquisition,
    )
    scene = demo_scene()
    result = run_session(scene, scene.agents[0], spec, LatentPrior(dim=spec.latent_dim), cfg)
    payload = {
        "generator": args.generator,
        "sampler": args.sampler,
        "seed": args.seed,
        "latents": result.latents.tolist(),
        "scores": result.scores.tolist(),
        "trajectories": result.trajectories.tolist(),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_exception_split(args) -> int:
    try:
        with open(args.input) as fh:
            records = parse_trajectories(fh)
    except OSError as e:
        raise OSError(f"cannot read corpus file {args.input}: {e}") from e
    scenes = window_scenes(records, stride=args.stride, frame_step=args.frame_step)
    pairs = exception_select(scenes, q=args.q)
    lines = "".join(f"{sid} {aid}\n" for sid, aid in pairs)
    if args.output is None:
        sys.stdout.write(lines)
    else:
        try:
            with open(args.output, "w") as fh:
                fh.write(lines)
        except OSError as e:
            raise OSError(f"cannot write selection to {args.output}: {e}") from e
        print(f"wrote {len(pairs)} of {sum(len(s.agents) for s in scenes)} agents to {args.output}")
    return 0


def _cmd_histogram(args) -> int:
    kinds = [k.strip() for k in args.samplers.split(",") if k.strip()]
    for kind in kinds:
        if kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind: {kind!r}")
    if not kinds:
        raise ValueError("no sampler kinds given")
    if args.sessions < 1:
        raise ValueError("sessions must be positive")
    spec = GeneratorSpec(kind=args.generator, latent_dim=args.latent_dim)
    prior = LatentPrior(dim=spec.latent_dim)
    sessions = []
    for kind in kinds:
        cfg = SamplerConfig(kind=kind, n_samples=args.n, seed=args.seed)
        for i in range(args.sessions):
            scene = demo_scene(scene_id=i)
            sessions.append(run_session(scene, scene.agents[0], spec, prior, cfg))
    emit_histogram(sessions, args.bins, args.output)
    print(f"wrote {args.output} ({len(sessions)} sessions, {args.bins} bins)")
    return 0


_COMMANDS = {
    "bench": _cmd_bench,
    "sample": _cmd_sample,
    "exception-split": _cmd_exception_split,
    "histogram": _cmd_histogram,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as e:
        e.parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
