"""Text-corpus ingestion, scene windowing, config loading, and report output.

Trajectory files use the plain text format common to the public pedestrian
datasets: one record per line, ``frame ped_id x y``, any whitespace as
separator, fixed column order, blank lines ignored.  Frame numbering may be
subsampled (e.g. every 10th frame); the windowing step infers the frame
step unless one is given.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .acquisition import AcquisitionConfig
from .generators import Agent, GeneratorSpec, Scene, synthetic_corpus
from .metrics import EvalReport, EvalRow
from .samplers import SamplerConfig, SessionResult

__all__ = [
    "RawRecord",
    "parse_trajectories",
    "serialize_records",
    "window_scenes",
    "emit_report",
    "load_report",
    "emit_histogram",
    "BenchConfig",
    "load_bench_config",
    "build_corpus",
]


class RawRecord(NamedTuple):
    frame: int
    ped_id: int
    x: float
    y: float


def _int_field(token: str, line_no: int, name: str) -> int:
    # files in the wild write integer columns as "10.0"; accept those
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"line {line_no}: invalid {name}") from None
    if not math.isfinite(value) or value != int(value):
        raise ValueError(f"line {line_no}: invalid {name}")
    return int(value)


def parse_trajectories(source) -> list[RawRecord]:
    """Parse ``frame ped_id x y`` lines into records, preserving file order.

    ``source`` is a string, an open text file, or an iterable of lines.
    Malformed input raises ValueError naming the 1-based line number.
    """
    if isinstance(source, str):
        lines: Iterable[str] = io.StringIO(source)
    else:
        lines = source
    records = []
    for line_no, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 4:
            raise ValueError(f"line {line_no}: expected 4 fields, got {len(fields)}")
        frame = _int_field(fields[0], line_no, "frame")
        if frame < 0:
            raise ValueError(f"line {line_no}: negative frame")
        ped_id = _int_field(fields[1], line_no, "pedestrian id")
        coords = []
        for token in fields[2:]:
            try:
                value = float(token)
            except ValueError:
                raise ValueError(f"line {line_no}: invalid coordinate") from None
            if not math.isfinite(value):
                raise ValueError(f"line {line_no}: non-finite coordinate")
            coords.append(value)
        records.append(RawRecord(frame, ped_id, coords[0], coords[1]))
    return records


def serialize_records(records: Sequence[RawRecord]) -> str:
    """Inverse of parse_trajectories: one ``frame ped_id x y`` line per record."""
    return "".join(f"{r.frame} {r.ped_id} {r.x!r} {r.y!r}\n" for r in records)


def _infer_frame_step(by_ped: Mapping[int, list[RawRecord]]) -> int:
    step = None
    for recs in by_ped.values():
        for a, b in zip(recs, recs[1:]):
            diff = b.frame - a.frame
            if diff > 0 and (step is None or diff < step):
                step = diff
    return step or 1


def window_scenes(
    records: Sequence[RawRecord],
    obs_len: int = 8,
    pred_len: int = 12,
    stride: int = 1,
    frame_step: int | None = None,
) -> list[Scene]:
    """Cut per-pedestrian frame runs into observation/prediction windows.

    Records are grouped by pedestrian and sorted by frame (duplicate
    frames keep the first record).  A run is a maximal stretch of frames
    spaced exactly ``frame_step`` apart (inferred as the smallest positive
    frame difference when not given); each run yields windows of
    ``obs_len + pred_len`` frames, advancing ``stride`` frames between
    window starts.  Pedestrians whose windows start at the same frame form
    one Scene, identified by that frame.
    """
    if obs_len < 2 or pred_len < 1:
        raise ValueError("window lengths must satisfy obs_len >= 2, pred_len >= 1")
    if stride < 1:
        raise ValueError("stride must be positive")
    total = obs_len + pred_len
    by_ped: dict[int, list[RawRecord]] = {}
    for rec in sorted(records, key=lambda r: (r.ped_id, r.frame)):
        run = by_ped.setdefault(rec.ped_id, [])
        if run and run[-1].frame == rec.frame:
            continue
        run.append(rec)
    if frame_step is None:
        frame_step = _infer_frame_step(by_ped)
    elif frame_step < 1:
        raise ValueError("frame_step must be positive")

    scenes: dict[int, list[Agent]] = {}
    for ped_id, recs in by_ped.items():
        run_start = 0
        for i in range(1, len(recs) + 1):
            if i < len(recs) and recs[i].frame - recs[i - 1].frame == frame_step:
                continue
            run = recs[run_start:i]
            run_start = i
            for j in range(0, len(run) - total + 1, stride):
                window = run[j:j + total]
                points = np.array([(r.x, r.y) for r in window])
                agent = Agent(
                    agent_id=ped_id,
                    obs=points[:obs_len],
                    future=points[obs_len:],
                )
                scenes.setdefault(window[0].frame, []).append(agent)
    return [
        Scene(scene_id=start, agents=tuple(sorted(agents, key=lambda a: a.agent_id)))
        for start, agents in sorted(scenes.items())
    ]


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def emit_report(report: EvalReport, csv_path=None, json_path=None) -> None:
    """Write the benchmark table as CSV (display rounding, 4 decimals) and
    as a JSON mirror carrying full-precision values plus the run config."""
    if csv_path is not None:
        try:
            with open(csv_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow([
                    "dataset", "sampler", "subset", "minADE", "minFDE",
                    "gain_ade_pct", "gain_fde_pct", "repeats",
                ])
                for row in report.rows:
                    writer.writerow([
                        row.dataset, row.sampler, row.subset,
                        _fmt(row.min_ade), _fmt(row.min_fde),
                        _fmt(row.gain_ade_pct), _fmt(row.gain_fde_pct),
                        report.repeats,
                    ])
        except OSError as e:
            raise OSError(f"cannot write report to {csv_path}: {e}") from e
    if json_path is not None:
        payload = {
            "repeats": report.repeats,
            "config": report.config,
            "rows": [asdict(row) for row in report.rows],
        }
        try:
            with open(json_path, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as e:
            raise OSError(f"cannot write report to {json_path}: {e}") from e


def load_report(json_path) -> EvalReport:
    """Read back a JSON report emitted by emit_report."""
    try:
        with open(json_path) as fh:
            payload = json.load(fh)
    except OSError as e:
        raise OSError(f"cannot read report from {json_path}: {e}") from e
    rows = tuple(EvalRow(**row) for row in payload["rows"])
    return EvalReport(rows=rows, repeats=payload["repeats"], config=payload["config"])


def emit_histogram(sessions: Sequence[SessionResult], bins: int, path) -> None:
    """Per-sampler-kind frequency table of the first latent coordinate.

    Bin edges are shared across kinds (computed over all sessions), so the
    emitted CSV compares how each sampler populates the latent axis.
    """
    if not sessions:
        raise ValueError("histogram needs at least one session")
    if bins < 1:
        raise ValueError("bins must be positive")
    dims = {s.latents.shape[1] for s in sessions}
    if len(dims) != 1:
        raise ValueError("sessions must share a latent dimension")
    by_kind: dict[str, list[np.ndarray]] = {}
    for s in sessions:
        by_kind.setdefault(s.sampler.kind, []).append(s.latents[:, 0])
    all_values = np.concatenate([v for vs in by_kind.values() for v in vs])
    edges = np.histogram_bin_edges(all_values, bins=bins)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_left", "bin_right", "sampler", "count"])
            for kind, chunks in by_kind.items():
                counts, _ = np.histogram(np.concatenate(chunks), bins=edges)
                for left, right, count in zip(edges[:-1], edges[1:], counts):
                    writer.writerow([repr(float(left)), repr(float(right)), kind, int(count)])
    except OSError as e:
        raise OSError(f"cannot write histogram to {path}: {e}") from e


@dataclass(frozen=True)
class BenchConfig:
    """Everything one benchmark run needs, loadable from JSON."""

    generator: GeneratorSpec
    samplers: dict[str, SamplerConfig]
    corpus: dict
    repeats: int = 10
    exception_q: float = 0.04
    seed: int = 0
    csv_path: str | None = None
    json_path: str | None = None

    def __post_init__(self):
        if not self.samplers:
            raise ValueError("config needs at least one sampler")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if not (0.0 < self.exception_q <= 1.0):
            raise ValueError("exception_q must be in (0, 1]")


_GENERATOR_KEYS = {
    "kind", "latent_dim", "heading_gain", "speed_gain", "endpoint_gain",
    "turn_angle", "jitter_gain", "mode_probs",
}
_SAMPLER_KEYS = {
    "kind", "label", "n_samples", "warmup", "seed", "noise_variance",
    "scene_shared", "beta", "candidate_pool_size",
}


def _generator_from_dict(data: Mapping) -> GeneratorSpec:
    unknown = set(data) - _GENERATOR_KEYS
    if unknown:
        raise ValueError(f"config: unknown generator fields {sorted(unknown)}")
    if "kind" not in data:
        raise ValueError("config: generator needs a kind")
    return GeneratorSpec(**data)


def _sampler_from_dict(data: Mapping, global_seed: int) -> tuple[str, SamplerConfig]:
    unknown = set(data) - _SAMPLER_KEYS
    if unknown:
        raise ValueError(f"config: unknown sampler fields {sorted(unknown)}")
    if "kind" not in data:
        raise ValueError("config: every sampler needs a kind")
    kwargs = dict(data)
    label = kwargs.pop("label", kwargs["kind"])
    acq = {}
    for key in ("beta", "candidate_pool_size"):
        if key in kwargs:
            acq[key] = kwargs.pop(key)
    kwargs.setdefault("seed", global_seed)
    if acq:
        kwargs["acquisition"] = AcquisitionConfig(**acq)
    return str(label), SamplerConfig(**kwargs)


def load_bench_config(path, seed_override: int | None = None) -> BenchConfig:
    """Load and validate a benchmark config from a JSON file.

    Sampler entries are flat dicts; ``beta`` and ``candidate_pool_size``
    fold into the acquisition config, ``label`` names the report row, and
    the global ``seed`` applies to samplers that do not set their own.
    ``seed_override`` replaces the file's global seed.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise OSError(f"cannot read config from {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ValueError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ValueError("config: top level must be a JSON object")
    seed = int(data.get("seed", 0)) if seed_override is None else int(seed_override)
    try:
        generator = _generator_from_dict(data.get("generator", {}))
        samplers = {}
        for entry in data.get("samplers", []):
            label, cfg = _sampler_from_dict(entry, seed)
            if label in samplers:
                raise ValueError(f"config: duplicate sampler label {label!r}")
            samplers[label] = cfg
        corpus = data.get("corpus", {})
        if not isinstance(corpus, dict) or not ({"synthetic", "files"} & set(corpus)):
            raise ValueError("config: corpus must define 'synthetic' or 'files'")
        output = data.get("output", {})
        return BenchConfig(
            generator=generator,
            samplers=samplers,
            corpus=corpus,
            repeats=int(data.get("repeats", 10)),
            exception_q=float(data.get("exception_q", 0.04)),
            seed=seed,
            csv_path=output.get("csv"),
            json_path=output.get("json"),
        )
    except TypeError as e:
        raise ValueError(f"config: {e}") from None


def build_corpus(cfg: BenchConfig) -> dict[str, list[Scene]]:
    """Materialize the config's corpus: named dataset splits of scenes."""
    corpus = cfg.corpus
    if "synthetic" in corpus:
        params = dict(corpus["synthetic"])
        params.setdefault("seed", cfg.seed)
        if "speed_range" in params:
            params["speed_range"] = tuple(params["speed_range"])
        try:
            scenes = synthetic_corpus(cfg.generator, **params)
        except TypeError as e:
            raise ValueError(f"config: synthetic corpus: {e}") from None
        return {"synthetic": scenes}
    splits = {}
    stride = int(corpus.get("stride", 1))
    frame_step = corpus.get("frame_step")
    for name, file_path in corpus["files"].items():
        try:
            with open(file_path) as fh:
                records = parse_trajectories(fh)
        except OSError as e:
            raise OSError(f"cannot read corpus file {file_path}: {e}") from e
        splits[str(name)] = window_scenes(
            records, stride=stride,
            frame_step=None if frame_step is None else int(frame_step),
        )
    return splits
