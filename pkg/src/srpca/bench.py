"""Replication harness: generate or load data, mask it, run every algorithm,
and aggregate the metrics per (algorithm, missing fraction) cell."""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import _backend
from .api import complete
from .baselines import AlsConfig, SvtConfig
from .core import ALGORITHMS, CompletionConfig
from .diagnostics import MetricReport, metric_report
from .errors import InvalidArgumentError
from .fileio import fingerprint, load_csv, load_movielens, load_pgm
from .observation import ObservedMatrix, holdout_mask, random_mask

GENERATORS = ("synthetic_lowrank", "image_file", "csv_file", "movielens")
_SHARED_KEYS = {"rank", "tol", "max_iter", "standardize"}
_OVERRIDE_KEYS = {
    "srpca": _SHARED_KEYS | {"ridge", "epsilon"},
    "fast_srpca": _SHARED_KEYS | {"ridge", "epsilon", "lam"},
    "svt": _SHARED_KEYS | {"tau", "step", "mode"},
    "als": _SHARED_KEYS | {"ridge"},
}
_METRIC_FIELDS = ("observed_sq_residual", "iterations", "wall_time", "full_sq_error", "full_sq_error_std", "nmae")


def normalize_algorithm(name: str) -> str:
    key = name.replace("-", "_")
    if key not in ALGORITHMS:
        raise InvalidArgumentError(
            f"unknown algorithm {name!r}; valid: {', '.join(a.replace('_', '-') for a in ALGORITHMS)}"
        )
    return key


@dataclass
class BenchmarkScenario:
    """Description of a replication study.

    ``dims`` and ``true_rank`` apply to ``synthetic_lowrank``; the file
    generators read ``path`` (and ``mask_path`` for images). ``rank`` is
    the completion rank (default ``true_rank``). ``configs`` maps an
    algorithm name to overrides of its settings. ``standardize=None``
    means off for synthetic data and on for files.
    """

    generator: str
    missing_fractions: list
    algorithms: list
    replications: int = 1
    dims: Optional[tuple] = None
    true_rank: Optional[int] = None
    rank: Optional[int] = None
    path: Optional[str] = None
    mask_path: Optional[str] = None
    noise: float = 0.0
    seed: int = 0
    tol: float = 1e-4
    max_iter: int = 500
    standardize: Optional[bool] = None
    configs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise InvalidArgumentError(
                f"unknown generator {self.generator!r}; valid: {', '.join(GENERATORS)}"
            )
        if self.replications < 1:
            raise InvalidArgumentError(f"replications must be >= 1, got {self.replications}")
        if not self.missing_fractions:
            raise InvalidArgumentError("missing_fractions is empty")
        for f in self.missing_fractions:
            if not 0.0 <= f < 1.0:
                raise InvalidArgumentError(f"missing fraction {f} outside [0, 1)")
        if not self.algorithms:
            raise InvalidArgumentError("algorithms is empty")
        self.algorithms = [normalize_algorithm(a) for a in self.algorithms]
        self.configs = {normalize_algorithm(k): dict(v) for k, v in self.configs.items()}
        for name, overrides in self.configs.items():
            unknown = set(overrides) - _OVERRIDE_KEYS[name]
            if unknown:
                raise InvalidArgumentError(f"unknown settings for {name}: {sorted(unknown)}")
        if self.generator == "synthetic_lowrank":
            if self.dims is None or len(self.dims) != 2 or min(self.dims) < 1:
                raise InvalidArgumentError(f"synthetic_lowrank needs dims (m, n), got {self.dims}")
            if self.true_rank is None or not 1 <= self.true_rank <= min(self.dims):
                raise InvalidArgumentError(f"true_rank must lie in 1..min(dims), got {self.true_rank}")
            self.dims = tuple(int(d) for d in self.dims)
        elif self.path is None:
            raise InvalidArgumentError(f"generator {self.generator} needs a path")
        if self.rank is None:
            if self.true_rank is None:
                raise InvalidArgumentError("rank is required when true_rank is not given")
            self.rank = self.true_rank

    @property
    def standardize_default(self) -> bool:
        if self.standardize is not None:
            return self.standardize
        return self.generator != "synthetic_lowrank"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if d["dims"] is not None:
            d["dims"] = list(d["dims"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> BenchmarkScenario:
        d = dict(d)
        if d.get("dims") is not None:
            d["dims"] = tuple(d["dims"])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> BenchmarkScenario:
        return cls.from_dict(json.loads(Path(path).read_text()))


def replication_seed(scenario_seed: int, fraction_index: int, replication: int) -> int:
    """Seed for one (missing fraction, replication) pair, fixed before any run."""
    ss = np.random.SeedSequence(scenario_seed, spawn_key=(fraction_index, replication))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def synthetic_lowrank(m: int, n: int, rank: int, seed: int, noise: float = 0.0) -> np.ndarray:
    """Product of seeded standard-normal factors, plus optional Gaussian noise."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, rank))
    b = rng.standard_normal((rank, n))
    out = a @ b
    if noise > 0:
        out += noise * rng.standard_normal((m, n))
    return out


@dataclass
class _Instance:
    train: ObservedMatrix
    truth: Optional[np.ndarray]
    holdout: Optional[ObservedMatrix]


def _load_base(scenario: BenchmarkScenario) -> Optional[ObservedMatrix]:
    if scenario.generator == "image_file":
        return load_pgm(scenario.path, scenario.mask_path)
    if scenario.generator == "csv_file":
        return load_csv(scenario.path)
    if scenario.generator == "movielens":
        return load_movielens(scenario.path)
    return None


def _make_instance(scenario: BenchmarkScenario, base, fraction: float, seed: int) -> _Instance:
    data_seed, mask_seed = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint32)
    if base is None:
        m, n = scenario.dims
        truth = synthetic_lowrank(m, n, scenario.true_rank, int(data_seed), scenario.noise)
        mask = random_mask(m, n, fraction, int(mask_seed))
        return _Instance(ObservedMatrix(truth, mask), truth, None)
    train_mask = holdout_mask(base.mask, fraction, int(mask_seed))
    held = base.mask & ~train_mask
    holdout = ObservedMatrix(base.values, held) if held.any() else None
    truth = base.values if base.mask.all() else None
    return _Instance(base.with_mask(train_mask), truth, holdout)


def _configs(scenario: BenchmarkScenario, algorithm: str, seed: int):
    o = dict(scenario.configs.get(algorithm, {}))
    shared = {
        "rank": o.pop("rank", scenario.rank),
        "tol": o.pop("tol", scenario.tol),
        "max_iter": o.pop("max_iter", scenario.max_iter),
    }
    standardize = o.pop("standardize", scenario.standardize_default)
    svt = als = None
    if algorithm == "svt":
        svt = SvtConfig(tol=shared["tol"], max_iter=shared["max_iter"], **o)
        o = {}
    elif algorithm == "als":
        als = AlsConfig(seed=seed, **shared, **o)
        o = {}
    cfg = CompletionConfig(algorithm=algorithm, seed=seed, standardize=standardize, **shared, **o)
    return cfg, svt, als


def _trace_summary(trace) -> dict:
    return {
        "iterations": trace.iterations,
        "termination": trace.termination.value,
        "first_residual": float(trace.residuals[0]),
        "last_residual": float(trace.residuals[-1]),
    }


@dataclass
class CellReport:
    """All replications of one algorithm at one missing fraction."""

    algorithm: str
    missing_fraction: float
    runs: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def summary(self) -> dict:
        out = {}
        for name in _METRIC_FIELDS:
            vals = [r["metrics"][name] for r in self.runs if r["metrics"].get(name) is not None]
            if vals:
                out[name] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
        return out

    def metrics(self) -> list:
        return [MetricReport.from_dict(r["metrics"]) for r in self.runs]

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "missing_fraction": self.missing_fraction,
            "runs": self.runs,
            "failures": self.failures,
            "summary": self.summary(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CellReport:
        return cls(d["algorithm"], d["missing_fraction"], list(d["runs"]), list(d["failures"]))


@dataclass
class RunReport:
    """Output of :func:`bench_run` (and of the ``complete``/``holdout`` CLI
    commands, which produce a single cell)."""

    scenario: dict
    cells: list
    seeds: list
    backend: str = _backend.BACKEND
    dataset: Optional[dict] = None

    def cell(self, algorithm: str, missing_fraction: float) -> CellReport:
        algorithm = normalize_algorithm(algorithm)
        for c in self.cells:
            if c.algorithm == algorithm and c.missing_fraction == missing_fraction:
                return c
        raise KeyError((algorithm, missing_fraction))

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "backend": self.backend,
            "dataset": self.dataset,
            "seeds": self.seeds,
            "cells": [c.to_dict() for c in self.cells],
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunReport:
        return cls(
            scenario=d["scenario"],
            cells=[CellReport.from_dict(c) for c in d["cells"]],
            seeds=d["seeds"],
            backend=d["backend"],
            dataset=d.get("dataset"),
        )

    def to_json(self, indent: int = 2) -> str:
        # json writes floats with repr, the shortest string that parses back
        # to the same double, so the round trip is exact
        return json.dumps(self.to_dict(), indent=indent, allow_nan=True)

    @classmethod
    def from_json(cls, text: str) -> RunReport:
        return cls.from_dict(json.loads(text))

    def without_timings(self) -> dict:
        """Report as a dict with every wall time removed."""
        d = self.to_dict()
        for c in d["cells"]:
            for r in c["runs"]:
                r["metrics"].pop("wall_time", None)
            c["summary"].pop("wall_time", None)
        return d


def _run_one(scenario, base, algorithm, fraction, replication, seed):
    inst = _make_instance(scenario, base, fraction, seed)
    cfg, svt, als = _configs(scenario, algorithm, seed)
    result = complete(inst.train, cfg, svt=svt, als=als)
    metrics = metric_report(inst.train, result, cfg.tol, truth=inst.truth, holdout=inst.holdout)
    return {
        "replication": replication,
        "seed": seed,
        "metrics": metrics.to_dict(),
        "trace": _trace_summary(result.trace),
        "dataset": fingerprint(inst.train),
    }


def bench_run(scenario: BenchmarkScenario, workers: int = 1, progress=None) -> RunReport:
    """Run every (algorithm, missing fraction, replication) of ``scenario``.

    Seeds are derived from ``scenario.seed`` before dispatch, so results do
    not depend on ``workers``. Within a replication every algorithm sees
    the same data and mask. A failing run is recorded in its cell and the
    others proceed. ``progress(algorithm, fraction, replication)`` is
    called as each run finishes.
    """
    base = _load_base(scenario)
    tasks = []
    seeds = []
    for fi, fraction in enumerate(scenario.missing_fractions):
        row = [replication_seed(scenario.seed, fi, rep) for rep in range(scenario.replications)]
        seeds.append(row)
        for algorithm in scenario.algorithms:
            for rep, seed in enumerate(row):
                tasks.append((algorithm, float(fraction), rep, seed))

    def run(task):
        algorithm, fraction, rep, seed = task
        try:
            out = _run_one(scenario, base, algorithm, fraction, rep, seed)
        except Exception as exc:  # recorded per cell; the harness keeps going
            out = {"replication": rep, "seed": seed, "error": type(exc).__name__, "message": str(exc)}
        if progress is not None:
            progress(algorithm, fraction, rep)
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, tasks))
    else:
        outcomes = [run(t) for t in tasks]

    cells = {}
    for fraction in scenario.missing_fractions:
        for algorithm in scenario.algorithms:
            cells[(algorithm, float(fraction))] = CellReport(algorithm, float(fraction))
    for (algorithm, fraction, _, _), out in zip(tasks, outcomes):
        cell = cells[(algorithm, fraction)]
        (cell.failures if "error" in out else cell.runs).append(out)

    return RunReport(
        scenario=scenario.to_dict(),
        cells=list(cells.values()),
        seeds=seeds,
        dataset=fingerprint(base) if base is not None else None,
    )
