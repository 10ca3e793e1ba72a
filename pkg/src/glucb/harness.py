"""Seeded Monte-Carlo experiments: configs, per-trial records, aggregation, CSV."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import env
from .core import DEFAULT_MAX_STEPS, ConfidenceParams, RadiusMode, Termination, run_glucb, run_static

CSV_COLUMNS = ("trial", "algo", "tau", "recommended", "correct", "terminated", "wall_time_ms")
ALGOS = ("glucb", "static")
DATASETS = ("soare", "sphere", "crowded", "three_arm")


@dataclass
class ExperimentConfig:
    algo: str = "glucb"
    radius_mode: str = "det"
    delta: float = 0.05
    R: float = 1.0
    S: float = 2.0
    lam: float = 1.0
    trials: int = 100
    master_seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    instance: str | None = None
    dataset: dict | None = None
    static_weights: list | None = None
    workers: int = 1

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ValueError(f"algo must be one of {ALGOS}, got {self.algo!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        if (self.instance is None) == (self.dataset is None):
            raise ValueError("give exactly one of an instance file or a dataset spec")
        self.params  # validates delta, R, S, lambda, radius mode

    @property
    def params(self) -> ConfidenceParams:
        return ConfidenceParams(
            R=self.R, S=self.S, delta=self.delta, lam=self.lam, radius_mode=RadiusMode(self.radius_mode)
        )

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_mapping(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return out


@dataclass
class TrialRecord:
    trial: int
    algo: str
    tau: int
    recommended: int
    correct: bool
    terminated: str
    wall_time_ms: float
    stream: int = field(default=-1)

    def __post_init__(self):
        if self.stream < 0:
            self.stream = self.trial


@dataclass
class AggregateStats:
    mean_tau: float
    stderr_tau: float
    error_rate: float
    non_termination_count: int
    trials: int


def make_dataset(name: str, **params) -> env.Instance:
    """Build a named synthetic instance. Random generators take ``seed``."""
    noise_std = float(params.pop("noise_std", 1.0))
    seed = params.pop("seed", 0)
    if name == "soare":
        return env.gen_soare(int(params.get("d", 2)), float(params.get("omega", 0.1)), noise_std)
    if name == "three_arm":
        return env.three_arm(float(params.get("omega", 0.1)), noise_std)
    if name == "sphere":
        return env.gen_sphere(
            int(params.get("d", 10)),
            int(params.get("k", 100)),
            float(params.get("gamma", 0.01)),
            rng=env.make_rng(int(seed)),
            noise_std=noise_std,
        )
    if name == "crowded":
        return env.gen_crowded(
            int(params.get("k", 100)),
            float(params.get("sigma", 0.3)),
            rng=env.make_rng(int(seed)),
            noise_std=noise_std,
        )
    raise ValueError(f"unknown dataset {name!r}; expected one of {DATASETS}")


def load_config_instance(config: ExperimentConfig) -> env.Instance:
    if config.instance is not None:
        return env.load_instance(config.instance)
    spec = dict(config.dataset)
    name = spec.pop("name", None)
    if name is None:
        raise ValueError("dataset spec needs a 'name'")
    return make_dataset(name, **spec)


def run_trial(instance: env.Instance, config: ExperimentConfig, i: int) -> TrialRecord:
    rng = env.make_rng(config.master_seed, i)
    params = config.params
    if config.algo == "glucb":
        report, _ = run_glucb(instance, params, rng, config.max_steps)
    else:
        weights = config.static_weights
        if weights is None:
            weights = np.full(instance.K, 1.0 / instance.K)
        report = run_static(instance, params, weights, rng, config.max_steps)
    return TrialRecord(
        trial=i,
        algo=config.algo,
        tau=report.tau,
        recommended=report.recommended,
        correct=report.correct,
        terminated=report.terminated.value,
        wall_time_ms=report.wall_time * 1e3,
        stream=i,
    )


def run_experiment(
    config: ExperimentConfig, instance: env.Instance | None = None, workers: int | None = None
) -> list[TrialRecord]:
    """Run every trial; trial ``i`` always draws from stream ``(master_seed, i)``."""
    if instance is None:
        instance = load_config_instance(config)
    workers = config.workers if workers is None else workers
    indices = range(config.trials)
    if workers == 1:
        return [run_trial(instance, config, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_trial(instance, config, i), indices))


def aggregate(records: list[TrialRecord]) -> AggregateStats:
    stopped = [r for r in records if r.terminated == Termination.STOPPED.value]
    taus = np.array([r.tau for r in stopped], dtype=np.float64)
    n = len(taus)
    mean = float(taus.mean()) if n else math.nan
    stderr = float(taus.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    errors = sum(not r.correct for r in stopped)
    return AggregateStats(
        mean_tau=mean,
        stderr_tau=stderr,
        error_rate=errors / n if n else 0.0,
        non_termination_count=len(records) - n,
        trials=len(records),
    )


def write_csv(records: list[TrialRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.trial,
                    r.algo,
                    r.tau,
                    r.recommended,
                    "true" if r.correct else "false",
                    r.terminated,
                    format(r.wall_time_ms, ".17g"),
                ]
            )


def read_csv(path) -> list[TrialRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            TrialRecord(
                trial=int(row["trial"]),
                algo=row["algo"],
                tau=int(row["tau"]),
                recommended=int(row["recommended"]),
                correct=row["correct"] == "true",
                terminated=row["terminated"],
                wall_time_ms=float(row["wall_time_ms"]),
            )
            for row in reader
        ]


def write_summary(stats: AggregateStats, path) -> None:
    Path(path).write_text(json.dumps(asdict(stats), indent=1) + "\n", encoding="utf-8")
