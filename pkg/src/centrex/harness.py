"""Experiment harness: data generation, metrics, sweeps, and persistence.

All randomness derives from a single root seed: the dataset of trial t at
noise index s comes from SeedSequence([root, s, t]) and algorithm-specific
streams from SeedSequence([root, s, t, algorithm_index]), so every algorithm
in a sweep sees identical datasets.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .baselines import KMeansConfig, centrex_gaussian, kmeans_replicated
from .centralized import Dataset, run_centrex
from .decentralized import NetworkConfig, run_decentrex

__all__ = [
    "ExperimentConfig",
    "Metrics",
    "generate_dataset",
    "classification_error",
    "distortion",
    "run_experiment",
    "load_dataset_csv",
    "save_dataset_csv",
]

CSV_FIELDS = ["algorithm", "sigma", "trial", "k_hat", "pe", "distortion", "messages", "runtime_s"]

# Four-corner layout used by the d=2, K=4 scenario, in units of the scale A.
_DIM2_LAYOUT = np.array([[1.0, 2.0], [2.0, 1.0], [1.0, 1.0], [2.0, 2.0]])


@dataclass
class ExperimentConfig:
    scenario: str = "custom"  # "dim2k4", "dim100k10", or "custom"
    d: int = 2
    k: int = 4
    n: int = 400
    scale_a: float = 10.0
    centroids: np.ndarray | None = None
    sigmas: tuple = (1.0,)
    trials: int = 1
    gamma: float = 1e-3
    epsilon: float = 1e-2
    algorithms: tuple = ("centrex",)
    beta: float = 1.0
    slots_t: int = 300
    update_l: int = 30
    fanout: int = 1
    seed: int = 0
    record_runtime: bool = False
    squared_distortion: bool = False

    def __post_init__(self):
        if self.scenario == "dim2k4":
            self.d, self.k = 2, 4
            self.centroids = self.scale_a * _DIM2_LAYOUT
        elif self.scenario == "dim100k10":
            self.d, self.k = 100, 10
            if self.centroids is None:
                # Centroid layout drawn once for the whole experiment.
                rng = np.random.default_rng(np.random.SeedSequence([self.seed, 999]))
                self.centroids = self.scale_a * rng.standard_normal((self.k, self.d))
        elif self.scenario != "custom":
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.centroids is None:
            raise ValueError("custom scenario requires explicit centroids")
        self.centroids = np.asarray(self.centroids, dtype=float)
        if self.centroids.shape != (self.k, self.d):
            raise ValueError("centroids must have shape (k, d)")
        if self.trials < 1 or self.n < 1:
            raise ValueError("trials and n must be positive")
        if self.n % self.k != 0:
            raise ValueError("n must be divisible by k for balanced scenarios")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        if "centroids" in raw and raw["centroids"] is not None:
            raw["centroids"] = np.asarray(raw["centroids"], dtype=float)
        if "sigmas" in raw:
            raw["sigmas"] = tuple(raw["sigmas"])
        if "algorithms" in raw:
            raw["algorithms"] = tuple(raw["algorithms"])
        return cls(**raw)


@dataclass
class Metrics:
    pe: float
    distortion: float
    k_hat: int
    runtime: float = 0.0
    messages: int = 0


def generate_dataset(config: ExperimentConfig, trial_seed, sigma=None) -> Dataset:
    """Balanced synthetic dataset: n/k Gaussian draws around each centroid.

    Uses the first entry of config.sigmas unless sigma is given explicitly.
    """
    if sigma is None:
        sigma = float(config.sigmas[0])
    return _generate(config, float(sigma), trial_seed)


def _generate(config: ExperimentConfig, sigma: float, trial_seed) -> Dataset:
    rng = np.random.default_rng(trial_seed)
    per = config.n // config.k
    labels = np.repeat(np.arange(config.k), per)
    noise = rng.standard_normal((config.n, config.d))
    points = config.centroids[labels] + sigma * noise
    return Dataset(points=points, sigma=sigma, labels=labels)


def classification_error(true_labels, assignments, k_true=None, k_hat=None) -> float:
    """Error probability after optimally matching estimated to true clusters.

    Builds the k_true x k_hat contingency matrix, finds the one-to-one
    matching maximizing the correctly assigned count, and returns
    1 - matched / N.  Estimated clusters left unmatched count as errors.
    """
    true_labels = np.asarray(true_labels, dtype=int)
    assignments = np.asarray(assignments, dtype=int)
    if true_labels.shape != assignments.shape:
        raise ValueError("label arrays must have equal length")
    if k_true is None:
        k_true = int(true_labels.max()) + 1
    if k_hat is None:
        k_hat = int(assignments.max()) + 1
    # Stray labels beyond k_hat still occupy a column; an unmatched column
    # just counts as errors, which is the intended semantics.
    k_hat = max(k_hat, int(assignments.max()) + 1)
    contingency = np.zeros((k_true, k_hat), dtype=int)
    np.add.at(contingency, (true_labels, assignments), 1)
    rows, cols = linear_sum_assignment(-contingency)
    matched = int(contingency[rows, cols].sum())
    return 1.0 - matched / true_labels.size


def distortion(points_raw, centroids, assignments, squared: bool = False) -> float:
    """Mean (optionally squared) distance to the assigned centroid, raw units."""
    points_raw = np.asarray(points_raw, dtype=float)
    centroids = np.asarray(centroids, dtype=float)
    dists = np.linalg.norm(points_raw - centroids[np.asarray(assignments)], axis=1)
    return float(np.mean(dists**2 if squared else dists))


def _run_algorithm(name, config, data, seed_seq):
    """Dispatch one algorithm on one dataset; returns (result-like, messages)."""
    seed = seed_seq
    if name == "centrex":
        return run_centrex(data, gamma=config.gamma, epsilon=config.epsilon, seed=seed), 0
    if name == "centrex_gaussian":
        return (
            centrex_gaussian(
                data, gamma=config.gamma, epsilon=config.epsilon, beta=config.beta, seed=seed
            ),
            0,
        )
    if name == "decentrex":
        net_cfg = NetworkConfig(
            n_sensors=data.n,
            T=config.slots_t,
            L=config.update_l,
            fanout=config.fanout,
            seed=seed,
        )
        results, log = run_decentrex(data, net_cfg, gamma=config.gamma)
        return _pool_sensor_results(results), log.messages_sent
    if name == "kmeanspp":
        cfg = KMeansConfig(k=config.k, init="plusplus", replicates=1, seed=_as_int_seed(seed))
        return kmeans_replicated(data, cfg), 0
    if name.startswith("kmeans"):
        replicates = int(name[len("kmeans") :] or "1")
        cfg = KMeansConfig(k=config.k, init="uniform", replicates=replicates, seed=_as_int_seed(seed))
        return kmeans_replicated(data, cfg), 0
    raise ValueError(f"unknown algorithm {name!r}")


def _as_int_seed(seed_seq) -> int:
    if isinstance(seed_seq, (int, np.integer)):
        return int(seed_seq)
    return int(seed_seq.generate_state(1)[0])


class _PooledResult:
    """Network-wide view of per-sensor local results.

    Each sensor labels only its own observation against its own centroid
    list; round order is global so labels are comparable across sensors.
    """

    def __init__(self, sensor_results):
        self.assignments = np.array([int(r.assignments[0]) for r in sensor_results])
        k_hats = np.array([r.k_hat for r in sensor_results])
        self.k_hat = int(np.bincount(k_hats).argmax())
        ref = next(r for r in sensor_results if r.k_hat == self.k_hat)
        self.centroids = ref.centroids
        self.sensor_results = sensor_results


def _pool_sensor_results(sensor_results) -> _PooledResult:
    return _PooledResult(sensor_results)


def _distortion_for(result, data, squared):
    if isinstance(result, _PooledResult):
        # Each observation measured against its own sensor's centroid list.
        d = [
            float(np.linalg.norm(data.points[i] - r.centroids[int(r.assignments[0])]))
            for i, r in enumerate(result.sensor_results)
        ]
        d = np.asarray(d)
        return float(np.mean(d**2 if squared else d))
    return distortion(data.points, result.centroids, result.assignments, squared)


def run_experiment(config: ExperimentConfig, out_dir=None):
    """Full sweep over (sigma, trial, algorithm).

    Returns the list of row dicts; when out_dir is given also writes
    results.csv and summary.json (mean and std of pe/distortion per
    algorithm and sigma).  Fully deterministic from config.seed unless
    record_runtime is enabled.
    """
    rows = []
    for s_idx, sigma in enumerate(config.sigmas):
        for trial in range(config.trials):
            data = _generate(
                config, float(sigma), np.random.SeedSequence([config.seed, s_idx, trial])
            )
            for a_idx, name in enumerate(config.algorithms):
                alg_seed = np.random.SeedSequence([config.seed, s_idx, trial, a_idx])
                t0 = time.perf_counter()
                result, messages = _run_algorithm(name, config, data, alg_seed)
                elapsed = time.perf_counter() - t0 if config.record_runtime else 0.0
                pe = classification_error(
                    data.labels, result.assignments, k_true=config.k, k_hat=result.k_hat
                )
                rows.append(
                    {
                        "algorithm": name,
                        "sigma": float(sigma),
                        "trial": trial,
                        "k_hat": result.k_hat,
                        "pe": pe,
                        "distortion": _distortion_for(result, data, config.squared_distortion),
                        "messages": messages,
                        "runtime_s": elapsed,
                    }
                )
    if out_dir is not None:
        _write_outputs(rows, config, Path(out_dir))
    return rows


def _write_outputs(rows, config, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    try:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            writer.writeheader()
            for row in rows:
                out = dict(row)
                out["pe"] = f"{row['pe']:.10g}"
                out["distortion"] = f"{row['distortion']:.10g}"
                out["runtime_s"] = f"{row['runtime_s']:.6f}"
                writer.writerow(out)
    except OSError as exc:
        raise OSError(f"failed writing {csv_path}: {exc}") from exc

    summary = {}
    for name in config.algorithms:
        summary[name] = []
        for sigma in config.sigmas:
            sel = [r for r in rows if r["algorithm"] == name and r["sigma"] == float(sigma)]
            pes = np.array([r["pe"] for r in sel])
            dis = np.array([r["distortion"] for r in sel])
            summary[name].append(
                {
                    "sigma": float(sigma),
                    "trials": len(sel),
                    "pe_mean": float(pes.mean()),
                    "pe_std": float(pes.std()),
                    "distortion_mean": float(dis.mean()),
                    "distortion_std": float(dis.std()),
                    "k_hat_mean": float(np.mean([r["k_hat"] for r in sel])),
                }
            )
    json_path = out_dir / "summary.json"
    try:
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    except OSError as exc:
        raise OSError(f"failed writing {json_path}: {exc}") from exc


def save_dataset_csv(data: Dataset, path):
    """One row per point, d float columns, optional trailing integer label."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"x{i}" for i in range(data.d)]
        if data.labels is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(data.n):
            row = [f"{v:.12g}" for v in data.points[i]]
            if data.labels is not None:
                row.append(int(data.labels[i]))
            writer.writerow(row)


def load_dataset_csv(path, sigma: float) -> Dataset:
    """Read a point-per-row CSV (header required, optional label column)."""
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        has_labels = header[-1].strip().lower() == "label"
        pts, labels = [], []
        for row in reader:
            if not row:
                continue
            if has_labels:
                pts.append([float(v) for v in row[:-1]])
                labels.append(int(row[-1]))
            else:
                pts.append([float(v) for v in row])
    return Dataset(
        points=np.asarray(pts),
        sigma=sigma,
        labels=np.asarray(labels) if has_labels else None,
    )
