"""Metrics, synthetic vignette generation and the benchmark runner.

NRMSE is measured in symptom space, ||A d* - A d_hat|| / ||A d*|| averaged
over vignettes, which is robust to the null-space ambiguity of an
underdetermined A; the disease-space variant is reported alongside for
transparency.  Top-K accuracy ranks raw estimate entries (signed, ties broken
by ascending index).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .baselines import AdmmConfig, SparseScanConfig, solve_admm, solve_sparse_scan, solve_uls
from .denoisers import ChannelModel, PriorModel
from .gvamp import GvampConfig, LmmseFactorization, run_gvamp
from .model import (
    AmpdxError,
    Catalog,
    DataError,
    KnowledgeMatrix,
    NoiseModel,
    SymptomObservation,
    Vignette,
    snr_to_noise_precision,
)

#: PRNG identity recorded in reports so datasets are reproducible elsewhere.
PRNG_NAME = "numpy-pcg64"

ALGORITHMS = ("gvamp", "admm", "uls", "scan")

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["algorithms", "metrics", "config_echo", "seed"],
    "properties": {
        "algorithms": {"type": "array", "items": {"type": "string"}},
        "metrics": {
            "type": "object",
            "required": ["nrmse", "top_k"],
            "properties": {
                "nrmse": {"type": "object", "additionalProperties": {"type": "number"}},
                "nrmse_disease": {"type": "object", "additionalProperties": {"type": "number"}},
                "top_k": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "object",
                        "additionalProperties": {"type": "number"},
                    },
                },
            },
        },
        "config_echo": {"type": "object"},
        "seed": {"type": ["integer", "null"]},
        "exclusions": {"type": "object", "additionalProperties": {"type": "integer"}},
    },
}


# ---------------------------------------------------------------------------
# Metrics


@dataclass(frozen=True)
class Metrics:
    nrmse: float
    nrmse_disease: float
    top_k: Mapping[int, float]
    per_vignette: tuple[tuple[float, int], ...]  # (symptom-space nrmse, 1-based rank of truth)

    def __post_init__(self) -> None:
        ks = sorted(self.top_k)
        accs = [self.top_k[k] for k in ks]
        if any(b < a for a, b in zip(accs, accs[1:])):
            raise DataError(f"top-K accuracies must be non-decreasing in K, got {dict(self.top_k)}")


def nrmse(batch: Iterable[tuple[np.ndarray, np.ndarray, np.ndarray]]) -> float:
    """Mean over (A, truth, estimate) triples of ||A(d* - d_hat)|| / ||A d*||."""
    ratios = []
    for a, truth, estimate in batch:
        a = a.entries if isinstance(a, KnowledgeMatrix) else np.asarray(a, dtype=np.float64)
        reference = a @ np.asarray(truth, dtype=np.float64)
        energy = np.linalg.norm(reference)
        if energy == 0:
            raise DataError("ground-truth vignette has zero symptom-space energy")
        ratios.append(float(np.linalg.norm(reference - a @ np.asarray(estimate, dtype=np.float64)) / energy))
    if not ratios:
        raise DataError("empty batch")
    return float(np.mean(ratios))


def rank_of_truth(estimate: np.ndarray, truth_index: int) -> int:
    """1-based position of the truth in the descending ranking (ties: lower index first)."""
    estimate = np.asarray(estimate, dtype=np.float64)
    if not 0 <= truth_index < estimate.size:
        raise DataError(f"truth index {truth_index} out of range for N={estimate.size}")
    order = np.argsort(-estimate, kind="stable")
    return int(np.nonzero(order == truth_index)[0][0]) + 1


def topk_accuracy(batch: Iterable[tuple[int, np.ndarray]], k: int) -> float:
    """Fraction of (truth_index, estimate) pairs whose truth ranks in the top K."""
    hits = []
    for truth_index, estimate in batch:
        estimate = np.asarray(estimate, dtype=np.float64)
        if k > estimate.size:
            raise DataError(f"K={k} exceeds N={estimate.size}")
        hits.append(rank_of_truth(estimate, truth_index) <= k)
    if not hits:
        raise DataError("empty batch")
    return float(np.mean(hits))


def _metrics_from_estimates(
    a: np.ndarray,
    truths: np.ndarray,
    estimates: Sequence[np.ndarray],
    ks: Sequence[int] = (1, 2, 3),
) -> Metrics:
    per = []
    symptom_scores = []
    disease_scores = []
    for truth, est in zip(truths, estimates):
        reference = a @ truth
        energy = np.linalg.norm(reference)
        if energy == 0:
            raise DataError("ground-truth vignette has zero symptom-space energy")
        score = float(np.linalg.norm(reference - a @ est) / energy)
        truth_norm = np.linalg.norm(truth)
        disease_scores.append(float(np.linalg.norm(truth - est) / truth_norm))
        rank = rank_of_truth(est, int(np.argmax(truth)))
        per.append((score, rank))
        symptom_scores.append(score)
    ks = [k for k in ks if k <= a.shape[1]]
    top = {k: float(np.mean([rank <= k for _, rank in per])) for k in ks}
    return Metrics(
        nrmse=float(np.mean(symptom_scores)),
        nrmse_disease=float(np.mean(disease_scores)),
        top_k=top,
        per_vignette=tuple(per),
    )


# ---------------------------------------------------------------------------
# Synthetic generation


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    vignette_count: int
    sparsity: int = 1
    snr_db: float = 25.0
    #: density of a randomly drawn matrix; None means the matrix is supplied
    matrix_density: float | None = None

    def __post_init__(self) -> None:
        if self.vignette_count < 1:
            raise DataError(f"vignette count must be >= 1, got {self.vignette_count}")
        if self.sparsity < 1:
            raise DataError(f"sparsity must be >= 1, got {self.sparsity}")


@dataclass(frozen=True)
class SyntheticDataset:
    matrix: KnowledgeMatrix
    truths: np.ndarray  # (P, N)
    observations: np.ndarray  # (P, M) in {+1, -1}
    noise: NoiseModel
    signal_energy: float
    config: GeneratorConfig
    prng: str = PRNG_NAME

    @property
    def count(self) -> int:
        return self.truths.shape[0]

    def observation_list(self) -> list[SymptomObservation]:
        return [SymptomObservation(row.astype(np.int8)) for row in self.observations]

    def vignettes(self, catalog: Catalog) -> list[Vignette]:
        """One-hot datasets as vignette objects (requires sparsity = 1)."""
        if self.config.sparsity != 1:
            raise DataError("vignette export requires one-hot ground truth (sparsity 1)")
        return [
            Vignette(observation=obs, truth_index=int(np.argmax(truth)))
            for obs, truth in zip(self.observation_list(), self.truths)
        ]


def random_knowledge_matrix(m: int, n: int, density: float, rng: np.random.Generator) -> KnowledgeMatrix:
    """Bernoulli(density) binary matrix, redrawn until no disease column is empty."""
    if not 0 < density < 1:
        raise DataError(f"density must lie in (0, 1), got {density}")
    for _ in range(1000):
        entries = (rng.random((m, n)) < density).astype(np.float64)
        if entries.sum(axis=0).min() > 0:
            return KnowledgeMatrix(entries)
    raise DataError(f"could not draw a {m}x{n} matrix with no empty column at density {density}")


def generate_synthetic(
    matrix: KnowledgeMatrix,
    config: GeneratorConfig,
    rng: np.random.Generator | None = None,
) -> SyntheticDataset:
    """Draw vignettes from the generative model: uniform support, s = sign(A d + w).

    The noise precision realizes ``config.snr_db`` against the mean symptom
    energy of the drawn ground truths.  Deterministic for a given seed.
    """
    if config.sparsity > matrix.n:
        raise DataError(f"sparsity {config.sparsity} exceeds N={matrix.n}")
    rng = rng or np.random.default_rng(config.seed)
    p = config.vignette_count
    a = matrix.entries

    truths = np.zeros((p, matrix.n))
    for ell in range(p):
        support = rng.choice(matrix.n, size=config.sparsity, replace=False)
        truths[ell, support] = 1.0
    clean = truths @ a.T  # (P, M)
    signal_energy = float((clean**2).sum(axis=1).mean())
    if math.isinf(config.snr_db):
        # noiseless limit: precision pinned at the message clamp ceiling, no draws
        noise = NoiseModel(noise_precision=1e11, snr_db=config.snr_db)
        observations = np.where(clean > 0, 1.0, -1.0)
    else:
        noise = snr_to_noise_precision(config.snr_db, signal_energy, matrix.m)
        w = rng.normal(scale=math.sqrt(noise.noise_variance), size=clean.shape)
        observations = np.where(clean + w > 0, 1.0, -1.0)
    return SyntheticDataset(
        matrix=matrix,
        truths=truths,
        observations=observations,
        noise=noise,
        signal_energy=signal_energy,
        config=config,
    )


# ---------------------------------------------------------------------------
# Single-case inference (shared by the CLI and the HTTP service)


def solve_case(
    matrix: KnowledgeMatrix,
    obs: SymptomObservation,
    algorithm: str,
    *,
    noise: NoiseModel,
    prior: PriorModel | None = None,
    gvamp_config: GvampConfig | None = None,
    admm_config: AdmmConfig | None = None,
    scan_config: SparseScanConfig | None = None,
    factorization: LmmseFactorization | None = None,
) -> tuple[np.ndarray, dict]:
    """Run one algorithm on one observation; returns (estimate, diagnostics)."""
    if algorithm not in ALGORITHMS:
        raise DataError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    if algorithm == "gvamp":
        prior = prior or PriorModel(sparsity_rate=1.0 / matrix.n)
        out = run_gvamp(matrix, obs, prior, ChannelModel(noise=noise), gvamp_config, factorization)
        return out.estimate, {
            "algorithm": "gvamp",
            "iterations": out.iterations_used,
            "converged": out.converged,
        }
    resolved = obs.resolved()
    if algorithm == "uls":
        return solve_uls(matrix.entries, resolved), {"algorithm": "uls", "iterations": 1, "converged": True}
    if algorithm == "scan":
        config = scan_config or SparseScanConfig()
        estimate = solve_sparse_scan(matrix.entries, resolved, config)
        supports = sum(math.comb(matrix.n, k) for k in set(config.support_sizes))
        return estimate, {"algorithm": "scan", "iterations": supports, "converged": True}
    sweep = solve_admm(matrix.entries, resolved, admm_config)
    return sweep.best, {
        "algorithm": "admm",
        "iterations": int(sweep.iterations[sweep.best_index]),
        "converged": bool(sweep.converged[sweep.best_index]),
    }


# ---------------------------------------------------------------------------
# Benchmark harness


@dataclass(frozen=True)
class BenchmarkConfig:
    snr_db: float = 25.0
    noise: NoiseModel | None = None  # overrides snr_db when given
    prior: PriorModel | None = None  # default: bernoulli with rate 1/N
    gvamp: GvampConfig = field(default_factory=GvampConfig)
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    scan: SparseScanConfig = field(default_factory=SparseScanConfig)
    threads: int = 1


@dataclass(frozen=True)
class BenchmarkReport:
    algorithms: tuple[str, ...]
    metrics: Mapping[str, Metrics]
    exclusions: Mapping[str, int]
    config_echo: Mapping[str, object]
    seed: int | None

    def to_json_dict(self) -> dict:
        return {
            "algorithms": list(self.algorithms),
            "metrics": {
                "nrmse": {name: m.nrmse for name, m in self.metrics.items()},
                "nrmse_disease": {name: m.nrmse_disease for name, m in self.metrics.items()},
                "top_k": {
                    name: {str(k): v for k, v in sorted(m.top_k.items())} for name, m in self.metrics.items()
                },
            },
            "config_echo": dict(self.config_echo),
            "seed": self.seed,
            "exclusions": dict(self.exclusions),
        }

    def to_text_table(self) -> str:
        """Aligned table with one row per metric and one column per algorithm."""
        headers = ["", *[a.upper() for a in self.algorithms]]
        rows = [
            ["NRMSE", *[f"{self.metrics[a].nrmse:.4f}" for a in self.algorithms]],
            *[
                [f"TOP {k}", *[f"{self.metrics[a].top_k.get(k, float('nan')):.4f}" for a in self.algorithms]]
                for k in (1, 2, 3)
            ],
        ]
        widths = [max(len(r[c]) for r in [headers, *rows]) for c in range(len(headers))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in [headers, *rows]]
        return "\n".join(lines) + "\n"


def _solve_many(
    solver: Callable[[int], np.ndarray],
    count: int,
    threads: int,
) -> tuple[list[np.ndarray | None], int]:
    """Run a per-vignette solver over the dataset, collecting failures as None."""

    def safe(ell: int) -> np.ndarray | None:
        try:
            return solver(ell)
        except (AmpdxError, np.linalg.LinAlgError):
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(safe, range(count)))
    else:
        results = [safe(ell) for ell in range(count)]
    excluded = sum(r is None for r in results)
    return results, excluded


def run_benchmark(
    matrix: KnowledgeMatrix,
    observations: Sequence[SymptomObservation],
    truths: np.ndarray,
    algorithms: Sequence[str] = ALGORITHMS,
    config: BenchmarkConfig | None = None,
    seed: int | None = None,
    config_echo: Mapping[str, object] | None = None,
) -> BenchmarkReport:
    """Evaluate the selected algorithms on a vignette set and build the report.

    The ADMM column follows the sweep protocol: every rho in the grid is a
    full experiment over the dataset and the reported column is the rho with
    the best aggregate symptom-space NRMSE.
    """
    config = config or BenchmarkConfig()
    if not observations:
        raise DataError("empty dataset: no vignettes to evaluate")
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise DataError(f"unknown algorithm(s): {', '.join(unknown)}")
    if not algorithms:
        raise DataError("no algorithms selected")

    a = matrix.entries
    truths = np.asarray(truths, dtype=np.float64)
    count = len(observations)
    if truths.shape != (count, matrix.n):
        raise DataError(f"truths shape {truths.shape} does not match ({count}, {matrix.n})")
    resolved = np.stack([obs.resolved() for obs in observations])

    reference_energy = float(np.mean(np.sum((truths @ a.T) ** 2, axis=1)))
    noise = config.noise or snr_to_noise_precision(config.snr_db, reference_energy, matrix.m)
    prior = config.prior or PriorModel(sparsity_rate=1.0 / matrix.n)
    channel = ChannelModel(noise=noise)
    factorization = LmmseFactorization.from_matrix(matrix)

    metrics: dict[str, Metrics] = {}
    exclusions: dict[str, int] = {}
    echo: dict[str, object] = {
        "prng": PRNG_NAME,
        "snr_db": config.snr_db if config.noise is None else noise.snr_db,
        "noise_precision": noise.noise_precision,
        "prior": {"kind": prior.kind, "sparsity_rate": prior.sparsity_rate},
        "gvamp": {
            "max_iterations": config.gvamp.max_iterations,
            "tolerance": config.gvamp.tolerance,
            "damping": config.gvamp.damping,
            "init_precision": config.gvamp.init_precision,
        },
        "scan_support_sizes": list(config.scan.support_sizes),
        "threads": config.threads,
    }
    if config_echo:
        echo.update(config_echo)

    for name in algorithms:
        if name == "gvamp":
            def solver(ell: int) -> np.ndarray:
                return run_gvamp(
                    matrix, observations[ell], prior, channel, config.gvamp, factorization
                ).estimate

            results, excluded = _solve_many(solver, count, config.threads)
        elif name == "uls":
            def solver(ell: int) -> np.ndarray:
                return solve_uls(a, resolved[ell])

            results, excluded = _solve_many(solver, count, config.threads)
        elif name == "scan":
            def solver(ell: int) -> np.ndarray:
                return solve_sparse_scan(a, resolved[ell], config.scan)

            results, excluded = _solve_many(solver, count, config.threads)
        else:  # admm: sweep every rho over the whole set, then pick the best rho
            def solver(ell: int) -> np.ndarray:
                return solve_admm(a, resolved[ell], config.admm).solutions

            sweeps, excluded = _solve_many(solver, count, config.threads)
            kept = [(ell, sw) for ell, sw in enumerate(sweeps) if sw is not None]
            if not kept:
                raise DataError("admm failed on every vignette")
            rho_grid = config.admm.rho_grid
            per_rho_nrmse = []
            for k in range(len(rho_grid)):
                batch = [(a, truths[ell], sw[k]) for ell, sw in kept]
                per_rho_nrmse.append(nrmse(batch))
            best_k = int(np.argmin(per_rho_nrmse))
            results = [None] * count
            for ell, sw in kept:
                results[ell] = sw[best_k]
            echo["admm"] = {
                "best_rho": float(rho_grid[best_k]),
                "rho_grid_size": len(rho_grid),
                "l1_weight": config.admm.l1_weight
                if config.admm.l1_weight is not None
                else "0.1*max|A^T s| per vignette",
                "max_iterations": config.admm.max_iterations,
                "tolerance": config.admm.tolerance,
            }

        kept_pairs = [(truths[ell], r) for ell, r in enumerate(results) if r is not None]
        if not kept_pairs:
            raise DataError(f"algorithm {name} failed on every vignette")
        kept_truths = np.stack([t for t, _ in kept_pairs])
        estimates = [r for _, r in kept_pairs]
        metrics[name] = _metrics_from_estimates(a, kept_truths, estimates)
        exclusions[name] = excluded

    return BenchmarkReport(
        algorithms=tuple(algorithms),
        metrics=metrics,
        exclusions=exclusions,
        config_echo=echo,
        seed=seed,
    )


__all__ = [
    "ALGORITHMS",
    "BenchmarkConfig",
    "BenchmarkReport",
    "GeneratorConfig",
    "Metrics",
    "PRNG_NAME",
    "REPORT_SCHEMA",
    "SyntheticDataset",
    "generate_synthetic",
    "nrmse",
    "random_knowledge_matrix",
    "rank_of_truth",
    "run_benchmark",
    "solve_case",
    "topk_accuracy",
]
