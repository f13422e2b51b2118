"""Comparison solvers: minimum-norm least squares, ADMM lasso, support scan.

All three fit the observation vector s in {+1, -1}^M directly (missing entries
must be resolved to -1 beforehand); none of them uses the sign channel model.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import DataError, KnowledgeMatrix

PINV_CUTOFF = 1e-10


def _entries(matrix: KnowledgeMatrix | np.ndarray) -> np.ndarray:
    return matrix.entries if isinstance(matrix, KnowledgeMatrix) else np.asarray(matrix, dtype=np.float64)


def _check_signs(s: np.ndarray, m: int) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (m,):
        raise DataError(f"observation shape {s.shape} does not match matrix M={m}")
    if not np.all(np.isfinite(s)):
        raise DataError("observation vector contains non-finite entries")
    if np.any(s == 0.0):
        raise DataError("baseline solvers need missing entries resolved to +1/-1 first")
    return s


def solve_uls(matrix: KnowledgeMatrix | np.ndarray, s: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution via the rank-revealing pseudoinverse."""
    a = _entries(matrix)
    s = _check_signs(s, a.shape[0])
    return np.linalg.pinv(a, rcond=PINV_CUTOFF) @ s


def default_rho_grid() -> tuple[float, ...]:
    """0.1, 0.2, ..., 5.0 (the degenerate rho = 0 is excluded)."""
    return tuple(np.round(np.arange(1, 51) * 0.1, 10))


@dataclass(frozen=True)
class AdmmConfig:
    rho_grid: tuple[float, ...] = default_rho_grid()
    #: None means the data-driven default 0.1 * ||A^T s||_inf, recorded per call
    l1_weight: float | None = None
    max_iterations: int = 500
    tolerance: float = 1e-8

    def __post_init__(self) -> None:
        if not self.rho_grid or any(r <= 0 for r in self.rho_grid):
            raise DataError("rho grid must be non-empty with strictly positive values")
        if self.l1_weight is not None and self.l1_weight < 0:
            raise DataError(f"l1 weight must be non-negative, got {self.l1_weight}")


@dataclass
class AdmmSweepResult:
    rhos: tuple[float, ...]
    solutions: np.ndarray  # (len(rhos), N)
    objectives: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray  # bool per rho; cap reached without tolerance stays False
    l1_weight: float
    best_index: int
    best_rho: float
    best: np.ndarray


def lasso_objective(matrix: KnowledgeMatrix | np.ndarray, s: np.ndarray, d: np.ndarray, l1_weight: float) -> float:
    a = _entries(matrix)
    return float(0.5 * np.sum((s - a @ d) ** 2) + l1_weight * np.sum(np.abs(d)))


def soft_threshold(x: np.ndarray, threshold: float | np.ndarray) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def solve_admm(
    matrix: KnowledgeMatrix | np.ndarray,
    s: np.ndarray,
    config: AdmmConfig | None = None,
    truth: np.ndarray | None = None,
) -> AdmmSweepResult:
    """Scaled-form ADMM for min 1/2 ||s - A d||^2 + lambda ||d||_1, swept over rho.

    The whole rho grid is iterated simultaneously off one eigendecomposition
    of A^T A; converged grid points are frozen.  "Best" is the rho minimizing
    the symptom-space error against ``truth`` when given (benchmark mode),
    otherwise the rho minimizing the lasso objective.
    """
    config = config or AdmmConfig()
    a = _entries(matrix)
    m, n = a.shape
    s = _check_signs(s, m)
    at_s = a.T @ s
    lam = config.l1_weight if config.l1_weight is not None else 0.1 * float(np.max(np.abs(at_s)))

    rhos = np.asarray(config.rho_grid, dtype=np.float64)
    n_rho = rhos.size
    eigvals, eigvecs = np.linalg.eigh(a.T @ a)
    eigvals = np.maximum(eigvals, 0.0)

    x = np.zeros((n_rho, n))
    z = np.zeros((n_rho, n))
    u = np.zeros((n_rho, n))
    iterations = np.full(n_rho, config.max_iterations)
    active = np.ones(n_rho, dtype=bool)

    for it in range(1, config.max_iterations + 1):
        # x-update: (A^T A + rho I)^-1 (A^T s + rho (z - u)) for every rho at once
        q = at_s[None, :] + rhos[:, None] * (z - u)
        x_new = ((q @ eigvecs) / (eigvals[None, :] + rhos[:, None])) @ eigvecs.T
        z_new = soft_threshold(x_new + u, lam / rhos[:, None])
        u_new = u + x_new - z_new

        x = np.where(active[:, None], x_new, x)
        z_prev = z
        z = np.where(active[:, None], z_new, z)
        u = np.where(active[:, None], u_new, u)

        primal = np.linalg.norm(x - z, axis=1)
        dual = rhos * np.linalg.norm(z - z_prev, axis=1)
        done = active & (primal < config.tolerance) & (dual < config.tolerance)
        iterations[done] = it
        active &= ~done
        if not active.any():
            break

    objectives = np.array([lasso_objective(a, s, z[k], lam) for k in range(n_rho)])
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64)
        reference = a @ truth
        scores = np.array([np.linalg.norm(reference - a @ z[k]) for k in range(n_rho)])
    else:
        scores = objectives
    best_index = int(np.argmin(scores))
    return AdmmSweepResult(
        rhos=tuple(rhos.tolist()),
        solutions=z,
        objectives=objectives,
        iterations=iterations,
        converged=~active,
        l1_weight=lam,
        best_index=best_index,
        best_rho=float(rhos[best_index]),
        best=z[best_index],
    )


@dataclass(frozen=True)
class SparseScanConfig:
    support_sizes: tuple[int, ...] = (1, 2)
    max_supports: int = 10**6

    def __post_init__(self) -> None:
        if not self.support_sizes or any(k < 1 for k in self.support_sizes):
            raise DataError("support sizes must be >= 1")


def solve_sparse_scan(
    matrix: KnowledgeMatrix | np.ndarray,
    s: np.ndarray,
    config: SparseScanConfig | None = None,
) -> np.ndarray:
    """Exhaustive search over small supports, restricted least squares each.

    Ties in residual go to the smaller support, then to lexicographic support
    order (guaranteed by the enumeration order and strict improvement).
    """
    config = config or SparseScanConfig()
    a = _entries(matrix)
    m, n = a.shape
    s = _check_signs(s, m)
    sizes = sorted(set(config.support_sizes))
    if sizes[-1] > n:
        raise DataError(f"support size {sizes[-1]} exceeds N={n}")
    total = sum(math.comb(n, k) for k in sizes)
    if total > config.max_supports:
        raise DataError(f"{total} candidate supports exceed the budget {config.max_supports}")

    gram = a.T @ a
    corr = a.T @ s
    s_energy = float(s @ s)

    best_residual_sq = math.inf
    best_support: tuple[int, ...] = ()
    best_coeffs: np.ndarray = np.zeros(0)
    for k in sizes:
        for support in itertools.combinations(range(n), k):
            idx = list(support)
            sub_gram = gram[np.ix_(idx, idx)]
            sub_corr = corr[idx]
            try:
                coeffs = np.linalg.solve(sub_gram, sub_corr)
            except np.linalg.LinAlgError:
                coeffs = np.linalg.pinv(sub_gram) @ sub_corr
            residual_sq = s_energy - float(sub_corr @ coeffs)
            if residual_sq < best_residual_sq:
                best_residual_sq = residual_sq
                best_support = support
                best_coeffs = coeffs

    out = np.zeros(n)
    out[list(best_support)] = best_coeffs
    return out


__all__ = [
    "AdmmConfig",
    "AdmmSweepResult",
    "SparseScanConfig",
    "default_rho_grid",
    "lasso_objective",
    "soft_threshold",
    "solve_admm",
    "solve_sparse_scan",
    "solve_uls",
]
