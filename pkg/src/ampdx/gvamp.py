"""Expectation-propagation engine coupling the prior and channel denoisers.

One iteration runs the prior denoiser on d, the channel denoiser on z, then a
joint linear-MMSE block that ties z to A d, with Gaussian extrinsic messages
(mean vector, scalar precision) exchanged between the blocks.  Damping mixes
each freshly computed message with its previous value; precisions are clamped
to a configurable range.

The joint block is solved through a cached eigendecomposition of A^T A, so a
single iteration costs a few matrix-vector products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .denoisers import ChannelModel, DenoiseResult, PriorModel, denoise_channel, denoise_prior
from .model import DataError, KnowledgeMatrix, NumericalError, SymptomObservation

DEFAULT_PRECISION_CLAMP = (1e-11, 1e11)


@dataclass(frozen=True)
class EPMessage:
    """A Gaussian message: mean vector plus one scalar precision."""

    mean: np.ndarray
    precision: float

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        if not np.all(np.isfinite(mean)):
            raise NumericalError("message mean is not finite")
        if not (self.precision > 0 and math.isfinite(self.precision)):
            raise NumericalError(f"message precision must be positive and finite, got {self.precision}")
        mean = mean.copy()
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)


@dataclass(frozen=True)
class GvampConfig:
    max_iterations: int = 200
    tolerance: float = 1e-6
    damping: float = 0.8
    precision_clamp: tuple[float, float] = DEFAULT_PRECISION_CLAMP
    # unit pseudo-variance around the prior mean; diffuse starts let the first
    # channel posterior run wild and lock the iteration into bad fixed points
    init_precision: float = 1.0
    #: precision of the z ~ A d coupling in the joint block; None means "use
    #: the channel's noise precision"
    coupling_precision: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.damping <= 1.0:
            raise DataError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tolerance > 0:
            raise DataError(f"tolerance must be positive, got {self.tolerance}")
        lo, hi = self.precision_clamp
        if not 0 < lo < hi:
            raise DataError(f"invalid precision clamp range ({lo}, {hi})")
        if self.max_iterations < 1:
            raise DataError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.init_precision > 0:
            raise DataError(f"init precision must be positive, got {self.init_precision}")


@dataclass(frozen=True)
class IterationTrace:
    """Per-iteration diagnostics: relative change of the estimate and the four extrinsic precisions."""

    delta: float
    gamma_d_to_lmmse: float
    gamma_z_to_lmmse: float
    gamma_d_to_prior: float
    gamma_z_to_channel: float
    clamps: int


@dataclass(frozen=True)
class GvampOutput:
    estimate: np.ndarray
    iterations_used: int
    converged: bool
    trace: tuple[IterationTrace, ...]
    clamp_events: int = 0


class LmmseFactorization:
    """Cached eigendecomposition of A^T A for the joint Gaussian block.

    The matrix is fixed across iterations and vignettes, so the O(N^3) work
    happens once; each solve is then a couple of matvecs plus a diagonal
    rescale.  Instances are immutable and safe to share across threads.
    """

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DataError(f"expected a 2-D matrix, got shape {matrix.shape}")
        self.matrix = matrix.copy()
        self.matrix.setflags(write=False)
        gram = matrix.T @ matrix
        eigvals, eigvecs = np.linalg.eigh(gram)
        self.eigvals = np.maximum(eigvals, 0.0)  # clip tiny negative round-off
        self.eigvecs = eigvecs
        self.eigvals.setflags(write=False)
        self.eigvecs.setflags(write=False)

    @classmethod
    def from_matrix(cls, matrix: KnowledgeMatrix | np.ndarray) -> "LmmseFactorization":
        entries = matrix.entries if isinstance(matrix, KnowledgeMatrix) else matrix
        return cls(entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def denoise(
        self, d_msg: EPMessage, z_msg: EPMessage, coupling_precision: float
    ) -> tuple[DenoiseResult, DenoiseResult]:
        m, n = self.matrix.shape
        if d_msg.mean.size != n or z_msg.mean.size != m:
            raise DataError(
                f"message sizes ({d_msg.mean.size}, {z_msg.mean.size}) do not match matrix {m}x{n}"
            )
        gamma_d = d_msg.precision
        gamma_z = z_msg.precision
        gamma_c = coupling_precision
        if not gamma_c > 0:
            raise DataError(f"coupling precision must be positive, got {gamma_c}")

        # series combination of the z pseudo-prior and the coupling
        if math.isinf(gamma_c):
            gamma_t = gamma_z
            blend = 1.0  # z collapses onto A d
        else:
            gamma_t = gamma_c * gamma_z / (gamma_z + gamma_c)
            blend = gamma_c / (gamma_z + gamma_c)

        rhs = gamma_d * d_msg.mean + gamma_t * (self.matrix.T @ z_msg.mean)
        spectrum = gamma_d + gamma_t * self.eigvals
        d_mean = self.eigvecs @ ((self.eigvecs.T @ rhs) / spectrum)
        d_var = float(np.mean(1.0 / spectrum))

        z_mean = (1.0 - blend) * z_msg.mean + blend * (self.matrix @ d_mean)
        propagated = float(np.sum(self.eigvals / spectrum)) / m
        base = 0.0 if math.isinf(gamma_c) else 1.0 / (gamma_z + gamma_c)
        z_var = base + blend**2 * propagated
        return (
            DenoiseResult(mean=d_mean, avg_variance=d_var),
            DenoiseResult(mean=z_mean, avg_variance=z_var),
        )


def lmmse_denoise(
    d_msg: EPMessage,
    z_msg: EPMessage,
    matrix: KnowledgeMatrix | np.ndarray,
    coupling_precision: float,
    factorization: LmmseFactorization | None = None,
) -> tuple[DenoiseResult, DenoiseResult]:
    """Joint Gaussian denoiser of (d, z) under the pseudo-priors and z ~ A d.

    Returns the unique minimizer of
    ``gamma_d ||d - d_msg||^2 + gamma_z ||z - z_msg||^2 + gamma_c ||z - A d||^2``
    together with the average variance of each block of the joint covariance.
    """
    fac = factorization or LmmseFactorization.from_matrix(matrix)
    return fac.denoise(d_msg, z_msg, coupling_precision)


def extrinsic_update(
    posterior: DenoiseResult,
    incoming: EPMessage,
    clamp: tuple[float, float] = DEFAULT_PRECISION_CLAMP,
) -> tuple[EPMessage, bool]:
    """Divide the incoming pseudo-prior out of a posterior approximation.

    Returns the extrinsic message and whether the precision hit the clamp
    range.  A degenerate subtraction (posterior no sharper than the incoming
    message) clamps the precision to the lower bound and passes the posterior
    mean through.
    """
    lo, hi = clamp
    post_precision = 1.0 / max(posterior.avg_variance, 1.0 / hi)
    raw = post_precision - incoming.precision
    if raw < lo:
        return EPMessage(mean=posterior.mean, precision=lo), True
    mean = (post_precision * posterior.mean - incoming.precision * incoming.mean) / raw
    if raw > hi:
        return EPMessage(mean=mean, precision=hi), True
    return EPMessage(mean=mean, precision=raw), False


def _damped(previous: EPMessage | None, new: EPMessage, eta: float) -> EPMessage:
    if previous is None or eta >= 1.0:
        return new
    return EPMessage(
        mean=eta * new.mean + (1.0 - eta) * previous.mean,
        precision=eta * new.precision + (1.0 - eta) * previous.precision,
    )


def run_gvamp(
    matrix: KnowledgeMatrix | np.ndarray,
    obs: SymptomObservation,
    prior: PriorModel,
    channel: ChannelModel,
    config: GvampConfig | None = None,
    factorization: LmmseFactorization | None = None,
) -> GvampOutput:
    """Run the full message-passing schedule until the estimate stabilizes.

    Schedule per iteration: prior denoiser -> channel denoiser -> joint LMMSE
    block, each followed by an extrinsic update toward the next block.  The
    deliverable estimate is the prior-block posterior mean computed from the
    freshest messages; convergence is its relative l2 change.
    """
    config = config or GvampConfig()
    fac = factorization or LmmseFactorization.from_matrix(matrix)
    m, n = fac.shape
    if obs.m != m:
        raise DataError(f"observation length {obs.m} does not match matrix M={m}")
    gamma_c = config.coupling_precision
    if gamma_c is None:
        gamma_c = channel.noise.noise_precision
    eta = config.damping
    clamp = config.precision_clamp

    prior_mean = np.full(n, prior.mean())
    msg_to_prior = EPMessage(mean=prior_mean, precision=config.init_precision)
    msg_to_channel = EPMessage(mean=fac.matrix @ prior_mean, precision=config.init_precision)
    msg_d_to_lmmse: EPMessage | None = None
    msg_z_to_lmmse: EPMessage | None = None
    # init messages are starting points, not iterates: first update replaces them
    damp_base: dict[str, EPMessage | None] = {k: None for k in ("d_up", "z_up", "d_down", "z_down")}

    estimate = prior_mean
    trace: list[IterationTrace] = []
    clamp_events = 0
    converged = False
    iterations = 0

    for iterations in range(1, config.max_iterations + 1):
        clamps = 0
        stage = "prior denoiser"
        try:
            post_d = denoise_prior(msg_to_prior.mean, msg_to_prior.precision, prior)
            ext, hit = extrinsic_update(post_d, msg_to_prior, clamp)
            clamps += hit
            msg_d_to_lmmse = _damped(damp_base["d_up"], ext, eta)
            damp_base["d_up"] = msg_d_to_lmmse

            stage = "channel denoiser"
            post_z = denoise_channel(msg_to_channel.mean, msg_to_channel.precision, obs, channel)
            ext, hit = extrinsic_update(post_z, msg_to_channel, clamp)
            clamps += hit
            msg_z_to_lmmse = _damped(damp_base["z_up"], ext, eta)
            damp_base["z_up"] = msg_z_to_lmmse

            stage = "lmmse block"
            lmmse_d, lmmse_z = fac.denoise(msg_d_to_lmmse, msg_z_to_lmmse, gamma_c)
            stage = "extrinsic toward prior"
            ext, hit = extrinsic_update(lmmse_d, msg_d_to_lmmse, clamp)
            clamps += hit
            msg_to_prior = _damped(damp_base["d_down"], ext, eta)
            damp_base["d_down"] = msg_to_prior
            stage = "extrinsic toward channel"
            ext, hit = extrinsic_update(lmmse_z, msg_z_to_lmmse, clamp)
            clamps += hit
            msg_to_channel = _damped(damp_base["z_down"], ext, eta)
            damp_base["z_down"] = msg_to_channel

            stage = "estimate"
            new_estimate = denoise_prior(msg_to_prior.mean, msg_to_prior.precision, prior).mean
        except NumericalError as exc:
            raise NumericalError(f"iteration {iterations}, {stage}: {exc}") from exc

        norm = np.linalg.norm(new_estimate)
        delta = float(np.linalg.norm(new_estimate - estimate) / norm) if norm > 0 else float(
            np.linalg.norm(new_estimate - estimate)
        )
        estimate = new_estimate
        clamp_events += clamps
        trace.append(
            IterationTrace(
                delta=delta,
                gamma_d_to_lmmse=msg_d_to_lmmse.precision,
                gamma_z_to_lmmse=msg_z_to_lmmse.precision,
                gamma_d_to_prior=msg_to_prior.precision,
                gamma_z_to_channel=msg_to_channel.precision,
                clamps=clamps,
            )
        )
        if delta < config.tolerance:
            converged = True
            break

    return GvampOutput(
        estimate=estimate,
        iterations_used=iterations,
        converged=converged,
        trace=tuple(trace),
        clamp_events=clamp_events,
    )


__all__ = [
    "DEFAULT_PRECISION_CLAMP",
    "EPMessage",
    "GvampConfig",
    "GvampOutput",
    "IterationTrace",
    "LmmseFactorization",
    "extrinsic_update",
    "lmmse_denoise",
    "run_gvamp",
]
