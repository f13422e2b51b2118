"""Posterior-mean denoisers for the disease prior and the symptom channel.

Each denoiser combines a Gaussian pseudo-measurement ``N(x; pseudo_mean,
1/pseudo_precision)`` with either the sparse disease prior or the observation
likelihood, and returns the componentwise posterior mean plus the average
posterior variance.  Closed forms are paired with adaptive-quadrature
versions that serve as independent oracles.

All functions are pure and freely parallelizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfcx, expit, ndtr

from .model import DataError, NoiseModel, NumericalError, SymptomObservation

PRIOR_KINDS = ("bernoulli", "bernoulli-gaussian")
CHANNEL_KINDS = ("sign", "linear-awgn")

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PriorModel:
    """Sparse prior on disease activations.

    ``bernoulli`` places mass ``sparsity_rate`` on the value 1 and the rest on
    0; ``bernoulli-gaussian`` replaces the unit atom with a Gaussian slab
    N(slab_mean, slab_variance).
    """

    sparsity_rate: float
    kind: str = "bernoulli"
    slab_mean: float = 1.0
    slab_variance: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in PRIOR_KINDS:
            raise DataError(f"unknown prior kind {self.kind!r}; expected one of {PRIOR_KINDS}")
        if not 0.0 < self.sparsity_rate < 1.0:
            raise DataError(f"sparsity rate must lie in (0, 1), got {self.sparsity_rate}")
        if self.kind == "bernoulli-gaussian" and not self.slab_variance > 0:
            raise DataError(f"slab variance must be positive, got {self.slab_variance}")

    def mean(self) -> float:
        """Prior mean of a single component."""
        if self.kind == "bernoulli":
            return self.sparsity_rate
        return self.sparsity_rate * self.slab_mean


@dataclass(frozen=True)
class ChannelModel:
    """Observation channel: 1-bit sign or plain linear-AWGN.

    ``missing_mask`` optionally forces extra entries to be treated as
    unobserved on top of the missing entries of the observation itself.
    """

    noise: NoiseModel
    kind: str = "sign"
    missing_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in CHANNEL_KINDS:
            raise DataError(f"unknown channel kind {self.kind!r}; expected one of {CHANNEL_KINDS}")
        if self.missing_mask is not None:
            mask = np.asarray(self.missing_mask, dtype=bool).copy()
            mask.setflags(write=False)
            object.__setattr__(self, "missing_mask", mask)


@dataclass(frozen=True)
class DenoiseResult:
    """Posterior mean vector and the average posterior variance across components."""

    mean: np.ndarray
    avg_variance: float

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        if not np.all(np.isfinite(mean)):
            raise NumericalError("denoiser produced a non-finite posterior mean")
        if not (np.isfinite(self.avg_variance) and self.avg_variance >= 0):
            raise NumericalError(f"denoiser produced invalid avg variance {self.avg_variance}")
        mean = mean.copy()
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)


def _check_precision(value: float, name: str) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise DataError(f"{name} must be positive and finite, got {value}")
    return value


# ---------------------------------------------------------------------------
# Prior denoisers


def denoise_prior(pseudo_mean: np.ndarray, pseudo_precision: float, prior: PriorModel) -> DenoiseResult:
    """Componentwise posterior mean of d under prior x N(d; pseudo_mean, 1/precision)."""
    gamma = _check_precision(pseudo_precision, "pseudo precision")
    r = np.asarray(pseudo_mean, dtype=np.float64)

    if prior.kind == "bernoulli":
        # atoms {0, 1}: posterior odds are a logistic in the pseudo-mean
        log_odds = _logit(prior.sparsity_rate) + gamma * (r - 0.5)
        mean = expit(log_odds)
        variance = mean * (1.0 - mean)  # E[d^2] = E[d] for a {0,1} variable
        return DenoiseResult(mean=mean, avg_variance=float(variance.mean()))

    # spike-and-slab: Gaussian slab posterior weighted by evidence odds
    slab_prec = 1.0 / prior.slab_variance
    post_var = 1.0 / (slab_prec + gamma)
    post_mean = post_var * (prior.slab_mean * slab_prec + gamma * r)
    log_slab = _log_normal_pdf(r, prior.slab_mean, prior.slab_variance + 1.0 / gamma)
    log_spike = _log_normal_pdf(r, 0.0, 1.0 / gamma)
    slab_weight = expit(_logit(prior.sparsity_rate) + log_slab - log_spike)
    mean = slab_weight * post_mean
    second_moment = slab_weight * (post_mean**2 + post_var)
    variance = np.maximum(second_moment - mean**2, 0.0)
    return DenoiseResult(mean=mean, avg_variance=float(variance.mean()))


def denoise_prior_quadrature(
    pseudo_mean: np.ndarray,
    pseudo_precision: float,
    prior: PriorModel,
    abs_tol: float = 1e-9,
) -> DenoiseResult:
    """Oracle version of :func:`denoise_prior` via direct integration.

    The bernoulli prior is a two-atom measure, so its integrals reduce to
    exact sums; the bernoulli-gaussian slab is integrated with adaptive
    quadrature.
    """
    gamma = _check_precision(pseudo_precision, "pseudo precision")
    r = np.atleast_1d(np.asarray(pseudo_mean, dtype=np.float64))
    rho = prior.sparsity_rate

    means = np.empty_like(r)
    variances = np.empty_like(r)
    for i, ri in enumerate(r):
        if prior.kind == "bernoulli":
            # two-atom measure: exact enumeration, log-domain for tail safety
            log_w0 = math.log1p(-rho) + float(_log_normal_pdf(np.array(ri), 0.0, 1.0 / gamma))
            log_w1 = math.log(rho) + float(_log_normal_pdf(np.array(ri), 1.0, 1.0 / gamma))
            p1 = float(expit(log_w1 - log_w0))
            means[i] = p1
            variances[i] = p1 - p1**2
        else:
            sigma = math.sqrt(prior.slab_variance)
            width = 12.0 * max(sigma, 1.0 / math.sqrt(gamma))
            lo = min(prior.slab_mean, ri) - width
            hi = max(prior.slab_mean, ri) + width

            def integrand(d: float, power: int, ri: float = ri) -> float:
                return (
                    d**power
                    * _normal_pdf(d, prior.slab_mean, prior.slab_variance)
                    * _normal_pdf(d, ri, 1.0 / gamma)
                )

            den_slab = _quad(lambda d: integrand(d, 0), lo, hi, abs_tol)
            num1 = _quad(lambda d: integrand(d, 1), lo, hi, abs_tol)
            num2 = _quad(lambda d: integrand(d, 2), lo, hi, abs_tol)
            spike = (1.0 - rho) * _normal_pdf(ri, 0.0, 1.0 / gamma)
            den = spike + rho * den_slab
            mean = rho * num1 / den
            second = rho * num2 / den
            means[i] = mean
            variances[i] = max(second - mean**2, 0.0)
    return DenoiseResult(mean=means, avg_variance=float(variances.mean()))


# ---------------------------------------------------------------------------
# Channel denoisers


def denoise_channel_sign(
    pseudo_mean: np.ndarray,
    pseudo_precision: float,
    obs: SymptomObservation,
    noise: NoiseModel,
) -> DenoiseResult:
    """Posterior mean of z given s = sign(z + w) and pseudo-prior N(z, 1/precision).

    Missing entries pass through unchanged with variance 1/pseudo_precision.
    The average variance uses the identity var = (1/gamma) * d(mean)/d(pseudo_mean),
    evaluated in closed form.
    """
    gamma_z = _check_precision(pseudo_precision, "pseudo precision")
    return _sign_core(pseudo_mean, gamma_z, obs.signs(), obs.missing_mask, noise.noise_precision)


def _sign_core(
    pseudo_mean: np.ndarray,
    gamma_z: float,
    signs: np.ndarray,
    missing: np.ndarray,
    gamma_w: float,
) -> DenoiseResult:
    z_hat = np.asarray(pseudo_mean, dtype=np.float64)
    if z_hat.shape != signs.shape:
        raise DataError(f"pseudo-mean shape {z_hat.shape} does not match observation {signs.shape}")
    if not gamma_w > 0:
        raise DataError(f"noise precision must be positive, got {gamma_w}")
    # total variance of z + w seen by the sign; gamma_w may be inf (noiseless)
    total_var = 1.0 / gamma_z + (0.0 if math.isinf(gamma_w) else 1.0 / gamma_w)
    scale = 1.0 / math.sqrt(total_var)

    zscore = signs * z_hat * scale
    ratio = _pdf_over_cdf(zscore)
    mean = np.where(missing, z_hat, z_hat + signs * (scale / gamma_z) * ratio)
    var = 1.0 / gamma_z - (scale**2 / gamma_z**2) * ratio * (zscore + ratio)
    var = np.where(missing, 1.0 / gamma_z, np.maximum(var, 0.0))
    return DenoiseResult(mean=mean, avg_variance=float(var.mean()))


def denoise_channel_awgn(
    pseudo_mean: np.ndarray,
    pseudo_precision: float,
    obs: SymptomObservation,
    noise: NoiseModel,
) -> DenoiseResult:
    """Linear channel s = z + w: the Gaussian-Gaussian product posterior."""
    gamma_z = _check_precision(pseudo_precision, "pseudo precision")
    gamma_w = noise.noise_precision
    z_hat = np.asarray(pseudo_mean, dtype=np.float64)
    missing = obs.missing_mask
    post = (gamma_z * z_hat + gamma_w * obs.signs()) / (gamma_z + gamma_w)
    mean = np.where(missing, z_hat, post)
    var = np.where(missing, 1.0 / gamma_z, 1.0 / (gamma_z + gamma_w))
    return DenoiseResult(mean=mean, avg_variance=float(var.mean()))


def denoise_channel(
    pseudo_mean: np.ndarray,
    pseudo_precision: float,
    obs: SymptomObservation,
    channel: ChannelModel,
) -> DenoiseResult:
    """Dispatch on the channel kind, merging the channel's extra missing mask."""
    gamma_z = _check_precision(pseudo_precision, "pseudo precision")
    missing = obs.missing_mask
    if channel.missing_mask is not None:
        if channel.missing_mask.size != obs.m:
            raise DataError(f"channel mask length {channel.missing_mask.size} != M={obs.m}")
        missing = missing | channel.missing_mask
    if channel.kind == "sign":
        return _sign_core(pseudo_mean, gamma_z, obs.signs(), missing, channel.noise.noise_precision)
    res = denoise_channel_awgn(pseudo_mean, gamma_z, obs, channel.noise)
    if channel.missing_mask is not None and channel.missing_mask.any():
        z_hat = np.asarray(pseudo_mean, dtype=np.float64)
        mean = np.where(missing, z_hat, res.mean)
        gamma_w = channel.noise.noise_precision
        var = np.where(missing, 1.0 / gamma_z, 1.0 / (gamma_z + gamma_w))
        return DenoiseResult(mean=mean, avg_variance=float(var.mean()))
    return res


def denoise_channel_quadrature(
    pseudo_mean: np.ndarray,
    pseudo_precision: float,
    obs: SymptomObservation,
    noise: NoiseModel,
    kind: str = "sign",
    abs_tol: float = 1e-9,
) -> DenoiseResult:
    """Oracle channel denoiser: per-component adaptive quadrature of the posterior.

    Serves as the independent reference for :func:`denoise_channel_sign`;
    raises :class:`NumericalError` when the integrator cannot reach ``abs_tol``.
    """
    if kind not in CHANNEL_KINDS:
        raise DataError(f"unknown channel kind {kind!r}")
    gamma_z = _check_precision(pseudo_precision, "pseudo precision")
    gamma_w = noise.noise_precision
    z_hat = np.atleast_1d(np.asarray(pseudo_mean, dtype=np.float64))
    signs = obs.signs()
    missing = obs.missing_mask
    if z_hat.shape != signs.shape:
        raise DataError(f"pseudo-mean shape {z_hat.shape} does not match observation {signs.shape}")

    sigma_z = 1.0 / math.sqrt(gamma_z)
    sigma_w = 0.0 if math.isinf(gamma_w) else 1.0 / math.sqrt(gamma_w)

    means = np.empty_like(z_hat)
    variances = np.empty_like(z_hat)
    for i, (zi, si) in enumerate(zip(z_hat, signs)):
        if missing[i]:
            means[i] = zi
            variances[i] = 1.0 / gamma_z
            continue

        if kind == "sign":
            if math.isinf(gamma_w):
                def likelihood(z: float, si: float = si) -> float:
                    return 1.0 if si * z > 0 else 0.0
            else:
                def likelihood(z: float, si: float = si) -> float:
                    return ndtr(si * z / sigma_w)
            lo = min(zi - 40.0 * sigma_z, -8.0 * sigma_z)
            hi = max(zi + 40.0 * sigma_z, 8.0 * sigma_z)
            breaks = [0.0] if lo < 0.0 < hi else []
        else:
            def likelihood(z: float, si: float = si) -> float:
                return _normal_pdf(z, si, sigma_w**2)
            lo = min(zi - 40.0 * sigma_z, si - 40.0 * sigma_w)
            hi = max(zi + 40.0 * sigma_z, si + 40.0 * sigma_w)
            breaks = []

        def weighted(z: float, power: int, zi: float = zi) -> float:
            return z**power * likelihood(z) * _normal_pdf(z, zi, sigma_z**2)

        den = _quad(lambda z: weighted(z, 0), lo, hi, abs_tol, breaks)
        num1 = _quad(lambda z: weighted(z, 1), lo, hi, abs_tol, breaks)
        num2 = _quad(lambda z: weighted(z, 2), lo, hi, abs_tol, breaks)
        if den <= 0 or not math.isfinite(den):
            raise NumericalError(f"channel quadrature degenerate at component {i} (mass {den})")
        mean = num1 / den
        means[i] = mean
        variances[i] = max(num2 / den - mean**2, 0.0)
    return DenoiseResult(mean=means, avg_variance=float(variances.mean()))


# ---------------------------------------------------------------------------
# Numerics helpers


def _pdf_over_cdf(t: np.ndarray) -> np.ndarray:
    """phi(t)/Phi(t), stable for arbitrarily negative t via the scaled erfc."""
    return math.sqrt(2.0 / math.pi) / erfcx(-t / math.sqrt(2.0))


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _normal_pdf(x: float | np.ndarray, mean: float, var: float) -> float | np.ndarray:
    return np.exp(-0.5 * (x - mean) ** 2 / var) / (_SQRT_2PI * math.sqrt(var))


def _log_normal_pdf(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    return -0.5 * ((x - mean) ** 2 / var + math.log(2.0 * math.pi * var))


def _quad(fn, lo: float, hi: float, abs_tol: float, breaks: list[float] | None = None) -> float:
    points = breaks if breaks else None
    value, err = integrate.quad(fn, lo, hi, epsabs=min(abs_tol, 1e-12), epsrel=1e-11, limit=300, points=points)
    if err > max(abs_tol, 1e-7 * abs(value)):
        raise NumericalError(f"quadrature did not converge (estimate {value}, error {err})")
    return value


__all__ = [
    "ChannelModel",
    "DenoiseResult",
    "PriorModel",
    "denoise_channel",
    "denoise_channel_awgn",
    "denoise_channel_quadrature",
    "denoise_channel_sign",
    "denoise_prior",
    "denoise_prior_quadrature",
]
