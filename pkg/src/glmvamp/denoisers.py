"""Separable denoisers for the prior side and the channel side.

Each denoiser takes a pseudo-measurement (center vector r or p observed at
scalar precision gamma or tau) and returns the entrywise posterior mean or
mode together with its divergence, i.e. the average derivative of the map
with respect to its input. For MMSE denoisers the divergence is computed
through the identity divergence = precision * mean(posterior variance).
"""

import numpy as np
from scipy import special

from .model import (
    AWGN,
    BERNOULLI_GAUSSIAN,
    LAPLACIAN,
    MAP,
    MMSE,
    PROBIT,
    ChannelSpec,
    DenoiserResult,
    PriorSpec,
    PseudoMeasurement,
)

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)

# Below this argument the normal cdf underflows long before the pdf does, so
# phi/Phi is evaluated through the scaled complementary error function.
_MILLS_SWITCH = -6.0


def mills_ratio(z):
    """phi(z) / Phi(z), stable over the whole real line.

    For z < -6 uses phi/Phi = sqrt(2/pi) / erfcx(-z/sqrt(2)), which never
    underflows; elsewhere the direct ratio is accurate.
    """
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    low = z < _MILLS_SWITCH
    if np.any(low):
        out[low] = _SQRT_2_OVER_PI / special.erfcx(-z[low] / np.sqrt(2.0))
    if np.any(~low):
        zh = z[~low]
        out[~low] = np.exp(-0.5 * zh**2) / (_SQRT_2PI * special.ndtr(zh))
    return out if out.ndim else float(out)


def _require_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(np.atleast_1d(arr)))[0])
        raise FloatingPointError(f"{what} is non-finite at index {bad}")


def denoise_prior(spec: PriorSpec, pm: PseudoMeasurement) -> DenoiserResult:
    """Entrywise posterior mean (MMSE) or mode (MAP) under the given prior.

    The posterior per entry is b(x; r, gamma) proportional to
    p(x) * N(x; r, 1/gamma) with r = pm.center and gamma = pm.precision.
    """
    if spec.kind == BERNOULLI_GAUSSIAN:
        return _bernoulli_gaussian_mmse(spec, pm)
    if spec.mode == MAP:
        return _laplacian_map(spec, pm)
    return _laplacian_mmse(spec, pm)


def _bernoulli_gaussian_mmse(spec, pm):
    r, gamma = pm.center, pm.precision
    # Slab posterior: product of N(x; 0, sigma2) and N(x; r, 1/gamma).
    vhat = spec.sigma2 / (1.0 + gamma * spec.sigma2)
    mhat = gamma * vhat * r
    if spec.rho >= 1.0:
        value = mhat
        var = np.full_like(r, vhat)
    else:
        # Posterior slab probability via the evidence log-odds
        #   log N(r; 0, sigma2 + 1/gamma) - log N(r; 0, 1/gamma)
        #     = -0.5*log(1 + gamma*sigma2) + mhat^2 / (2*vhat).
        log_odds = (
            np.log(spec.rho / (1.0 - spec.rho))
            - 0.5 * np.log1p(gamma * spec.sigma2)
            + 0.5 * mhat**2 / vhat
        )
        pi = special.expit(log_odds)
        value = pi * mhat
        var = pi * vhat + pi * (1.0 - pi) * mhat**2
    _require_finite(value, "bernoulli-gaussian posterior mean")
    _require_finite(var, "bernoulli-gaussian posterior variance")
    return DenoiserResult(value=value, divergence=gamma * float(np.mean(var)), variance=var)


def _laplacian_map(spec, pm):
    # Soft threshold: argmin 0.5*gamma*(x - r)^2 + lam*|x|.
    r, gamma = pm.center, pm.precision
    thr = spec.lam / gamma
    value = np.sign(r) * np.maximum(np.abs(r) - thr, 0.0)
    active = np.abs(r) > thr
    return DenoiserResult(value=value, divergence=float(np.mean(active)), variance=None)


def _laplacian_mmse(spec, pm):
    # Posterior is a mixture of two one-sided truncated Gaussians with
    # centers r -/+ lam/gamma (positive/negative half-lines).
    r, gamma = pm.center, pm.precision
    sig2 = 1.0 / gamma
    sig = np.sqrt(sig2)
    a_pos = (r - spec.lam * sig2) / sig
    a_neg = (r + spec.lam * sig2) / sig

    # Relative log-masses of the two sides; the common factor
    # lam^2*sig2/2 + log(lam/2) cancels in the weights.
    log_w_pos = -spec.lam * r + special.log_ndtr(a_pos)
    log_w_neg = spec.lam * r + special.log_ndtr(-a_neg)
    w_pos = special.expit(log_w_pos - log_w_neg)
    w_neg = 1.0 - w_pos

    rp = mills_ratio(a_pos)
    rn = mills_ratio(-a_neg)
    mean_pos = (r - spec.lam * sig2) + sig * rp
    mean_neg = (r + spec.lam * sig2) - sig * rn
    var_pos = sig2 * (1.0 - a_pos * rp - rp**2)
    var_neg = sig2 * (1.0 + a_neg * rn - rn**2)

    value = w_pos * mean_pos + w_neg * mean_neg
    second = w_pos * (var_pos + mean_pos**2) + w_neg * (var_neg + mean_neg**2)
    var = np.maximum(second - value**2, 0.0)
    _require_finite(value, "laplacian posterior mean")
    _require_finite(var, "laplacian posterior variance")
    return DenoiserResult(value=value, divergence=gamma * float(np.mean(var)), variance=var)


def denoise_channel(spec: ChannelSpec, pm: PseudoMeasurement, y) -> DenoiserResult:
    """Entrywise posterior mean of z under prior N(p, 1/tau) and channel y|z.

    pm.center is the pseudo-prior mean p, pm.precision is tau, and y holds
    the observed measurements (real for awgn, in {-1, +1} for probit).
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != pm.center.shape:
        raise ValueError(f"y has shape {y.shape}, expected {pm.center.shape}")
    if spec.kind == AWGN:
        return _awgn_posterior(spec, pm, y)
    return _probit_posterior(spec, pm, y)


def _awgn_posterior(spec, pm, y):
    # Conjugate Gaussian update, exact.
    p, tau = pm.center, pm.precision
    gw = spec.gamma_w
    value = (tau * p + gw * y) / (tau + gw)
    var = np.full_like(p, 1.0 / (tau + gw))
    return DenoiserResult(value=value, divergence=tau / (tau + gw), variance=var)


def _probit_posterior(spec, pm, y):
    """Moments of N(z; p, 1/tau) * Phi(y * z * sqrt(gamma_w)), normalized.

    With sbar2 = 1/tau + 1/gamma_w and zeta = y * p / sbar, the posterior
    mean is p + y * (1/tau) * R(zeta) / sbar and the variance is
    (1/tau) - (1/tau)^2 * R(zeta) * (zeta + R(zeta)) / sbar2, where
    R = phi/Phi is the Mills ratio evaluated in stable form.
    """
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("probit measurements must take values in {-1, +1}")
    p, tau = pm.center, pm.precision
    pv = 1.0 / tau
    sbar2 = pv + 1.0 / spec.gamma_w
    sbar = np.sqrt(sbar2)
    zeta = y * p / sbar
    ratio = mills_ratio(zeta)
    value = p + y * pv * ratio / sbar
    var = pv - pv**2 * ratio * (zeta + ratio) / sbar2
    var = np.maximum(var, 0.0)
    _require_finite(value, "probit posterior mean")
    _require_finite(var, "probit posterior variance")
    return DenoiserResult(value=value, divergence=tau * float(np.mean(var)), variance=var)


def monte_carlo_divergence(g, r, probe_count, step, seed):
    """Estimate the divergence of g at r with random +/-1 probes.

    Returns (1/K) * sum_k eta_k.T @ (g(r + step*eta_k) - g(r)) / (step * N),
    an unbiased estimate of the normalized Jacobian trace as step -> 0.
    """
    if probe_count < 1:
        raise ValueError(f"probe_count must be >= 1, got {probe_count}")
    if not step > 0.0:
        raise ValueError(f"step must be positive, got {step}")
    r = np.asarray(r, dtype=np.float64)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    base = np.asarray(g(r), dtype=np.float64)
    total = 0.0
    for _ in range(probe_count):
        eta = rng.integers(0, 2, size=r.shape[0]) * 2.0 - 1.0
        total += float(eta @ (np.asarray(g(r + step * eta)) - base)) / (step * r.shape[0])
    return total / probe_count
