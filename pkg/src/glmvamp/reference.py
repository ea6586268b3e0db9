"""Slow, independent reference computations used by tests and the self-test.

Denoiser posteriors are recomputed by 1-D adaptive quadrature of the raw
(log-density) integrands, locating the integration window by grid scan and
Laplace curvature rather than by any closed form, so a bug in the production
formulas cannot propagate here. None of this is used in the iteration.
"""

import numpy as np
from scipy import integrate, special

from .model import AWGN, BERNOULLI_GAUSSIAN, MAP

QUAD_ABS_TOL = 1e-12
WINDOW_STDS = 12.0


def _moments_from_log_density(log_density, lo, hi, points=None):
    """Normalized mean/variance of exp(log_density) on [lo, hi].

    The density is shifted by its grid maximum before exponentiation so that
    integrals of extremely small posteriors stay well scaled.
    """
    grid = np.linspace(lo, hi, 4001)
    logs = log_density(grid)
    shift = float(np.max(logs))

    def w(z):
        return np.exp(log_density(z) - shift)

    kwargs = {"epsabs": QUAD_ABS_TOL, "epsrel": 1e-12, "limit": 400}
    if points:
        pts = [p for p in points if lo < p < hi]
        if pts:
            kwargs["points"] = pts
    z0, _ = integrate.quad(w, lo, hi, **kwargs)
    z1, _ = integrate.quad(lambda z: z * w(z), lo, hi, **kwargs)
    mean = z1 / z0
    z2, _ = integrate.quad(lambda z: (z - mean) ** 2 * w(z), lo, hi, **kwargs)
    return mean, z2 / z0, np.log(z0) + shift


def _laplace_window(log_density, centers, widths):
    """Integration window from a grid scan: mode +/- WINDOW_STDS Laplace stds."""
    lo = min(c - 2.0 * wd for c, wd in zip(centers, widths))
    hi = max(c + 2.0 * wd for c, wd in zip(centers, widths))
    # Expand until the endpoints are far below the interior maximum.
    for _ in range(60):
        grid = np.linspace(lo, hi, 8001)
        logs = log_density(grid)
        imax = int(np.argmax(logs))
        top = logs[imax]
        if logs[0] < top - 200.0 and logs[-1] < top - 200.0:
            break
        span = hi - lo
        lo, hi = lo - span, hi + span
    h = grid[1] - grid[0]
    if 0 < imax < len(grid) - 1:
        curv = (logs[imax - 1] - 2.0 * logs[imax] + logs[imax + 1]) / h**2
    else:
        curv = -1.0 / h**2
    sigma = np.sqrt(-1.0 / curv) if curv < 0.0 else h
    mode = grid[imax]
    return max(lo, mode - WINDOW_STDS * sigma), min(hi, mode + WINDOW_STDS * sigma)


def prior_posterior_quadrature(spec, r, gamma):
    """(mean, variance) of the scalar posterior p(x) * N(x; r, 1/gamma)."""
    r = float(r)
    sig = 1.0 / np.sqrt(gamma)
    if spec.kind == BERNOULLI_GAUSSIAN:
        # Slab moments by quadrature; the point mass at zero analytically.
        def log_slab(x):
            return (
                -0.5 * x**2 / spec.sigma2 - 0.5 * np.log(2.0 * np.pi * spec.sigma2)
                - 0.5 * gamma * (x - r) ** 2 + 0.5 * np.log(gamma / (2.0 * np.pi))
            )

        lo, hi = _laplace_window(log_slab, [0.0, r], [np.sqrt(spec.sigma2), sig])
        m_s, v_s, log_ev_slab = _moments_from_log_density(log_slab, lo, hi)
        if spec.rho >= 1.0:
            return m_s, v_s
        log_ev_spike = (
            -0.5 * gamma * r**2 + 0.5 * np.log(gamma / (2.0 * np.pi))
        )
        log_odds = (
            np.log(spec.rho) + log_ev_slab - np.log(1.0 - spec.rho) - log_ev_spike
        )
        pi = special.expit(log_odds)
        mean = pi * m_s
        var = pi * (v_s + m_s**2) - mean**2
        return mean, var

    if spec.mode == MAP:
        raise ValueError("quadrature reference covers posterior-mean denoisers only")

    def log_post(x):
        return -spec.lam * np.abs(x) - 0.5 * gamma * (x - r) ** 2

    lo, hi = _laplace_window(log_post, [0.0, r], [1.0 / spec.lam, sig])
    mean, var, _ = _moments_from_log_density(log_post, lo, hi, points=[0.0])
    return mean, var


def channel_posterior_quadrature(spec, p, tau, y):
    """(mean, variance) of the scalar posterior p(y|z) * N(z; p, 1/tau)."""
    p, y = float(p), float(y)
    sig = 1.0 / np.sqrt(tau)
    if spec.kind == AWGN:
        def log_post(z):
            return -0.5 * tau * (z - p) ** 2 - 0.5 * spec.gamma_w * (y - z) ** 2

        centers, widths = [p, y], [sig, 1.0 / np.sqrt(spec.gamma_w)]
    else:
        sqgw = np.sqrt(spec.gamma_w)

        def log_post(z):
            return -0.5 * tau * (z - p) ** 2 + special.log_ndtr(y * sqgw * z)

        centers, widths = [p, 0.0], [sig, 1.0 / sqgw + sig]
    lo, hi = _laplace_window(log_post, centers, widths)
    mean, var, _ = _moments_from_log_density(log_post, lo, hi)
    return mean, var


def dnmse_grid_search(xhat, x_true, lo=-10.0, hi=10.0, num=10**6):
    """Brute-force dnmse: minimize ||c*xhat - x||^2/||x||^2 over a c grid."""
    xhat = np.asarray(xhat, dtype=np.float64)
    x_true = np.asarray(x_true, dtype=np.float64)
    c = np.linspace(lo, hi, num)
    # ||c*xhat - x||^2 = c^2 ||xhat||^2 - 2 c <xhat, x> + ||x||^2
    nxh2 = xhat @ xhat
    nx2 = x_true @ x_true
    dot = xhat @ x_true
    vals = c**2 * nxh2 - 2.0 * c * dot + nx2
    return float(np.min(vals) / nx2)
