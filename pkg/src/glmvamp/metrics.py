"""Recovery metrics."""

import numpy as np


def dnmse(xhat, x_true):
    """Debiased normalized MSE: min over scalar c of ||c*xhat - x||^2 / ||x||^2.

    The optimum c = <xhat, x> / ||xhat||^2 gives
    1 - <xhat, x>^2 / (||xhat||^2 ||x||^2), invariant to rescaling of xhat
    (including sign flips). Returns 1.0 for xhat = 0 (the limit c -> 0).
    """
    xhat = np.asarray(xhat, dtype=np.float64)
    x_true = np.asarray(x_true, dtype=np.float64)
    nx2 = float(x_true @ x_true)
    if nx2 == 0.0:
        raise ValueError("x_true must be nonzero")
    nxh2 = float(xhat @ xhat)
    if nxh2 == 0.0:
        return 1.0
    dot = float(xhat @ x_true)
    return max(1.0 - dot * dot / (nxh2 * nx2), 0.0)


def dnmse_db(xhat, x_true):
    """dnmse in decibels; -inf for an exact (up to scale) recovery."""
    value = dnmse(xhat, x_true)
    return 10.0 * np.log10(value) if value > 0.0 else -np.inf
