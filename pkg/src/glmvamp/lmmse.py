"""Quadratic (LMMSE) estimation stages in precomputed-SVD form.

With A = u @ diag(s) @ v.T held economy-sized (rank r = min(m, n)), every
stage reduces to an elementwise resolvent 1/(c * s**2 + d) plus a handful of
matrix-vector products. Directions orthogonal to the row space of A carry
singular value zero; their contribution is restored analytically, which is
what the `rest = r2 - v @ t` terms below implement.

Dense solvers of the same stationarity system are kept alongside as oracles
for tests and the self-test suite; they are never used in the iteration.
"""

from dataclasses import dataclass

import numpy as np

from .operators import SvdOperator

TRACE_IDENTITY_TOL = 1e-9


def _check_precision(name, value):
    if not (np.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True, eq=False)
class SlmLmmseContext:
    """Per-problem constants of the linear-model stage: operator, noise
    precision, and the precomputed vector ytilde = gamma_w * s * (u.T @ y)."""

    op: SvdOperator
    gamma_w: float
    ytilde: np.ndarray

    @classmethod
    def from_measurements(cls, op, gamma_w, y):
        _check_precision("gamma_w", gamma_w)
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (op.m,):
            raise ValueError(f"expected y of shape ({op.m},), got {y.shape}")
        return cls(op=op, gamma_w=float(gamma_w), ytilde=gamma_w * op.s * (op.u.T @ y))


def slm_lmmse(ctx: SlmLmmseContext, r2, gamma2):
    """LMMSE estimate of x from y = A x + noise under prior N(r2, I/gamma2).

    Returns (xhat2, alpha2) where alpha2 is the divergence
    (1/n) * sum_n gamma2 / (gamma_w * s_n**2 + gamma2), counting the n - r
    zero singular values of the economy factorization.
    """
    _check_precision("gamma2", gamma2)
    op = ctx.op
    r2 = np.asarray(r2, dtype=np.float64)
    if r2.shape != (op.n,):
        raise ValueError(f"expected r2 of shape ({op.n},), got {r2.shape}")
    d = 1.0 / (ctx.gamma_w * op.s**2 + gamma2)
    t = op.v.T @ r2
    xhat2 = r2 + op.v @ (d * (ctx.ytilde + gamma2 * t) - t)
    alpha2 = (gamma2 * float(np.sum(d)) + (op.n - op.rank)) / op.n
    return xhat2, alpha2


@dataclass(frozen=True, eq=False)
class GlmLmmseContext:
    """Constants of the joint stage tying z = A x; noiseless, so only the
    operator is needed."""

    op: SvdOperator


def glm_lmmse(ctx: GlmLmmseContext, r2, p2, gamma2, tau2):
    """Joint LMMSE estimate of (x, z) subject to z = A x.

    Under pseudo-priors x ~ N(r2, I/gamma2) and z ~ N(p2, I/tau2):

        xhat2 = V D (tau2 * s * (U.T @ p2) + gamma2 * V.T @ r2),
        zhat2 = A xhat2,

    with D = diag(1 / (tau2 * s**2 + gamma2)). Returns
    (xhat2, zhat2, alpha2, beta2) where alpha2, beta2 are the divergences of
    the x- and z-outputs with respect to r2 and p2. Both are computed by
    their explicit sums; they always satisfy n*alpha2 + m*beta2 = n, which is
    asserted as a corruption guard.
    """
    _check_precision("gamma2", gamma2)
    _check_precision("tau2", tau2)
    op = ctx.op
    r2 = np.asarray(r2, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if r2.shape != (op.n,):
        raise ValueError(f"expected r2 of shape ({op.n},), got {r2.shape}")
    if p2.shape != (op.m,):
        raise ValueError(f"expected p2 of shape ({op.m},), got {p2.shape}")
    d = 1.0 / (tau2 * op.s**2 + gamma2)
    t = op.v.T @ r2
    q = op.s * (op.u.T @ p2)
    xhat2 = r2 + op.v @ (d * (tau2 * q + gamma2 * t) - t)
    zhat2 = op.apply(xhat2)
    alpha2 = (gamma2 * float(np.sum(d)) + (op.n - op.rank)) / op.n
    beta2 = tau2 * float(np.sum(op.s**2 * d)) / op.m
    if abs(op.n * alpha2 + op.m * beta2 - op.n) > TRACE_IDENTITY_TOL * op.n:
        raise FloatingPointError(
            f"trace identity violated: n*alpha2 + m*beta2 = "
            f"{op.n * alpha2 + op.m * beta2:.17g}, expected {op.n}"
        )
    return xhat2, zhat2, alpha2, beta2


def glm_lmmse_residual_form(ctx: GlmLmmseContext, r2, p2, gamma2, tau2):
    """Algebraically equivalent form of the joint x-estimate.

    xhat2 = r2 + V diag(s / (gamma2/tau2 + s**2)) (U.T @ p2 - s * V.T @ r2).
    Kept as a cross-check; cost is identical to glm_lmmse.
    """
    _check_precision("gamma2", gamma2)
    _check_precision("tau2", tau2)
    op = ctx.op
    r2 = np.asarray(r2, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    gain = op.s / (gamma2 / tau2 + op.s**2)
    resid = op.u.T @ p2 - op.s * (op.v.T @ r2)
    return r2 + op.v @ (gain * resid)


def glm_lmmse_dense_oracle(a, r2, p2, gamma2, tau2):
    """Direct dense solve of the joint stage's stationarity system.

    Solves (tau2 * A.T A + gamma2 * I) x = gamma2 * r2 + tau2 * A.T p2 and
    returns (xhat2, zhat2). Test-scale instances only.
    """
    a = np.asarray(a, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    n = a.shape[1]
    lhs = tau2 * (a.T @ a) + gamma2 * np.eye(n)
    rhs = gamma2 * r2 + tau2 * (a.T @ p2)
    xhat2 = np.linalg.solve(lhs, rhs)
    return xhat2, a @ xhat2


def glm_lmmse_woodbury_oracle(a, r2, p2, gamma2, tau2):
    """Matrix-inversion-lemma form of the joint x-estimate.

    xhat2 = r2 + A.T ((gamma2/tau2) I + A A.T)^{-1} (p2 - A r2).
    Second independent dense route; test-scale instances only.
    """
    a = np.asarray(a, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    m = a.shape[0]
    lhs = (gamma2 / tau2) * np.eye(m) + a @ a.T
    xhat2 = r2 + a.T @ np.linalg.solve(lhs, p2 - a @ r2)
    return xhat2, a @ xhat2
