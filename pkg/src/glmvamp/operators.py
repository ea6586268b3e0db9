"""A linear operator held in factored (economy SVD) form.

The operator A = u @ diag(s) @ v.T is stored through its factors so that
resolvent-type expressions 1/(c * s**2 + d) stay diagonal and no per-use
matrix inversion is ever needed. Factors are copied and frozen at
construction; instances are immutable and safe to share across workers.
"""

from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-10


def _locked_copy(a, name, ndim):
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    if a.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SvdOperator:
    """Factored operator with u: (m, r), s: (r,) descending >= 0, v: (n, r)."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = _locked_copy(self.u, "u", 2)
        s = _locked_copy(self.s, "s", 1)
        v = _locked_copy(self.v, "v", 2)
        r = s.shape[0]
        if u.shape[1] != r or v.shape[1] != r:
            raise ValueError(
                f"factor shapes disagree: u {u.shape}, s {s.shape}, v {v.shape}"
            )
        if r != min(u.shape[0], v.shape[0]):
            raise ValueError(
                f"expected economy rank min(m, n) = {min(u.shape[0], v.shape[0])}, got {r}"
            )
        if np.any(s < 0.0):
            raise ValueError("singular values must be nonnegative")
        if np.any(np.diff(s) > 0.0):
            raise ValueError("singular values must be sorted descending")
        for name, q in (("u", u), ("v", v)):
            dev = np.abs(q.T @ q - np.eye(r)).max()
            if dev > ORTHO_TOL:
                raise ValueError(f"{name} columns not orthonormal (max deviation {dev:.3e})")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "v", v)

    @property
    def m(self):
        return self.u.shape[0]

    @property
    def n(self):
        return self.v.shape[0]

    @property
    def rank(self):
        return self.s.shape[0]

    def apply(self, x):
        """A @ x for x of length n."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"expected x of shape ({self.n},), got {x.shape}")
        return self.u @ (self.s * (self.v.T @ x))

    def apply_adjoint(self, y):
        """A.T @ y for y of length m."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.m,):
            raise ValueError(f"expected y of shape ({self.m},), got {y.shape}")
        return self.v @ (self.s * (self.u.T @ y))

    def to_dense(self):
        return (self.u * self.s) @ self.v.T

    def frobenius_norm_sq(self):
        return float(np.sum(self.s**2))


def svd_operator_from_dense(a):
    """Factor a dense matrix into an SvdOperator via the economy SVD."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or min(a.shape) < 1:
        raise ValueError(f"expected a 2-D matrix with positive dimensions, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return SvdOperator(u=u, s=s, v=vt.T)
