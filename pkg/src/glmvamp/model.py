"""Shared model descriptors: priors, measurement channels, denoiser output.

These are plain immutable records. Validation happens at construction so the
numerical routines can assume well-formed inputs.
"""

from dataclasses import dataclass

import numpy as np

# Clamp bounds shared by the iteration engine and the pseudo-measurement
# validation. Precisions outside [PREC_MIN, PREC_MAX] and divergences outside
# [ALPHA_MIN, 1 - ALPHA_MIN] are clipped before they enter any update.
PREC_MIN = 1e-11
PREC_MAX = 1e11
ALPHA_MIN = 1e-10

BERNOULLI_GAUSSIAN = "bernoulli_gaussian"
LAPLACIAN = "laplacian"
AWGN = "awgn"
PROBIT = "probit"
MMSE = "mmse"
MAP = "map"


def _as_float_vector(x, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise ValueError(f"{name} has non-finite entry at index {bad}")
    return x


@dataclass(frozen=True)
class PriorSpec:
    """Separable prior on the signal entries.

    kind "bernoulli_gaussian": point mass at zero with weight 1 - rho plus a
    zero-mean Gaussian slab of variance sigma2 with weight rho.
    kind "laplacian": density 0.5 * lam * exp(-lam * |x|).

    mode selects the inference rule used by the matching denoiser: "mmse"
    returns the posterior mean, "map" the posterior mode. MAP is only
    supported for the Laplacian prior, where it is the soft-threshold rule.
    """

    kind: str
    rho: float = 1.0
    sigma2: float = 1.0
    lam: float = 1.0
    mode: str = MMSE

    def __post_init__(self):
        if self.kind not in (BERNOULLI_GAUSSIAN, LAPLACIAN):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.mode not in (MMSE, MAP):
            raise ValueError(f"unknown prior mode {self.mode!r}")
        if self.kind == BERNOULLI_GAUSSIAN:
            if not (0.0 < self.rho <= 1.0):
                raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
            if not (np.isfinite(self.sigma2) and self.sigma2 > 0.0):
                raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
            if self.mode == MAP:
                raise ValueError("MAP mode is only supported for the laplacian prior")
        else:
            if not (np.isfinite(self.lam) and self.lam > 0.0):
                raise ValueError(f"lam must be positive, got {self.lam}")

    @classmethod
    def bernoulli_gaussian(cls, rho, sigma2=1.0, mode=MMSE):
        return cls(kind=BERNOULLI_GAUSSIAN, rho=float(rho), sigma2=float(sigma2), mode=mode)

    @classmethod
    def laplacian(cls, lam, mode=MMSE):
        return cls(kind=LAPLACIAN, lam=float(lam), mode=mode)


@dataclass(frozen=True)
class ChannelSpec:
    """Separable measurement channel p(y_m | z_m).

    kind "awgn": y = z + w with w ~ N(0, 1/gamma_w).
    kind "probit": y = sgn(z + w), w ~ N(0, 1/gamma_w), sgn(0) = +1,
    so y takes values in {-1, +1}.
    """

    kind: str
    gamma_w: float

    def __post_init__(self):
        if self.kind not in (AWGN, PROBIT):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if not (np.isfinite(self.gamma_w) and self.gamma_w > 0.0):
            raise ValueError(f"gamma_w must be positive and finite, got {self.gamma_w}")

    @classmethod
    def awgn(cls, gamma_w):
        return cls(kind=AWGN, gamma_w=float(gamma_w))

    @classmethod
    def probit(cls, gamma_w):
        return cls(kind=PROBIT, gamma_w=float(gamma_w))


@dataclass(frozen=True, eq=False)
class PseudoMeasurement:
    """A Gaussian surrogate belief: center vector observed at a scalar precision."""

    center: np.ndarray
    precision: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_float_vector(self.center, "center"))
        p = float(self.precision)
        if not (PREC_MIN <= p <= PREC_MAX):
            raise ValueError(
                f"precision must lie in [{PREC_MIN:g}, {PREC_MAX:g}], got {p:g}"
            )
        object.__setattr__(self, "precision", p)


@dataclass(frozen=True, eq=False)
class DenoiserResult:
    """Denoised vector plus the divergence (mean Jacobian diagonal) of the map.

    For MMSE denoisers, variance holds the per-entry posterior variances and
    divergence equals precision * mean(variance). MAP denoisers leave
    variance as None.
    """

    value: np.ndarray
    divergence: float
    variance: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "value", _as_float_vector(self.value, "value"))
        d = float(self.divergence)
        if not np.isfinite(d):
            raise ValueError(f"divergence must be finite, got {d}")
        object.__setattr__(self, "divergence", d)
        if self.variance is not None:
            var = _as_float_vector(self.variance, "variance")
            if np.any(var < 0.0):
                bad = int(np.flatnonzero(var < 0.0)[0])
                raise ValueError(f"variance is negative at index {bad}")
            object.__setattr__(self, "variance", var)
