"""Reproducible generation of benchmark instances.

A trial's randomness is split into named substreams (matrix, support,
amplitudes, noise), each keyed by (seed components..., stream id) through
numpy's SeedSequence. Sweeping the condition number with fixed seeds
therefore reuses the orthogonal factors, the signal, and the noise, and
changes only the singular-value profile; redrawing everything per trial is
just a matter of varying the trial component of the seeds.

The matrix model: A = u @ diag(s) @ v.T with Haar-distributed orthogonal
factors and a geometric singular-value profile s_i/s_{i-1} = ratio, scaled
so that ||A||_F^2 = n and s_1/s_r equals the requested condition number.
"""

from dataclasses import dataclass

import numpy as np

from .model import AWGN, PROBIT, ChannelSpec
from .operators import SvdOperator

_STREAMS = {"matrix": 0, "support": 1, "amplitudes": 2, "noise": 3}


def _seed_entropy(seed):
    if isinstance(seed, (tuple, list)):
        return [int(v) & 0xFFFFFFFF for v in seed]
    return [int(seed) & 0xFFFFFFFF]


def substream(seed, name):
    """Independent generator for one named substream of a seed."""
    return np.random.default_rng(
        np.random.SeedSequence(_seed_entropy(seed) + [_STREAMS[name]])
    )


@dataclass(frozen=True)
class MatrixGenSpec:
    """Dimensions, target condition number, seed for the operator draw."""

    m: int
    n: int
    kappa: float
    seed: object = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("dimensions must be >= 1")
        if not (np.isfinite(self.kappa) and self.kappa >= 1.0):
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")


@dataclass(frozen=True)
class SignalSpec:
    """Sparse signal description: length, support size, active variance."""

    n: int
    k_nonzero: int
    amp_variance: float = 1.0
    seed: object = 0

    def __post_init__(self):
        if not (1 <= self.k_nonzero <= self.n):
            raise ValueError(f"k_nonzero must lie in [1, {self.n}], got {self.k_nonzero}")
        if not self.amp_variance > 0.0:
            raise ValueError("amp_variance must be positive")


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """One generated trial: operator, ground truth, noise, measurements, and
    the calibrated noise precision."""

    op: SvdOperator
    x_true: np.ndarray
    z_true: np.ndarray
    w: np.ndarray
    y: np.ndarray
    gamma_w: float


def _haar_columns(dim, k, rng):
    # QR of an iid Gaussian block with the sign-of-R-diagonal correction
    # gives the first k columns of a Haar-distributed orthogonal matrix.
    g = rng.standard_normal((dim, k))
    q, r = np.linalg.qr(g, mode="reduced")
    return q * np.sign(np.diag(r))


def sample_haar_orthogonal(dim, seed):
    """Draw a dim x dim orthogonal matrix from the Haar measure."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "matrix")
    return _haar_columns(dim, dim, rng)


def geometric_spectrum(m, n, kappa):
    """Geometric singular-value profile of length min(m, n).

    Consecutive ratio kappa**(-1/(r-1)) so s_1/s_r = kappa (flat when r = 1
    or kappa = 1), scaled so sum(s**2) = n. Returned descending.
    """
    if not kappa >= 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    r = min(m, n)
    if r == 1 or kappa == 1.0:
        s = np.ones(r)
    else:
        ratio = kappa ** (-1.0 / (r - 1))
        s = ratio ** np.arange(r)
    return s * np.sqrt(n / np.sum(s**2))


def generate_instance(mspec: MatrixGenSpec, sspec: SignalSpec, channel: ChannelSpec,
                      snr_db, noise_seed=0) -> ProblemInstance:
    """Build one trial: operator, sparse signal, calibrated noise, measurements.

    The noise precision is calibrated analytically from the target
    E{||Ax||^2} / E{||w||^2} ratio: with uniformly random support,
    E||Ax||^2 = k_nonzero * amp_variance * ||A||_F^2 / n, and
    E||w||^2 = m / gamma_w. snr_db = inf yields exactly noiseless
    measurements. The channel argument only selects the output map (a
    ChannelSpec or a bare kind string); any gamma_w it carries is ignored
    in favor of the calibrated value.
    """
    kind = channel.kind if isinstance(channel, ChannelSpec) else str(channel)
    if kind not in (AWGN, PROBIT):
        raise ValueError(f"unknown channel kind {kind!r}")
    if sspec.n != mspec.n:
        raise ValueError(f"signal length {sspec.n} != operator columns {mspec.n}")
    m, n, r = mspec.m, mspec.n, min(mspec.m, mspec.n)

    rng_mat = substream(mspec.seed, "matrix")
    # One Haar draw for u then one for v, economy-sized.
    u = _haar_columns(m, r, rng_mat)
    v = _haar_columns(n, r, rng_mat)
    s = geometric_spectrum(m, n, mspec.kappa)
    op = SvdOperator(u=u, s=s, v=v)

    support = substream(sspec.seed, "support").choice(n, size=sspec.k_nonzero, replace=False)
    amps = substream(sspec.seed, "amplitudes").standard_normal(sspec.k_nonzero)
    x_true = np.zeros(n)
    x_true[np.sort(support)] = np.sqrt(sspec.amp_variance) * amps
    z_true = op.apply(x_true)

    signal_power = sspec.k_nonzero * sspec.amp_variance * op.frobenius_norm_sq() / n
    gamma_w = m * 10.0 ** (float(snr_db) / 10.0) / signal_power
    if np.isfinite(gamma_w):
        w = substream(noise_seed, "noise").standard_normal(m) / np.sqrt(gamma_w)
    else:
        w = np.zeros(m)

    noisy = z_true + w
    if kind == AWGN:
        y = noisy
    else:
        # sgn(0) = +1 by convention.
        y = np.where(noisy >= 0.0, 1.0, -1.0)
    return ProblemInstance(op=op, x_true=x_true, z_true=z_true, w=w, y=y, gamma_w=gamma_w)
