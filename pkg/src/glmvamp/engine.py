"""Iteration engines for the two-stage message-passing solvers.

run_vamp_slm alternates a separable denoiser with the linear-model LMMSE
stage; run_vamp_glm additionally tracks the transform output z = A x with
its own pseudo-measurements and precisions, replacing the linear stage with
the joint (x, z) LMMSE stage. Between stages, extrinsic updates

    r_new = (xhat - alpha * r) / (1 - alpha)
    prec_new = prec * (1 - alpha) / alpha

pass only the information not already contained in the incoming belief.
Divergences and precisions are clamped before each update; the fixed
iteration schedule follows the algorithm's printed order exactly
(x-denoise, z-denoise, x-stage, z-stage).
"""

from dataclasses import dataclass

import numpy as np

from .denoisers import denoise_channel, denoise_prior, monte_carlo_divergence
from .lmmse import GlmLmmseContext, SlmLmmseContext, glm_lmmse, slm_lmmse
from .model import ALPHA_MIN, PREC_MAX, PREC_MIN, PseudoMeasurement

ANALYTIC = "analytic"
MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class VampConfig:
    """Engine settings. Defaults reproduce the reference initialization:
    zero vectors with near-uninformative precisions 1e-8."""

    max_iters: int = 100
    prec_min: float = PREC_MIN
    prec_max: float = PREC_MAX
    alpha_min: float = ALPHA_MIN
    damping: float = 1.0
    stop_tol: float | None = None
    init_gamma1: float = 1e-8
    init_tau1: float = 1e-8
    init_r1: np.ndarray | None = None
    init_p1: np.ndarray | None = None
    divergence: str = ANALYTIC
    mc_probes: int = 8
    mc_step: float = 1e-4
    mc_seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (0.0 < self.prec_min < self.prec_max):
            raise ValueError("require 0 < prec_min < prec_max")
        if not (0.0 < self.alpha_min < 0.5):
            raise ValueError(f"alpha_min must lie in (0, 0.5), got {self.alpha_min}")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if self.stop_tol is not None and not self.stop_tol > 0.0:
            raise ValueError(f"stop_tol must be positive or None, got {self.stop_tol}")
        if self.divergence not in (ANALYTIC, MONTE_CARLO):
            raise ValueError(f"unknown divergence mode {self.divergence!r}")


@dataclass(frozen=True, eq=False)
class VampSlmState:
    """All iteration-k quantities of the linear-model solver."""

    k: int
    r1: np.ndarray
    gamma1: float
    xhat1: np.ndarray
    alpha1: float
    r2: np.ndarray
    gamma2: float
    xhat2: np.ndarray
    alpha2: float


@dataclass(frozen=True, eq=False)
class VampGlmState:
    """All iteration-k quantities of the generalized-model solver."""

    k: int
    r1: np.ndarray
    r2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    gamma1: float
    gamma2: float
    tau1: float
    tau2: float
    xhat1: np.ndarray
    xhat2: np.ndarray
    zhat1: np.ndarray
    zhat2: np.ndarray
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float


def clamp_divergence(alpha, alpha_min=ALPHA_MIN):
    """Clip a divergence into [alpha_min, 1 - alpha_min] so the extrinsic
    update never divides by zero."""
    return float(min(max(alpha, alpha_min), 1.0 - alpha_min))


def extrinsic_update(xhat, r, alpha, gamma, prec_min=PREC_MIN, prec_max=PREC_MAX):
    """Extrinsic-information update; alpha must already be clamped away from
    {0, 1}. Returns (r_new, gamma_new) with gamma_new clipped into
    [prec_min, prec_max]."""
    r_new = (xhat - alpha * r) / (1.0 - alpha)
    gamma_new = float(min(max(gamma * (1.0 - alpha) / alpha, prec_min), prec_max))
    return r_new, gamma_new


def has_converged(trace, stop_tol):
    """Whether the last two recorded states meet the relative-change stop
    rule on xhat1."""
    if stop_tol is None or len(trace) < 2:
        return False
    cur, prev = trace[-1].xhat1, trace[-2].xhat1
    scale = float(np.linalg.norm(cur))
    delta = float(np.linalg.norm(cur - prev))
    return delta < stop_tol * scale if scale > 0.0 else delta == 0.0


def _divergence(config, result, denoise, center, k, side):
    """Analytic divergence from the denoiser, or the Monte-Carlo probe
    estimate when configured (deterministic per iteration and side)."""
    if config.divergence == ANALYTIC:
        return result.divergence
    rng = np.random.default_rng(
        np.random.SeedSequence([config.mc_seed & 0xFFFFFFFF, k, side])
    )
    return monte_carlo_divergence(
        denoise, center, config.mc_probes, config.mc_step, rng
    )


def _damp(new, old, delta):
    if delta >= 1.0 or old is None:
        return new
    return delta * new + (1.0 - delta) * old


def run_vamp_slm(problem, prior, gamma_w=None, config=None, hook=None):
    """Run the linear-model solver on a ProblemInstance.

    gamma_w defaults to the instance's calibrated noise precision. Returns
    (xhat, trace) with xhat the final denoised estimate and trace the list
    of per-iteration states. hook, if given, is called once per iteration
    with the freshly recorded state (treat it as read-only).
    """
    config = config or VampConfig()
    op = problem.op
    if gamma_w is None:
        gamma_w = problem.gamma_w
    ctx = SlmLmmseContext.from_measurements(op, gamma_w, problem.y)

    r1 = np.zeros(op.n) if config.init_r1 is None else np.asarray(config.init_r1, float)
    gamma1 = float(config.init_gamma1)
    prev_r2 = None
    prev_r1 = None
    trace = []
    for k in range(config.max_iters):
        try:
            pm1 = PseudoMeasurement(r1, gamma1)
            res1 = denoise_prior(prior, pm1)
            alpha1 = clamp_divergence(
                _divergence(config, res1, lambda rr: denoise_prior(
                    prior, PseudoMeasurement(rr, gamma1)).value, r1, k, 0),
                config.alpha_min,
            )
            r2, gamma2 = extrinsic_update(
                res1.value, r1, alpha1, gamma1, config.prec_min, config.prec_max
            )
            r2 = _damp(r2, prev_r2, config.damping)
            prev_r2 = r2

            xhat2, alpha2 = slm_lmmse(ctx, r2, gamma2)
            alpha2 = clamp_divergence(alpha2, config.alpha_min)
            r1_next, gamma1_next = extrinsic_update(
                xhat2, r2, alpha2, gamma2, config.prec_min, config.prec_max
            )
            r1_next = _damp(r1_next, prev_r1, config.damping)
            prev_r1 = r1_next
        except Exception as exc:
            raise RuntimeError(f"vamp-slm failed at iteration {k}: {exc}") from exc

        state = VampSlmState(
            k=k, r1=r1, gamma1=gamma1, xhat1=res1.value, alpha1=alpha1,
            r2=r2, gamma2=gamma2, xhat2=xhat2, alpha2=alpha2,
        )
        trace.append(state)
        if hook is not None:
            hook(state)
        if has_converged(trace, config.stop_tol):
            break
        r1, gamma1 = r1_next, gamma1_next
    return trace[-1].xhat1, trace


def run_vamp_glm(problem, prior, channel, config=None, hook=None):
    """Run the generalized-model solver on a ProblemInstance.

    channel describes p(y|z) with its noise precision. Returns (xhat, trace)
    as in run_vamp_slm, with VampGlmState entries.
    """
    config = config or VampConfig()
    op = problem.op
    y = np.asarray(problem.y, dtype=np.float64)
    ctx = GlmLmmseContext(op=op)

    r1 = np.zeros(op.n) if config.init_r1 is None else np.asarray(config.init_r1, float)
    p1 = np.zeros(op.m) if config.init_p1 is None else np.asarray(config.init_p1, float)
    gamma1 = float(config.init_gamma1)
    tau1 = float(config.init_tau1)
    prev = {"r2": None, "p2": None, "r1": None, "p1": None}
    trace = []
    for k in range(config.max_iters):
        try:
            # Denoise x.
            res_x = denoise_prior(prior, PseudoMeasurement(r1, gamma1))
            alpha1 = clamp_divergence(
                _divergence(config, res_x, lambda rr: denoise_prior(
                    prior, PseudoMeasurement(rr, gamma1)).value, r1, k, 0),
                config.alpha_min,
            )
            r2, gamma2 = extrinsic_update(
                res_x.value, r1, alpha1, gamma1, config.prec_min, config.prec_max
            )
            r2 = _damp(r2, prev["r2"], config.damping)
            prev["r2"] = r2

            # Denoise z.
            res_z = denoise_channel(channel, PseudoMeasurement(p1, tau1), y)
            beta1 = clamp_divergence(
                _divergence(config, res_z, lambda pp: denoise_channel(
                    channel, PseudoMeasurement(pp, tau1), y).value, p1, k, 1),
                config.alpha_min,
            )
            p2, tau2 = extrinsic_update(
                res_z.value, p1, beta1, tau1, config.prec_min, config.prec_max
            )
            p2 = _damp(p2, prev["p2"], config.damping)
            prev["p2"] = p2

            # Joint LMMSE for x and z in one call.
            xhat2, zhat2, alpha2, beta2 = glm_lmmse(ctx, r2, p2, gamma2, tau2)
            alpha2 = clamp_divergence(alpha2, config.alpha_min)
            beta2 = clamp_divergence(beta2, config.alpha_min)
            r1_next, gamma1_next = extrinsic_update(
                xhat2, r2, alpha2, gamma2, config.prec_min, config.prec_max
            )
            r1_next = _damp(r1_next, prev["r1"], config.damping)
            prev["r1"] = r1_next
            p1_next, tau1_next = extrinsic_update(
                zhat2, p2, beta2, tau2, config.prec_min, config.prec_max
            )
            p1_next = _damp(p1_next, prev["p1"], config.damping)
            prev["p1"] = p1_next
        except Exception as exc:
            raise RuntimeError(f"vamp-glm failed at iteration {k}: {exc}") from exc

        state = VampGlmState(
            k=k, r1=r1, r2=r2, p1=p1, p2=p2,
            gamma1=gamma1, gamma2=gamma2, tau1=tau1, tau2=tau2,
            xhat1=res_x.value, xhat2=xhat2, zhat1=res_z.value, zhat2=zhat2,
            alpha1=alpha1, alpha2=alpha2, beta1=beta1, beta2=beta2,
        )
        trace.append(state)
        if hook is not None:
            hook(state)
        if has_converged(trace, config.stop_tol):
            break
        r1, gamma1 = r1_next, gamma1_next
        p1, tau1 = p1_next, tau1_next
    return trace[-1].xhat1, trace
