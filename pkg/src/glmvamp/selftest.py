"""Built-in oracle suite behind the `selftest` CLI subcommand.

Each check recomputes a quantity through an independent route (dense solve,
quadrature, finite differences, brute-force search) and compares it with the
production path. Prints one PASS/FAIL line per check.
"""

import numpy as np

from .denoisers import denoise_channel, denoise_prior, monte_carlo_divergence
from .engine import extrinsic_update
from .lmmse import (
    GlmLmmseContext,
    SlmLmmseContext,
    glm_lmmse,
    glm_lmmse_dense_oracle,
    glm_lmmse_residual_form,
    glm_lmmse_woodbury_oracle,
    slm_lmmse,
)
from .metrics import dnmse
from .model import ChannelSpec, PriorSpec, PseudoMeasurement
from .operators import svd_operator_from_dense
from .reference import (
    channel_posterior_quadrature,
    dnmse_grid_search,
    prior_posterior_quadrature,
)
from .synth import geometric_spectrum, sample_haar_orthogonal


def _rel(a, b):
    scale = max(float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / scale


def check_operator_factorization(rng):
    worst = 0.0
    for m, n in [(8, 12), (12, 8), (10, 10)]:
        a = rng.standard_normal((m, n))
        op = svd_operator_from_dense(a)
        worst = max(worst, _rel(op.to_dense(), a))
        x, y = rng.standard_normal(n), rng.standard_normal(m)
        adj_gap = abs(op.apply(x) @ y - x @ op.apply_adjoint(y))
        worst = max(worst, adj_gap / (np.linalg.norm(x) * np.linalg.norm(y)))
    return worst <= 1e-10, f"max deviation {worst:.3e}"


def check_lmmse_equivalence(rng):
    worst = 0.0
    for m, n in [(8, 12), (12, 8), (10, 10)]:
        for _ in range(10):
            a = rng.standard_normal((m, n))
            op = svd_operator_from_dense(a)
            r2, p2 = rng.standard_normal(n), rng.standard_normal(m)
            g2, t2 = 10.0 ** rng.uniform(-3, 3, size=2)
            ctx = GlmLmmseContext(op=op)
            xh, zh, _, _ = glm_lmmse(ctx, r2, p2, g2, t2)
            xd, zd = glm_lmmse_dense_oracle(a, r2, p2, g2, t2)
            xw, _ = glm_lmmse_woodbury_oracle(a, r2, p2, g2, t2)
            xr = glm_lmmse_residual_form(ctx, r2, p2, g2, t2)
            worst = max(worst, _rel(xh, xd), _rel(zh, zd), _rel(xh, xw), _rel(xh, xr))
    return worst <= 1e-10, f"max relative error {worst:.3e}"


def check_divergence_trace(rng):
    worst = 0.0
    for m, n in [(8, 12), (12, 8), (10, 10)]:
        a = rng.standard_normal((m, n))
        op = svd_operator_from_dense(a)
        g2, t2 = 0.7, 1.9
        _, _, alpha2, beta2 = glm_lmmse(
            GlmLmmseContext(op=op), np.zeros(n), np.zeros(m), g2, t2
        )
        jac_trace = np.trace(g2 * np.linalg.inv(t2 * a.T @ a + g2 * np.eye(n)))
        worst = max(worst, abs(alpha2 - jac_trace / n))
        worst = max(worst, abs(n * alpha2 + m * beta2 - n) / n)
    return worst <= 1e-12, f"max deviation {worst:.3e}"


def check_prior_denoiser(rng):
    spec = PriorSpec.bernoulli_gaussian(0.1, 1.0)
    worst = 0.0
    for r in [-3.0, -1.5, 0.0, 0.4, 1.5, 5.0]:
        for gamma in [0.25, 4.0, 100.0]:
            res = denoise_prior(spec, PseudoMeasurement(np.array([r]), gamma))
            mean, var = prior_posterior_quadrature(spec, r, gamma)
            worst = max(worst, abs(res.value[0] - mean), abs(res.variance[0] - var))
    return worst <= 1e-8, f"max deviation from quadrature {worst:.3e}"


def check_channel_denoiser(rng):
    worst = 0.0
    for gamma_w in [1.0, 100.0]:
        spec = ChannelSpec.probit(gamma_w)
        for p in [-2.0, -0.3, 0.0, 1.0]:
            for tau in [0.5, 2.0, 50.0]:
                for y in [-1.0, 1.0]:
                    res = denoise_channel(
                        spec, PseudoMeasurement(np.array([p]), tau), np.array([y])
                    )
                    mean, var = channel_posterior_quadrature(spec, p, tau, y)
                    worst = max(worst, abs(res.value[0] - mean), abs(res.variance[0] - var))
    return worst <= 1e-8, f"max deviation from quadrature {worst:.3e}"


def check_monte_carlo_divergence(rng):
    spec = PriorSpec.bernoulli_gaussian(0.2, 1.0)
    r = rng.standard_normal(512)
    pm = PseudoMeasurement(r, 3.0)
    analytic = denoise_prior(spec, pm).divergence
    est = monte_carlo_divergence(
        lambda rr: denoise_prior(spec, PseudoMeasurement(rr, 3.0)).value,
        r, probe_count=8, step=1e-4, seed=7,
    )
    gap = abs(est - analytic)
    return gap <= 0.02, f"analytic {analytic:.5f}, probe estimate {est:.5f}"


def check_extrinsic_identity(rng):
    worst = 0.0
    for _ in range(20):
        xhat, r = rng.standard_normal((2, 16))
        alpha = rng.uniform(0.05, 0.95)
        gamma = 10.0 ** rng.uniform(-3, 3)
        r_new, _ = extrinsic_update(xhat, r, alpha, gamma)
        worst = max(worst, _rel(alpha * r + (1.0 - alpha) * r_new, xhat))
    return worst <= 1e-12, f"max identity violation {worst:.3e}"


def check_dnmse(rng):
    xhat, x = rng.standard_normal((2, 40))
    fast = dnmse(xhat, x)
    brute = dnmse_grid_search(xhat, x)
    gap = abs(fast - brute)
    scale_inv = abs(dnmse(2.0 * x, x))
    return gap <= 1e-6 and scale_inv <= 1e-15, (
        f"grid gap {gap:.2e}, scale-invariance residual {scale_inv:.2e}"
    )


def check_synthesis(rng):
    q = sample_haar_orthogonal(64, seed=3)
    ortho = np.abs(q.T @ q - np.eye(64)).max()
    s = geometric_spectrum(512, 512, 1e6)
    kappa_err = abs(s[0] / s[-1] - 1e6) / 1e6
    frob_err = abs(np.sum(s**2) - 512.0) / 512.0
    ok = ortho <= 1e-12 and kappa_err <= 1e-10 and frob_err <= 1e-8
    return ok, f"ortho {ortho:.2e}, kappa err {kappa_err:.2e}, frob err {frob_err:.2e}"


CHECKS = [
    ("operator-factorization", check_operator_factorization),
    ("lmmse-oracle-equivalence", check_lmmse_equivalence),
    ("divergence-trace-identity", check_divergence_trace),
    ("prior-denoiser-vs-quadrature", check_prior_denoiser),
    ("channel-denoiser-vs-quadrature", check_channel_denoiser),
    ("monte-carlo-divergence", check_monte_carlo_divergence),
    ("extrinsic-identity", check_extrinsic_identity),
    ("dnmse-vs-grid-search", check_dnmse),
    ("synthesis-properties", check_synthesis),
]


def run_selftest(out=print):
    """Run every check; returns the number of failures."""
    failures = 0
    for name, check in CHECKS:
        rng = np.random.default_rng(12345)
        try:
            ok, detail = check(rng)
        except Exception as exc:  # a crashed check is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        failures += 0 if ok else 1
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return failures
