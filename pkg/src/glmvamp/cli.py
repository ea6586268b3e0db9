"""Command-line entry point.

Subcommands:
  sweep     run a condition-number sweep from a config file, write CSVs
  single    solve one generated instance and print its iteration trace
  selftest  run the built-in oracle suite
"""

import argparse
import sys

from . import harness
from .engine import has_converged
from .metrics import dnmse_db
from .model import ChannelSpec
from .synth import MatrixGenSpec, SignalSpec, generate_instance


def _add_override_flags(sub):
    sub.add_argument("--seed", type=int, default=None, help="override base_seed")
    sub.add_argument("--out", default=None, help="override output CSV path")
    sub.add_argument("--threads", type=int, default=None, help="override worker count")
    sub.add_argument("--algorithm", choices=[harness.VAMP_GLM, harness.VAMP_SLM],
                     default=None, help="override the algorithm")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="glmvamp",
        description="Two-stage message-passing solvers for (generalized) "
                    "linear models and their condition-number benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a full sweep from a config file")
    sweep.add_argument("--config", required=True, help="flat key = value config file")
    _add_override_flags(sweep)

    single = sub.add_parser("single", help="run one instance and print the trace")
    single.add_argument("--config", default=None, help="optional config file")
    single.add_argument("--kappa", type=float, default=None,
                        help="condition number (default: first of config kappas)")
    single.add_argument("--trial", type=int, default=0, help="trial index for seeding")
    _add_override_flags(single)

    sub.add_parser("selftest", help="run the built-in oracle suite")
    return parser


def _overrides(args):
    return {"base_seed": args.seed, "out": args.out,
            "threads": args.threads, "algorithm": args.algorithm}


def _load_config(args):
    if args.config is not None:
        return harness.load_config(args.config, **_overrides(args))
    values = {k: v for k, v in _overrides(args).items() if v is not None}
    values.setdefault("kappas", (1.0,))
    return harness.SweepConfig(**values)


def cmd_sweep(args):
    config = harness.load_config(args.config, **_overrides(args))
    records_path, summary_path = harness.run_sweep(config)
    print(f"records: {records_path}")
    print(f"summary: {summary_path}")
    for row in harness.summarize(records_path):
        print(f"kappa={row['kappa']:<12g} mean final dNMSE "
              f"{row['mean_final_dnmse_db']:8.2f} dB over {row['trials']} trial(s)")
    return 0


def cmd_single(args):
    config = _load_config(args)
    kappa = args.kappa if args.kappa is not None else config.kappas[0]
    mspec = MatrixGenSpec(m=config.m, n=config.n, kappa=kappa,
                          seed=(config.base_seed, args.trial))
    sspec = SignalSpec(n=config.n, k_nonzero=config.k_nonzero,
                       seed=(config.base_seed, args.trial))
    instance = generate_instance(mspec, sspec, config.channel, config.snr_db,
                                 noise_seed=(config.base_seed, args.trial))
    channel = ChannelSpec(kind=config.channel, gamma_w=instance.gamma_w)
    prior = config.make_prior_spec()
    vamp_config = config.make_vamp_config()

    print(f"kappa={kappa:g} m={config.m} n={config.n} k_nonzero={config.k_nonzero} "
          f"snr_db={config.snr_db:g} gamma_w={instance.gamma_w:.6g} "
          f"algorithm={config.algorithm}")
    print(f"{'iter':>4}  {'dnmse_db':>10}  {'gamma1':>12}  {'tau1':>12}")

    def show(state):
        tau1 = getattr(state, "tau1", float("nan"))
        print(f"{state.k:>4}  {dnmse_db(state.xhat1, instance.x_true):>10.3f}  "
              f"{state.gamma1:>12.5g}  {tau1:>12.5g}")

    if config.algorithm == harness.VAMP_GLM:
        from .engine import run_vamp_glm
        xhat, trace = run_vamp_glm(instance, prior, channel, vamp_config, hook=show)
    else:
        from .engine import run_vamp_slm
        xhat, trace = run_vamp_slm(instance, prior, instance.gamma_w,
                                   vamp_config, hook=show)
    converged = has_converged(trace, vamp_config.stop_tol)
    print(f"final dNMSE {dnmse_db(xhat, instance.x_true):.3f} dB after "
          f"{len(trace)} iteration(s), converged={converged}")
    return 0


def cmd_selftest(_args):
    from .selftest import CHECKS, run_selftest
    failures = run_selftest()
    print(f"{len(CHECKS) - failures} passed, {failures} failed")
    return 1 if failures else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"sweep": cmd_sweep, "single": cmd_single, "selftest": cmd_selftest}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
