"""Experiment harness: condition-number sweeps, trial records, CSV output.

A sweep runs `trials` independent trials at every requested condition
number, records the debiased NMSE at every iteration through the engine
hook, and writes one CSV row per (kappa, trial, iteration) plus a per-kappa
summary table. Seeds derive from (base_seed, trial) only, so the same
signal, noise, and orthogonal factors are reused across the kappa grid;
this reduces the variance of cross-kappa comparisons.

Records are buffered per trial and written in (kappa, trial) order whatever
the completion order, so re-running a sweep with the same config yields a
byte-identical CSV apart from the wall_time_ms column.
"""

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import VampConfig, has_converged, run_vamp_glm, run_vamp_slm
from .metrics import dnmse_db
from .model import AWGN, BERNOULLI_GAUSSIAN, LAPLACIAN, MAP, MMSE, PROBIT, ChannelSpec, PriorSpec
from .synth import MatrixGenSpec, SignalSpec, generate_instance

VAMP_GLM = "vamp_glm"
VAMP_SLM = "vamp_slm"

CSV_HEADER = ["kappa", "trial", "iteration", "dnmse_db", "gamma1", "tau1",
              "converged", "wall_time_ms"]
SUMMARY_HEADER = ["kappa", "trials", "mean_final_dnmse_db", "median_final_dnmse_db",
                  "mean_iterations", "converged_fraction"]


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one sweep; field names double as config-file keys."""

    kappas: tuple = ()
    trials: int = 1
    n: int = 512
    m: int = 2048
    k_nonzero: int = 16
    snr_db: float = 40.0
    algorithm: str = VAMP_GLM
    prior: str = BERNOULLI_GAUSSIAN
    prior_rho: float | None = None
    prior_sigma2: float = 1.0
    prior_lam: float = 1.0
    prior_mode: str = MMSE
    channel: str = PROBIT
    max_iters: int = 100
    damping: float = 1.0
    stop_tol: float = 1e-8
    init_gamma1: float = 1e-8
    init_tau1: float = 1e-8
    base_seed: int = 0
    threads: int = 1
    out: str = "sweep.csv"

    def __post_init__(self):
        object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))
        if len(self.kappas) == 0:
            raise ValueError("kappas must be nonempty")
        if any(k < 1.0 for k in self.kappas):
            raise ValueError("every kappa must be >= 1")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.algorithm not in (VAMP_GLM, VAMP_SLM):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.algorithm == VAMP_SLM and self.channel != AWGN:
            raise ValueError("vamp_slm requires the awgn channel")
        # Validate the derived specs eagerly so config errors surface here.
        self.make_prior_spec()
        SignalSpec(n=self.n, k_nonzero=self.k_nonzero)

    def make_prior_spec(self):
        if self.prior == BERNOULLI_GAUSSIAN:
            rho = self.k_nonzero / self.n if self.prior_rho is None else self.prior_rho
            return PriorSpec.bernoulli_gaussian(rho, self.prior_sigma2, mode=self.prior_mode)
        if self.prior == LAPLACIAN:
            return PriorSpec.laplacian(self.prior_lam, mode=self.prior_mode)
        raise ValueError(f"unknown prior {self.prior!r}")

    def make_vamp_config(self):
        return VampConfig(
            max_iters=self.max_iters,
            damping=self.damping,
            stop_tol=self.stop_tol if self.stop_tol > 0.0 else None,
            init_gamma1=self.init_gamma1,
            init_tau1=self.init_tau1,
        )


@dataclass(frozen=True)
class TrialRecord:
    """One CSV row: metrics of a single iteration of a single trial."""

    kappa: float
    trial: int
    iteration: int
    dnmse_db: float
    gamma1: float
    tau1: float
    converged: bool
    wall_time_ms: float

    def row(self):
        return [
            repr(float(self.kappa)),
            str(self.trial),
            str(self.iteration),
            repr(float(self.dnmse_db)),
            repr(float(self.gamma1)),
            repr(float(self.tau1)),
            "1" if self.converged else "0",
            repr(float(self.wall_time_ms)),
        ]


_CONFIG_PARSERS = {
    "kappas": lambda v: tuple(float(p) for p in v.split(",") if p.strip()),
    "trials": int, "n": int, "m": int, "k_nonzero": int,
    "snr_db": float, "algorithm": str, "prior": str,
    "prior_rho": lambda v: None if v.lower() == "auto" else float(v),
    "prior_sigma2": float, "prior_lam": float, "prior_mode": str,
    "channel": str, "max_iters": int, "damping": float, "stop_tol": float,
    "init_gamma1": float, "init_tau1": float,
    "base_seed": int, "threads": int, "out": str,
}


def load_config(path, **overrides):
    """Parse a flat `key = value` config file into a SweepConfig.

    Lines starting with '#' and blank lines are ignored; unknown keys are
    rejected. Keyword overrides (e.g. from CLI flags) win over file values.
    """
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _CONFIG_PARSERS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in values:
                raise ValueError(f"{path}:{lineno}: duplicate config key {key!r}")
            try:
                values[key] = _CONFIG_PARSERS[key](val)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SweepConfig(**values)


def run_trial(config: SweepConfig, kappa, trial):
    """Generate and solve one instance; return its per-iteration records.

    A failure inside the solver is reported as a single sentinel record with
    dnmse_db = inf rather than raised, so one bad trial cannot abort a sweep.
    """
    mspec = MatrixGenSpec(m=config.m, n=config.n, kappa=kappa,
                          seed=(config.base_seed, trial))
    sspec = SignalSpec(n=config.n, k_nonzero=config.k_nonzero,
                       seed=(config.base_seed, trial))
    instance = generate_instance(mspec, sspec, config.channel, config.snr_db,
                                 noise_seed=(config.base_seed, trial))
    channel_spec = ChannelSpec(kind=config.channel, gamma_w=instance.gamma_w)
    prior_spec = config.make_prior_spec()
    vamp_config = config.make_vamp_config()

    rows = []
    start = time.perf_counter()

    def observe(state):
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        tau1 = getattr(state, "tau1", math.nan)
        rows.append([state.k, dnmse_db(state.xhat1, instance.x_true),
                     state.gamma1, tau1, elapsed_ms])

    try:
        if config.algorithm == VAMP_GLM:
            _, trace = run_vamp_glm(instance, prior_spec, channel_spec,
                                    vamp_config, hook=observe)
        else:
            _, trace = run_vamp_slm(instance, prior_spec, instance.gamma_w,
                                    vamp_config, hook=observe)
        converged = has_converged(trace, vamp_config.stop_tol)
    except Exception:
        return [TrialRecord(kappa=kappa, trial=trial, iteration=0,
                            dnmse_db=math.inf, gamma1=math.nan, tau1=math.nan,
                            converged=False, wall_time_ms=0.0)]
    return [
        TrialRecord(kappa=kappa, trial=trial, iteration=k, dnmse_db=db,
                    gamma1=g1, tau1=t1, converged=converged, wall_time_ms=ms)
        for k, db, g1, t1, ms in rows
    ]


def _run_trial_task(args):
    config, kappa, trial = args
    return run_trial(config, kappa, trial)


def run_sweep(config: SweepConfig):
    """Execute the sweep, write the records CSV and its summary table.

    Returns (records_path, summary_path). Trials run in a process pool of
    size config.threads (serially when threads == 1); output order is always
    deterministic (kappa order, then trial index, then iteration).
    """
    tasks = [(config, kappa, trial)
             for kappa in config.kappas for trial in range(config.trials)]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            per_trial = list(pool.map(_run_trial_task, tasks, chunksize=1))
    else:
        per_trial = [_run_trial_task(t) for t in tasks]

    records = [rec for batch in per_trial for rec in batch]
    records_path = config.out
    with open(records_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(rec.row())

    summary_path = _summary_path(records_path)
    write_summary(summarize(records_path), summary_path)
    return records_path, summary_path


def _summary_path(records_path):
    stem, ext = os.path.splitext(records_path)
    return f"{stem}_summary{ext}" if ext else f"{stem}_summary"


def read_records(path):
    """Parse a records CSV back into TrialRecord objects."""
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}:1: unexpected header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields")
            try:
                records.append(TrialRecord(
                    kappa=float(row[0]), trial=int(row[1]), iteration=int(row[2]),
                    dnmse_db=float(row[3]), gamma1=float(row[4]), tau1=float(row[5]),
                    converged=row[6] == "1", wall_time_ms=float(row[7]),
                ))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return records


def summarize(records_path):
    """Aggregate a records CSV into per-kappa summary rows.

    Each row: kappa, trial count, mean and median of the final-iteration
    dnmse_db over trials, mean number of iterations run, and the fraction of
    trials that hit the early-stop rule.
    """
    records = read_records(records_path)
    finals = {}
    for rec in records:
        key = (rec.kappa, rec.trial)
        cur = finals.get(key)
        if cur is None or rec.iteration >= cur.iteration:
            finals[key] = rec
    rows = []
    for kappa in sorted({k for k, _ in finals}):
        per_kappa = [finals[key] for key in sorted(finals) if key[0] == kappa]
        db = np.array([rec.dnmse_db for rec in per_kappa])
        iters = np.array([rec.iteration + 1 for rec in per_kappa], dtype=float)
        rows.append({
            "kappa": kappa,
            "trials": len(per_kappa),
            "mean_final_dnmse_db": float(np.mean(db)),
            "median_final_dnmse_db": float(np.median(db)),
            "mean_iterations": float(np.mean(iters)),
            "converged_fraction": float(np.mean([rec.converged for rec in per_kappa])),
        })
    return rows


def write_summary(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for row in rows:
            writer.writerow([
                repr(float(row["kappa"])), str(row["trials"]),
                repr(row["mean_final_dnmse_db"]), repr(row["median_final_dnmse_db"]),
                repr(row["mean_iterations"]), repr(row["converged_fraction"]),
            ])
    return path
