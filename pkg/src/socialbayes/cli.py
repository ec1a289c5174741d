"""Command-line experiment runner.

Subcommands: simulate | expected | verify | counterexample | ratefit.
Every subcommand takes --config PATH plus optional --seed, --out, and
--horizon overrides.  Exit status: 0 when all selected checks pass, 1 on
a check failure, 2 on configuration or precondition errors, so the tool
can gate CI jobs on the model's bound suite.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import analysis, tables
from .config import (
    ConfigError,
    ExperimentConfig,
    build_schedule,
    load_config,
)
from .dynamics import Trajectory, run_ensemble
from .expected import bundle_at, run_expected
from .schedules import (
    ScheduleConstructionError,
    ScheduleHorizonError,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2

# [verify] selection name -> check-name prefixes it covers
_WINDOW_CHECKS = {
    "diagonal": "diagonal_bound[",
    "contraction": "contraction[",
    "truth_pull": "truth_pull[",
    "decay": "product_decay[",
}


def _say(msg: str):
    print(msg)


def _warn(msg: str):
    print("warning: " + msg, file=sys.stderr)


def _x0(cfg: ExperimentConfig):
    if len(cfg.x0) == 1:
        return float(cfg.x0[0])
    return np.asarray(cfg.x0, dtype=float)


def _out_dir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _ext(cfg: ExperimentConfig) -> str:
    return "csv" if cfg.out_format == "csv" else "jsonl"


def cmd_simulate(cfg: ExperimentConfig) -> int:
    schedule = build_schedule(cfg)
    ens = run_ensemble(schedule, cfg.params, cfg.horizon,
                       n_runs=cfg.ensemble, x0=_x0(cfg),
                       record_every=cfg.record_every,
                       record_times=cfg.record_times)
    out = _out_dir(cfg)
    ext = _ext(cfg)
    for r in range(ens.n_runs):
        traj = Trajectory(times=ens.times, means=ens.means[r],
                          ledger=ens.ledger, params=cfg.params, run_index=r)
        tables.write_trajectory(out / ("run-%04d.%s" % (r, ext)), traj,
                                cfg.out_format)
    summary = tables.write_ensemble_summary(out / ("summary." + ext), ens,
                                            cfg.out_format)
    _say("simulated %d run(s), horizon %d; wrote %s" %
         (ens.n_runs, cfg.horizon, summary))
    return EXIT_OK


def _thin_expected(expected, cfg: ExperimentConfig):
    times = expected.times
    if cfg.record_times is not None:
        wanted = np.asarray(cfg.record_times, dtype=np.int64)
        bad = wanted[(wanted < 0) | (wanted > times[-1])]
        if bad.size:
            raise ConfigError("record time %d outside horizon %d"
                              % (int(bad[0]), int(times[-1])), "run",
                              "record_times")
        keep = np.isin(times, wanted)
    else:
        keep = (times % cfg.record_every == 0) | (times == times[-1])
    return dataclasses.replace(expected, times=times[keep],
                               means=expected.means[keep],
                               norms=expected.norms[keep])


def cmd_expected(cfg: ExperimentConfig) -> int:
    if cfg.ensemble > 1:
        _warn("expected process is deterministic; ignoring ensemble = %d"
              % cfg.ensemble)
    schedule = build_schedule(cfg)
    expected = run_expected(schedule, cfg.params, cfg.horizon, x0=_x0(cfg))
    thinned = _thin_expected(expected, cfg)
    out = _out_dir(cfg)
    path = tables.write_expected_trajectory(
        out / ("expected." + _ext(cfg)), thinned, schedule, cfg.out_format)
    _say("expected process over horizon %d; wrote %s" % (cfg.horizon, path))
    return EXIT_OK


def _inject_transition_fault(checks, schedule, params):
    """Corrupt a copy of the first transition and fold the damage in.

    The perturbed entry breaks exact stochasticity by 1e-3, so the
    identity checks must go red; bundles built by the schedule itself are
    untouched.
    """
    bundle = bundle_at(schedule, params, 0)
    full = bundle.full.copy()
    full[1, 1] += 1e-3
    bad = dataclasses.replace(bundle, full=full,
                              reduced=full[1:, 1:].copy(),
                              truth_pull=full[1:, 0].copy())
    worst_rows = float(np.max(np.abs(bad.full.sum(axis=1) - 1.0)))
    worst_red = float(np.max(np.abs(bad.truth_pull
                                    + bad.reduced.sum(axis=1) - 1.0)))
    patched = []
    for c in checks:
        if c.name.startswith("stochasticity["):
            c = dataclasses.replace(c, lhs=max(c.lhs, worst_rows),
                                    detail={**c.detail, "fault": "transition"})
        elif c.name.startswith("reduction["):
            c = dataclasses.replace(c, lhs=max(c.lhs, worst_red),
                                    detail={**c.detail, "fault": "transition"})
        patched.append(c)
    return patched


def cmd_verify(cfg: ExperimentConfig) -> int:
    schedule = build_schedule(cfg)
    selected = cfg.verify.checks
    checks = []
    if "identities" in selected:
        idents = analysis.check_transition_identities(schedule, cfg.params,
                                                      cfg.horizon)
        if cfg.verify.inject_fault == "transition":
            idents = _inject_transition_fault(idents, schedule, cfg.params)
        checks.extend(idents)
    windowed = [name for name in selected if name in _WINDOW_CHECKS]
    if windowed:
        kappa = cfg.verify.kappa
        if kappa is None:
            kappa = getattr(schedule, "kappa", None)
        if kappa is None:
            raise ConfigError("windowed checks need kappa (schedule kind "
                              "has none)", "verify", "kappa")
        swept = analysis.sweep_window_checks(schedule, cfg.params,
                                             cfg.horizon, kappa)
        prefixes = tuple(_WINDOW_CHECKS[name] for name in windowed)
        checks.extend(c for c in swept if c.name.startswith(prefixes))
    if "norms" in selected:
        checks.extend(analysis.check_norm_inequalities())

    out = _out_dir(cfg)
    meta = {"kind": "check-report", "checks": len(checks),
            "inject_fault": cfg.verify.inject_fault}
    tables.write_check_report(out / ("verify." + _ext(cfg)), checks,
                              cfg.out_format, extra_meta=meta)
    text = tables.check_report_text(checks)
    (out / "verify.txt").write_text(
        tables.timestamp_line() + "\n" + text + ("\n" if text else ""))
    if text:
        _say(text)
    failed = [c for c in checks if not c.passed and not c.gated]
    gated = sum(1 for c in checks if c.gated)
    _say("verify: %d check(s), %d failed, %d gated"
         % (len(checks), len(failed), gated))
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_counterexample(cfg: ExperimentConfig) -> int:
    if cfg.schedule.kind != "counterexample":
        raise ConfigError("this command needs kind = counterexample",
                          "schedule", "kind")
    if cfg.params.n != 2:
        raise ConfigError("needs exactly n = 2 learning agents", "params", "n")
    schedule = build_schedule(cfg)
    verdict = analysis.counterexample_check(schedule, cfg.params, cfg.horizon)

    out = _out_dir(cfg)
    ext = _ext(cfg)
    tables.write_switch_table(out / ("switches." + ext), schedule.switches,
                              fmt=cfg.out_format)
    x0 = cfg.params.truth + schedule.start
    expected = run_expected(schedule, cfg.params, cfg.horizon, x0=x0)
    tables.write_expected_trajectory(out / ("trajectory." + ext),
                                     _thin_expected(expected, cfg),
                                     schedule, cfg.out_format)
    lines = [
        "status: %s" % verdict.status,
        "cycles realized: %d" % verdict.cycles_realized,
        "min truth-shifted mean: %s" % tables.format_value(verdict.min_shifted),
        "truth edge counts: %s" % (verdict.truth_edge_counts,),
    ]
    (out / "verdict.txt").write_text(
        tables.timestamp_line() + "\n" + "\n".join(lines) + "\n")
    for line in lines:
        _say(line)
    return EXIT_OK if verdict.status == "pass" else EXIT_CHECK_FAILED


def _resolve_input(cfg: ExperimentConfig, name: str) -> Path:
    path = Path(name)
    if path.is_absolute():
        candidates = [path]
    else:
        candidates = [path, Path(cfg.out_dir) / path]
    for cand in candidates:
        if cand.exists():
            return cand
    raise ConfigError("input file not found: %s" % name, "ratefit", "input")


def cmd_ratefit(cfg: ExperimentConfig) -> int:
    if cfg.ratefit is None:
        raise ConfigError("section missing", "ratefit")
    spec = cfg.ratefit
    table = tables.read_table(_resolve_input(cfg, spec.input))
    times, norms = tables.trajectory_norms(table)
    fit = analysis.fit_rate(times, norms, window=spec.window, d=spec.d,
                            kappa=spec.kappa, slack=spec.slack)
    out = _out_dir(cfg)
    ext = _ext(cfg)
    meta = {"input": spec.input}
    tables.write_rate_table(out / ("ratefit-points." + ext), times, norms,
                            meta=meta, fmt=cfg.out_format)
    tables.write_rate_report(out / ("ratefit." + ext), fit, meta=meta,
                             fmt=cfg.out_format)
    _say("rate fit over [%d, %d]: slope %.6f vs bound %.6f + slack %.2f (%s)"
         % (fit.window[0], fit.window[1], fit.slope, fit.theoretical_bound,
            fit.slack, fit.status))
    return EXIT_OK if fit.passed else EXIT_CHECK_FAILED


_COMMANDS = {
    "simulate": (cmd_simulate, "run the noisy belief dynamics, write "
                               "trajectories and an ensemble summary"),
    "expected": (cmd_expected, "run the deterministic expected process"),
    "verify": (cmd_verify, "evaluate the bound and identity checks"),
    "counterexample": (cmd_counterexample, "build the alternating trap "
                                           "schedule and check its claims"),
    "ratefit": (cmd_ratefit, "fit a convergence rate from a trajectory file"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socialbayes",
        description="Simulation and verification toolkit for Bayesian "
                    "learning over time-varying networks with a truth agent.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in _COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, metavar="PATH",
                        help="experiment config file")
        sp.add_argument("--seed", type=int, metavar="N",
                        help="override the config's master seed")
        sp.add_argument("--out", metavar="DIR",
                        help="override the output directory")
        sp.add_argument("--horizon", type=int, metavar="N",
                        help="override the run horizon")
        sp.set_defaults(func=func)
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg = dataclasses.replace(
            cfg, params=dataclasses.replace(cfg.params, seed=args.seed))
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    if args.horizon is not None:
        if args.horizon < 0:
            raise ConfigError("need horizon >= 0", "run", "horizon")
        cfg = dataclasses.replace(cfg, horizon=args.horizon)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return args.func(cfg)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ScheduleHorizonError, ScheduleConstructionError) as exc:
        print("schedule error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
