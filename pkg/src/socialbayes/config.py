"""Experiment configuration: flat sectioned key-value files.

Sections: [params] (system parameters, master seed, initial means),
[schedule] (graph schedule spec), [run] (horizon, ensemble size,
recording cadence), and optional [verify], [ratefit], [output].
``parse_config`` and ``serialize_config`` are inverse up to formatting,
so configs can be normalized and diffed.  The master seed is mandatory:
reruns of the same file must be reproducible, so there is no wall-clock
fallback.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import SystemParams
from .schedules import (
    GraphSchedule,
    make_counterexample_schedule,
    make_periodic_schedule,
    make_random_schedule,
    make_table_schedule,
)

SCHEDULE_KINDS = ("periodic", "random", "counterexample", "explicit-table")
PEER_RULES = ("none", "ring", "complete", "edges")
CHECK_NAMES = ("identities", "diagonal", "contraction", "truth_pull",
               "decay", "norms")
FAULT_HOOKS = ("none", "transition")
OUTPUT_FORMATS = ("csv", "jsonl")


class ConfigError(ValueError):
    """Config problem with section/key context for diagnostics."""

    def __init__(self, message: str, section: str | None = None,
                 key: str | None = None):
        self.section = section
        self.key = key
        where = ""
        if section is not None:
            where = "[%s]" % section + ("." + key if key else "") + ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class ScheduleSpec:
    """Declarative schedule description; build_schedule turns it into arrays."""

    kind: str
    kappa: int | None = None
    peer_rule: str = "none"
    peer_edges: tuple = ()
    edge_probability: float | None = None
    start: float | None = None
    edges: tuple = ()            # explicit-table rows (t, i, j)
    table_horizon: int | None = None


@dataclass(frozen=True)
class VerifySpec:
    checks: tuple = CHECK_NAMES
    kappa: int | None = None
    inject_fault: str = "none"


@dataclass(frozen=True)
class RatefitSpec:
    input: str
    window: tuple
    d: int
    kappa: int
    slack: float = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    params: SystemParams
    schedule: ScheduleSpec
    horizon: int
    ensemble: int = 1
    x0: tuple = (0.0,)           # scalar broadcast when length 1
    record_every: int | None = 1
    record_times: tuple | None = None
    verify: VerifySpec = field(default_factory=VerifySpec)
    ratefit: RatefitSpec | None = None
    out_dir: str = "out"
    out_format: str = "csv"


def _get(section, key, conv, default=..., name=""):
    if key not in section:
        if default is ...:
            raise ConfigError("required key missing", name, key)
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("cannot parse %r (%s)" % (raw, exc), name, key)


def _as_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ValueError("expected on/off")


def _as_floats(raw: str) -> tuple:
    parts = raw.replace(",", " ").split()
    if not parts:
        raise ValueError("empty value")
    return tuple(float(p) for p in parts)


def _as_ints(raw: str) -> tuple:
    return tuple(int(p) for p in raw.replace(",", " ").split())


def _parse_edge_lines(raw: str, name: str, key: str) -> tuple:
    edges = []
    for lineno, line in enumerate(raw.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError("edge line %d: expected 't i j', got %r"
                              % (lineno, line), name, key)
        try:
            t, i, j = (int(p) for p in parts)
        except ValueError:
            raise ConfigError("edge line %d: non-integer field in %r"
                              % (lineno, line), name, key)
        edges.append((t, i, j))
    return tuple(edges)


def _parse_peer_lines(raw: str, name: str, key: str) -> tuple:
    pairs = []
    for lineno, line in enumerate(raw.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError("peer edge line %d: expected 'i j', got %r"
                              % (lineno, line), name, key)
        pairs.append((int(parts[0]), int(parts[1])))
    return tuple(pairs)


def _parse_params(cp) -> tuple:
    if "params" not in cp:
        raise ConfigError("section missing", "params")
    sec = cp["params"]
    name = "params"
    n = _get(sec, "n", int, name=name)
    if n < 1:
        raise ConfigError("need n >= 1", name, "n")
    tau = _get(sec, "tau", float, 1.0, name)
    tau0 = _get(sec, "tau0", float, 1.0, name)
    if tau <= 0 or tau0 <= 0:
        raise ConfigError("precisions must be positive", name, "tau")
    truth = _get(sec, "truth", float, 0.0, name)
    # reproducibility first: the seed has no default
    seed = _get(sec, "seed", int, name=name)
    truth_noise = _get(sec, "truth_noise", _as_bool, True, name)
    x0 = _get(sec, "x0", _as_floats, (truth,), name)
    if len(x0) not in (1, n, n + 1):
        raise ConfigError("x0 needs 1, n, or n+1 values (got %d)" % len(x0),
                          name, "x0")
    params = SystemParams(n=n, tau=tau, tau0=tau0, truth=truth, seed=seed,
                          truth_noise=truth_noise)
    return params, x0


def _parse_schedule(cp, params: SystemParams) -> ScheduleSpec:
    if "schedule" not in cp:
        raise ConfigError("section missing", "schedule")
    sec = cp["schedule"]
    name = "schedule"
    kind = _get(sec, "kind", str, name=name)
    if kind not in SCHEDULE_KINDS:
        raise ConfigError("unknown kind %r; expected one of %s"
                          % (kind, SCHEDULE_KINDS), name, "kind")
    if kind == "periodic":
        kappa = _get(sec, "kappa", int, name=name)
        peer_rule = _get(sec, "peer_rule", str, "none", name)
        if peer_rule not in PEER_RULES:
            raise ConfigError("unknown peer_rule %r" % peer_rule, name,
                              "peer_rule")
        peer_edges = ()
        if peer_rule == "edges":
            raw = _get(sec, "peer_edges", str, name=name)
            peer_edges = _parse_peer_lines(raw, name, "peer_edges")
        return ScheduleSpec(kind=kind, kappa=kappa, peer_rule=peer_rule,
                            peer_edges=peer_edges)
    if kind == "random":
        kappa = _get(sec, "kappa", int, name=name)
        p = _get(sec, "edge_probability", float, 0.0, name)
        if not 0.0 <= p <= 1.0:
            raise ConfigError("edge_probability must lie in [0, 1]", name,
                              "edge_probability")
        return ScheduleSpec(kind=kind, kappa=kappa, edge_probability=p)
    if kind == "counterexample":
        if params.n != 2:
            raise ConfigError("counterexample schedule requires n = 2 "
                              "(got n = %d)" % params.n, name, "kind")
        start = _get(sec, "start", float, 2.0, name)
        return ScheduleSpec(kind=kind, start=start)
    # explicit-table: inline edge lines, an external file, or both
    edges = ()
    if "edges" in sec:
        edges += _parse_edge_lines(sec["edges"], name, "edges")
    if "path" in sec:
        path = Path(sec["path"].strip())
        if not path.exists():
            raise ConfigError("edge file not found: %s" % path, name, "path")
        edges += _parse_edge_lines(path.read_text(), name, "path")
    if not edges:
        raise ConfigError("explicit-table needs 'edges' lines or 'path'",
                          name, "kind")
    table_horizon = _get(sec, "horizon", int, None, name)
    return ScheduleSpec(kind=kind, edges=edges, table_horizon=table_horizon)


def _parse_run(cp) -> tuple:
    if "run" not in cp:
        raise ConfigError("section missing", "run")
    sec = cp["run"]
    name = "run"
    horizon = _get(sec, "horizon", int, name=name)
    if horizon < 0:
        raise ConfigError("need horizon >= 0", name, "horizon")
    ensemble = _get(sec, "ensemble", int, 1, name)
    if ensemble < 1:
        raise ConfigError("need ensemble >= 1", name, "ensemble")
    record_times = _get(sec, "record_times", _as_ints, None, name)
    record_every = _get(sec, "record_every", int, None, name)
    if record_times is not None and record_every is not None:
        raise ConfigError("record_every and record_times are exclusive",
                          name, "record_every")
    if record_times is None and record_every is None:
        record_every = 1
    if record_every is not None and record_every < 1:
        raise ConfigError("need record_every >= 1", name, "record_every")
    return horizon, ensemble, record_every, record_times


def _parse_verify(cp) -> VerifySpec:
    if "verify" not in cp:
        return VerifySpec()
    sec = cp["verify"]
    name = "verify"
    if "checks" in sec:
        names = tuple(sec["checks"].split())
        for c in names:
            if c not in CHECK_NAMES:
                raise ConfigError("unknown check %r; expected subset of %s"
                                  % (c, CHECK_NAMES), name, "checks")
    else:
        names = CHECK_NAMES
    kappa = _get(sec, "kappa", int, None, name)
    fault = _get(sec, "inject_fault", str, "none", name)
    if fault not in FAULT_HOOKS:
        raise ConfigError("unknown fault hook %r" % fault, name,
                          "inject_fault")
    return VerifySpec(checks=names, kappa=kappa, inject_fault=fault)


def _parse_ratefit(cp) -> RatefitSpec | None:
    if "ratefit" not in cp:
        return None
    sec = cp["ratefit"]
    name = "ratefit"
    inp = _get(sec, "input", str, name=name)
    window = _get(sec, "window", _as_ints, name=name)
    if len(window) != 2 or not 0 < window[0] < window[1]:
        raise ConfigError("window needs two increasing positive times",
                          name, "window")
    d = _get(sec, "d", int, name=name)
    kappa = _get(sec, "kappa", int, name=name)
    if d < 1 or kappa < 1:
        raise ConfigError("need d >= 1 and kappa >= 1", name, "d")
    slack = _get(sec, "slack", float, 0.05, name)
    return RatefitSpec(input=inp, window=window, d=d, kappa=kappa, slack=slack)


def _parse_output(cp) -> tuple:
    if "output" not in cp:
        return "out", "csv"
    sec = cp["output"]
    directory = _get(sec, "directory", str, "out", "output")
    fmt = _get(sec, "format", str, "csv", "output")
    if fmt not in OUTPUT_FORMATS:
        raise ConfigError("unknown format %r; expected one of %s"
                          % (fmt, OUTPUT_FORMATS), "output", "format")
    return directory, fmt


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        # configparser reports the offending line number itself
        raise ConfigError(str(exc))
    params, x0 = _parse_params(cp)
    schedule = _parse_schedule(cp, params)
    horizon, ensemble, record_every, record_times = _parse_run(cp)
    out_dir, out_format = _parse_output(cp)
    return ExperimentConfig(
        params=params, schedule=schedule, horizon=horizon, ensemble=ensemble,
        x0=x0, record_every=record_every, record_times=record_times,
        verify=_parse_verify(cp), ratefit=_parse_ratefit(cp),
        out_dir=out_dir, out_format=out_format,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config file not found: %s" % path)
    return parse_config(path.read_text())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(serialize_config(c)) == c."""
    out = io.StringIO()
    p = cfg.params
    out.write("[params]\n")
    out.write("n = %d\n" % p.n)
    out.write("tau = %s\n" % _fmt(p.tau))
    out.write("tau0 = %s\n" % _fmt(p.tau0))
    out.write("truth = %s\n" % _fmt(p.truth))
    out.write("truth_noise = %s\n" % _fmt(p.truth_noise))
    out.write("seed = %d\n" % p.seed)
    out.write("x0 = %s\n" % " ".join(_fmt(float(v)) for v in cfg.x0))

    s = cfg.schedule
    out.write("\n[schedule]\n")
    out.write("kind = %s\n" % s.kind)
    if s.kind == "periodic":
        out.write("kappa = %d\n" % s.kappa)
        out.write("peer_rule = %s\n" % s.peer_rule)
        if s.peer_rule == "edges":
            out.write("peer_edges =\n")
            for i, j in s.peer_edges:
                out.write("    %d %d\n" % (i, j))
    elif s.kind == "random":
        out.write("kappa = %d\n" % s.kappa)
        out.write("edge_probability = %s\n" % _fmt(s.edge_probability))
    elif s.kind == "counterexample":
        out.write("start = %s\n" % _fmt(s.start))
    else:
        if s.table_horizon is not None:
            out.write("horizon = %d\n" % s.table_horizon)
        out.write("edges =\n")
        for t, i, j in s.edges:
            out.write("    %d %d %d\n" % (t, i, j))

    out.write("\n[run]\n")
    out.write("horizon = %d\n" % cfg.horizon)
    out.write("ensemble = %d\n" % cfg.ensemble)
    if cfg.record_times is not None:
        out.write("record_times = %s\n" % " ".join(str(t) for t in cfg.record_times))
    else:
        out.write("record_every = %d\n" % cfg.record_every)

    v = cfg.verify
    out.write("\n[verify]\n")
    out.write("checks = %s\n" % " ".join(v.checks))
    if v.kappa is not None:
        out.write("kappa = %d\n" % v.kappa)
    out.write("inject_fault = %s\n" % v.inject_fault)

    if cfg.ratefit is not None:
        r = cfg.ratefit
        out.write("\n[ratefit]\n")
        out.write("input = %s\n" % r.input)
        out.write("window = %d %d\n" % r.window)
        out.write("d = %d\n" % r.d)
        out.write("kappa = %d\n" % r.kappa)
        out.write("slack = %s\n" % _fmt(r.slack))

    out.write("\n[output]\n")
    out.write("directory = %s\n" % cfg.out_dir)
    out.write("format = %s\n" % cfg.out_format)
    return out.getvalue()


def build_schedule(cfg: ExperimentConfig) -> GraphSchedule:
    """Materialize the configured schedule for the configured horizon."""
    p, s = cfg.params, cfg.schedule
    try:
        if s.kind == "periodic":
            peer = s.peer_rule if s.peer_rule != "edges" else s.peer_edges
            return make_periodic_schedule(p.n, s.kappa, peer_rule=peer)
        if s.kind == "random":
            return make_random_schedule(p.n, s.kappa, s.edge_probability,
                                        seed=p.seed)
        if s.kind == "counterexample":
            horizon = max(cfg.horizon, 1)
            return make_counterexample_schedule(p.ratio, horizon,
                                                start=s.start)
        return make_table_schedule(p.n, s.edges, horizon=s.table_horizon)
    except (ValueError, IndexError) as exc:
        raise ConfigError("cannot build %s schedule: %s" % (s.kind, exc),
                          "schedule")
