"""Command-line entry point: ``nlwlab <command> [--config FILE] [flags]``.

Commands: ``randomize``, ``evolve``, ``ensemble``, ``lp-check``, ``converge``,
``tail``.  Flags override keys of the configuration file.  The output
directory is taken from ``--output``, then the ``directory`` key, then the
``NLWLAB_OUTPUT`` environment variable, then ``./nlwlab-out``.

Exit status: 0 success, 1 failed invariant checks, 2 configuration error,
3 solver blow-up, 4 I/O error.  Errors and warnings are written to stderr as
one JSON object per line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMA, ConfigError, config_hash, parse_config, provenance, serialize
from .ensemble import (
    LinearStatistic,
    convergence_experiment,
    event_frequency_experiment,
    linear_tail_experiment,
    uniform_energy_experiment,
)
from .fourier_field import CauchyPair, FourierField, profile_pair
from .lp_calculus import invariant_battery
from .randomize import SeedSpec, draw_randomized_pair
from .solver import BlowUpError, local_time, solve_truncated

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 1, 2, 3, 4
COMMANDS = ("randomize", "evolve", "ensemble", "lp-check", "converge", "tail")
ENV_OUTPUT = "NLWLAB_OUTPUT"

# flag name -> config key
FLAG_KEYS = {
    "p": "p", "s": "s", "seed": "seed", "sample": "sample", "law": "law", "T": "T",
    "dt_max": "dt_max", "resolution": "resolution", "N": "N", "cutoff": "cutoff",
    "amplitude": "amplitude", "samples": "samples", "workers": "workers", "N_list": "N_list",
    "experiment": "experiment", "q": "q", "r": "r", "c": "c", "gamma": "gamma", "t_star": "t_star",
}


class _Failure(Exception):
    def __init__(self, status, kind, message, **extra):
        super().__init__(message)
        self.status, self.kind, self.extra = status, kind, extra


def _emit(stream, record):
    stream.write(json.dumps(record, sort_keys=True) + "\n")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return "" if x is None else str(x)


def _csv_text(config, columns, rows):
    buf = io.StringIO()
    meta = provenance(config)
    buf.write(f"# nlwlab version={meta['version']} config_hash={meta['config_hash']} "
              f"master_seed={meta['master_seed']}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _write(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data, encoding="utf-8")
    return path


def _snapshot_meta(config):
    meta = provenance(config)
    return {"config": meta["config_hash"], "seed": meta["master_seed"], "version": meta["version"]}


def build_pair(config):
    """Deterministic (unrandomized) Cauchy data described by ``config``."""
    M = config.data_cutoff
    if config.source == "profile":
        return profile_pair(M, config.s, config.delta, config.amplitude, config.velocity)
    try:
        u0 = FourierField.load(config.u0_file)
        u1 = FourierField.load(config.u1_file) if config.u1_file else FourierField.zeros(u0.cutoff)
    except ValueError as exc:
        raise _Failure(EXIT_IO, "io", f"unreadable field snapshot: {exc}") from None
    pair = CauchyPair(u0, u1, config.s)
    if pair.cutoff > config.resolution // 2 - 1:
        raise _Failure(EXIT_CONFIG, "config",
                       f"data cutoff {pair.cutoff} exceeds what resolution {config.resolution} carries")
    return pair


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_randomize(config, out, err):
    pair = build_pair(config)
    seed = SeedSpec(config.seed, config.sample)
    rp = draw_randomized_pair(pair, config.random_law, seed)
    meta = _snapshot_meta(config)
    _write(out / "u0.nlwf", rp.u0.to_bytes(meta))
    _write(out / "u1.nlwf", rp.u1.to_bytes(meta))
    rows = [("data", "H^s", pair.norm()), ("data", "H^0", pair.norm(0.0)),
            ("randomized", "H^s", rp.norm()), ("randomized", "H^0", rp.norm(0.0))]
    _write(out / "randomize.csv", _csv_text(config, ("pair", "norm", "value"), rows))
    return EXIT_OK


def _cmd_evolve(config, out, err):
    pair = build_pair(config)
    rp = draw_randomized_pair(pair, config.random_law, SeedSpec(config.seed, config.sample))
    try:
        tr = solve_truncated(rp, config.N, config.p, config.T, dt_max=config.dt_max,
                             resolution=config.nonlinear_resolution)
    except BlowUpError as exc:
        raise _Failure(EXIT_BLOWUP, "blowup", str(exc), t=exc.t) from None
    columns = ("t", "kinetic", "gradient", "potential", "total", "power", "h1",
               "L2p_v", "L2p_z", "L2p_u")
    rows = zip(tr.times, tr.kinetic, tr.gradient, tr.potential, tr.total, tr.power, tr.h1,
               tr.lr_v, tr.lr_z, tr.lr_u)
    _write(out / "evolve.csv", _csv_text(config, columns, rows))
    meta = _snapshot_meta(config)
    _write(out / "v_final.nlwf", tr.final.v.to_bytes(meta))
    _write(out / "vt_final.nlwf", tr.final.vt.to_bytes(meta))
    return EXIT_OK


def _write_report(config, out, name, report, err):
    header = {"type": "header", "experiment": report.experiment, **provenance(config),
              "samples": report.sample_count}
    _write(out / f"{name}.ndjson", report.to_ndjson(header))
    _write(out / f"{name}_summary.csv", _csv_text(config, ("key", "value"), report.summary_rows()))
    for d in report.diagnostics:
        _emit(err, {"status": "warning", "command": name, "message": d})


def _cmd_ensemble(config, out, err):
    pair = build_pair(config)
    seed = SeedSpec(config.seed)
    G = config.nonlinear_resolution
    if config.experiment == "energy":
        report = uniform_energy_experiment(pair, config.random_law, config.p, config.N_list, config.T,
                                           config.samples, seed, dt_max=config.dt_max, resolution=G,
                                           workers=config.workers)
    else:
        t_star = config.t_star
        if t_star is None:
            t_star = local_time(0.0, pair.norm(0.0), config.c, config.p, config.gamma)
        report = event_frequency_experiment(pair, config.random_law, config.p, config.T, t_star,
                                            config.samples, seed, prefactors=config.prefactors,
                                            workers=config.workers)
    _write_report(config, out, "ensemble", report, err)
    if report.summary.get("blowups"):
        raise _Failure(EXIT_BLOWUP, "blowup", f"{report.summary['blowups']} trajectories blew up")
    return EXIT_OK


def _cmd_tail(config, out, err):
    pair = build_pair(config)
    stat = LinearStatistic(config.q, config.r, config.T, config.operator)
    report = linear_tail_experiment(pair, config.random_law, stat, config.samples, SeedSpec(config.seed),
                                    workers=config.workers, long_time=math.isinf(config.q), eps=config.eps)
    _write_report(config, out, "tail", report, err)
    return EXIT_OK


def _cmd_converge(config, out, err):
    pair = build_pair(config)
    report = convergence_experiment(pair, config.random_law, config.p, config.T, config.N_list,
                                    config.samples, SeedSpec(config.seed), dt_max=config.dt_max,
                                    c=config.c, gamma=config.gamma, resolution=config.nonlinear_resolution,
                                    workers=config.workers)
    _write_report(config, out, "converge", report, err)
    if any(r["blowup"] for r in report.records):
        raise _Failure(EXIT_BLOWUP, "blowup", "reference trajectory blew up")
    return EXIT_OK


def _cmd_lp_check(config, out, err):
    M = min(config.data_cutoff, 7)
    rows = invariant_battery(M=M, rng=SeedSpec(config.seed).stream(9, 0))
    table = [(r.check, r.case, r.value, r.bound, r.passed) for r in rows]
    _write(out / "lp_check.csv", _csv_text(config, ("check", "case", "value", "bound", "pass"), table))
    failed = [r for r in rows if not r.passed]
    for r in failed:
        _emit(err, {"status": "error", "kind": "check", "check": r.check, "case": r.case, "value": r.value})
    return EXIT_CHECKS if failed else EXIT_OK


HANDLERS = {"randomize": _cmd_randomize, "evolve": _cmd_evolve, "ensemble": _cmd_ensemble,
            "lp-check": _cmd_lp_check, "converge": _cmd_converge, "tail": _cmd_tail}


def dispatch(command, config, output_dir, err=None):
    """Run ``command`` with ``config``, writing into ``output_dir``; returns the exit status."""
    err = sys.stderr if err is None else err
    if command not in HANDLERS:
        _emit(err, {"status": "error", "kind": "usage", "message": f"unknown command {command!r}",
                    "exit": EXIT_CONFIG})
        return EXIT_CONFIG
    out = Path(output_dir)
    try:
        return HANDLERS[command](config, out, err)
    except _Failure as exc:
        _emit(err, {"status": "error", "kind": exc.kind, "message": str(exc), "exit": exc.status, **exc.extra})
        return exc.status
    except ConfigError as exc:
        _emit(err, {"status": "error", "kind": "config", "problems": exc.problems, "exit": EXIT_CONFIG})
        return EXIT_CONFIG
    except OSError as exc:
        _emit(err, {"status": "error", "kind": "io", "message": str(exc), "exit": EXIT_IO})
        return EXIT_IO


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="nlwlab", allow_abbrev=False,
        description="Pseudospectral experiments for the defocusing wave equation with random data on T^3.")
    parser.add_argument("--version", action="version", version=f"nlwlab {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="configuration file (INI style)")
    parser.add_argument("--output", help="output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key (repeatable)")
    parser.add_argument("--print-config", action="store_true",
                        help="print the resolved configuration and its hash, then exit")
    for flag in FLAG_KEYS:
        parser.add_argument(f"--{flag.replace('_', '-')}", dest=f"flag_{flag}", metavar="VALUE",
                            help=f"override '{FLAG_KEYS[flag]}'")
    return parser


def _override_text(args):
    pairs = []
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
        pairs.append((key.strip(), value.strip()))
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, f"flag_{flag}")
        if value is not None:
            pairs.append((key, value))
    return pairs


def load_config(text, overrides=()):
    """Apply ``(key, value)`` overrides to configuration text and parse it."""
    overrides = list(overrides)
    unknown = [k for k, _ in overrides if k not in SCHEMA]
    if unknown:
        raise ConfigError([f"unknown key {k!r} in override" for k in unknown])
    keys = {k for k, _ in overrides}
    kept = []
    for line in text.splitlines():
        stripped = line.split("#", 1)[0].split(";", 1)[0]
        key = stripped.split("=", 1)[0].split(":", 1)[0].strip()
        if ("=" in stripped or ":" in stripped) and key in keys:
            kept.append("")  # keep line numbers stable
        else:
            kept.append(line)
    # overrides go before any section header, where every key is accepted
    head = [f"{k} = {v}" for k, v in dict(overrides).items()]
    return parse_config("\n".join(head + kept), line_offset=len(head))


def main(argv=None):
    args = build_parser().parse_args(argv)
    err = sys.stderr
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    except OSError as exc:
        _emit(err, {"status": "error", "kind": "io", "message": str(exc), "exit": EXIT_IO})
        return EXIT_IO
    try:
        config, warnings = load_config(text, _override_text(args))
    except ConfigError as exc:
        _emit(err, {"status": "error", "kind": "config", "problems": exc.problems, "exit": EXIT_CONFIG})
        return EXIT_CONFIG
    for w in warnings:
        _emit(err, {"status": "warning", "kind": "config", "message": w})
    if args.print_config:
        sys.stdout.write(f"# config_hash = {config_hash(config)}\n" + serialize(config))
        return EXIT_OK
    output = args.output or config.directory or os.environ.get(ENV_OUTPUT) or "nlwlab-out"
    return dispatch(args.command, config, output, err)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
