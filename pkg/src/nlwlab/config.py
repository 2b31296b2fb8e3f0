"""Run configuration: INI-style text with sections, validated into :class:`RunConfig`.

Keys have globally unique names.  Sections only group them; a key may also
appear before the first section header.  Unknown keys, keys in the wrong
section and malformed values are all reported together.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import asdict, dataclass, fields

from . import __version__
from .fourier_field import is_power_of_two
from .randomize import RandomLaw
from .solver import critical_exponents

_ROOT = "__root__"


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _opt_int(text):
    return None if text.strip().lower() in ("", "none", "full", "inf") else int(text)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text):
    items = [x for x in re.split(r"[,\s]+", text.strip()) if x]
    return tuple(int(x) for x in items)


def _float_list(text):
    items = [x for x in re.split(r"[,\s]+", text.strip()) if x]
    return tuple(float(x) for x in items)


def _law(text):
    return str(RandomLaw.parse(text))


def _exponent(text):
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


# key -> (section, parser)
SCHEMA = {
    "p": ("run", float),
    "s": ("run", float),
    "seed": ("run", int),
    "sample": ("run", int),
    "law": ("run", _law),
    "T": ("run", float),
    "dt_max": ("run", float),
    "resolution": ("run", int),
    "N": ("run", _opt_int),
    "source": ("data", str),
    "cutoff": ("data", _opt_int),
    "delta": ("data", float),
    "amplitude": ("data", float),
    "velocity": ("data", _bool),
    "u0_file": ("data", str),
    "u1_file": ("data", str),
    "c": ("local", float),
    "gamma": ("local", _opt_float),
    "t_star": ("local", _opt_float),
    "experiment": ("ensemble", str),
    "samples": ("ensemble", int),
    "workers": ("ensemble", int),
    "N_list": ("ensemble", _int_list),
    "q": ("ensemble", _exponent),
    "r": ("ensemble", _exponent),
    "operator": ("ensemble", str),
    "eps": ("ensemble", float),
    "prefactors": ("ensemble", _float_list),
    "directory": ("output", str),
}

SECTIONS = ("run", "data", "local", "ensemble", "output")
EXPERIMENTS = ("energy", "events")
REQUIRED = ("p", "seed")


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters of one run.

    ``resolution`` is the grid carrying the state (cutoff
    ``resolution/2 - 1`` unless ``cutoff`` is set); the nonlinearity is
    evaluated on a grid twice as fine.  ``N = None`` means untruncated forcing.
    """

    p: float
    seed: int
    s: float = 0.9
    sample: int = 0
    law: str = "gaussian:1.0"
    T: float = 1.0
    dt_max: float = 0.01
    resolution: int = 32
    N: int | None = None
    source: str = "profile"
    cutoff: int | None = None
    delta: float = 0.01
    amplitude: float = 1.0
    velocity: bool = True
    u0_file: str = ""
    u1_file: str = ""
    c: float = 0.1
    gamma: float | None = None
    t_star: float | None = None
    experiment: str = "energy"
    samples: int = 100
    workers: int = 1
    N_list: tuple = (4, 8, 16, 32)
    q: float = math.inf
    r: float = 2.0
    operator: str = "S"
    eps: float = 0.01
    prefactors: tuple = (1.0, 3.0, 10.0)
    directory: str = ""

    # derived ----------------------------------------------------------------

    @property
    def data_cutoff(self):
        return self.resolution // 2 - 1 if self.cutoff is None else self.cutoff

    @property
    def nonlinear_resolution(self):
        return 2 * self.resolution

    @property
    def random_law(self):
        return RandomLaw.parse(self.law)

    def replace(self, **changes):
        data = asdict(self)
        data.update(changes)
        return validate(data)[0]


def _line_of(text, key):
    m = re.search(rf"^[ \t]*{re.escape(key)}[ \t]*[=:]", text, flags=re.MULTILINE)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(line, line_offset):
    """Message prefix locating ``line``; the first ``line_offset`` lines are command-line overrides."""
    if line is None:
        return ""
    return "override: " if line <= line_offset else f"line {line - line_offset}: "


def _read_sections(text, line_offset=0):
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults_unused__",
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_ROOT}]\n" + text)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError([f"{_where(exc.lineno - 1, line_offset)}duplicate section [{exc.section}]"]) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError([f"{_where(exc.lineno - 1, line_offset)}duplicate key {exc.option!r}"]) from None
    except configparser.MissingSectionHeaderError as exc:  # pragma: no cover - root header prevents it
        raise ConfigError([f"{_where(exc.lineno - 1, line_offset)}missing section header"]) from None
    except configparser.ParsingError as exc:
        lines = text.splitlines()
        raise ConfigError([f"{_where(lineno - 1, line_offset)}cannot parse {lines[lineno - 2].strip()!r}"
                           for lineno, _ in exc.errors]) from None
    return parser


def parse_config(text, line_offset=0):
    """Parse and validate configuration text.

    Returns ``(config, warnings)``.  Raises :class:`ConfigError` listing
    every problem (with line numbers where they apply).  The first
    ``line_offset`` lines are treated as overrides and excluded from the
    line numbering.
    """
    parser = _read_sections(text, line_offset)
    raw, problems = {}, []
    for section in parser.sections():
        if section != _ROOT and section not in SECTIONS:
            problems.append(f"unknown section [{section}]")
            continue
        for key, value in parser.items(section):
            prefix = _where(_line_of(text, key), line_offset)
            if key not in SCHEMA:
                problems.append(f"{prefix}unknown key {key!r}")
                continue
            home, conv = SCHEMA[key]
            if section not in (_ROOT, home):
                problems.append(f"{prefix}key {key!r} belongs in [{home}], not [{section}]")
                continue
            if key in raw:
                problems.append(f"{prefix}key {key!r} given twice")
                continue
            try:
                raw[key] = conv(value)
            except (ValueError, TypeError) as exc:
                problems.append(f"{prefix}bad value for {key!r}: {exc}")
    for key in REQUIRED:
        if key not in raw and not any(f"{key!r}" in p for p in problems):
            problems.append(f"missing required key {key!r}")
    if problems:
        # still report constraint violations among the values that did parse
        try:
            validate(raw)
        except ConfigError as exc:
            problems += [p for p in exc.problems if p not in problems]
        except (TypeError, KeyError):
            pass
        raise ConfigError(problems)
    return validate(raw)


def validate(values):
    """Check constraints on a ``{key: value}`` dict; returns ``(RunConfig, warnings)``."""
    defaults = {f.name: f.default for f in fields(RunConfig) if f.name not in REQUIRED}
    data = {**defaults, **values}
    problems, warnings = [], []
    p = data.get("p")
    if p is None:
        pass
    elif not 3 < p < 5:
        problems.append("p must lie in (3,5)")
    elif not 0 < data["s"] < 1 or data["s"] <= critical_exponents(p)[1]:
        s_min = critical_exponents(p)[1]
        warnings.append(f"s={data['s']:g} lies outside the range ({s_min:g}, 1) for p={p:g}")
    if "seed" in data and not 0 <= data["seed"] < 2**64:
        problems.append("seed must be an integer in [0, 2^64)")
    if data["sample"] < 0:
        problems.append("sample must be >= 0")
    if not is_power_of_two(data["resolution"]) or data["resolution"] < 4:
        problems.append("resolution must be a power of two >= 4")
    elif data["cutoff"] is not None and not 0 <= data["cutoff"] <= data["resolution"] // 2 - 1:
        problems.append(f"cutoff must lie in [0, {data['resolution'] // 2 - 1}] for resolution {data['resolution']}")
    for key in ("T", "dt_max", "c", "eps"):
        if not data[key] > 0:
            problems.append(f"{key} must be positive")
    if data["eps"] >= 1:
        problems.append("eps must be < 1")
    if data["gamma"] is not None and not data["gamma"] > 0:
        problems.append("gamma must be positive")
    if data["t_star"] is not None and not data["t_star"] > 0:
        problems.append("t_star must be positive")
    if data["N"] is not None and data["N"] < 1:
        problems.append("N must be >= 1 (or 'full')")
    nl = data["N_list"]
    if len(nl) < 1 or any(n < 1 for n in nl) or any(b <= a for a, b in zip(nl, nl[1:])):
        problems.append("N_list must be ascending positive integers")
    elif any(n & (n - 1) for n in nl):
        warnings.append("N_list values are not all dyadic")
    if data["source"] not in ("profile", "file"):
        problems.append("source must be 'profile' or 'file'")
    elif data["source"] == "file" and not data["u0_file"]:
        problems.append("source=file needs u0_file")
    if data["experiment"] not in EXPERIMENTS:
        problems.append(f"experiment must be one of {EXPERIMENTS}")
    if data["operator"] not in ("S", "tilde"):
        problems.append("operator must be 'S' or 'tilde'")
    if data["samples"] < 1:
        problems.append("samples must be >= 1")
    if data["workers"] < 1:
        problems.append("workers must be >= 1")
    if data["q"] < 1 or data["r"] < 1:
        problems.append("q and r must be >= 1")
    if any(x < 0 for x in data["prefactors"]):
        problems.append("prefactors must be nonnegative")
    if data["amplitude"] < 0:
        problems.append("amplitude must be nonnegative")
    if problems:
        raise ConfigError(problems)
    data["N_list"] = tuple(nl)
    data["prefactors"] = tuple(float(x) for x in data["prefactors"])
    return RunConfig(**data), warnings


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def serialize(config):
    """Canonical text for ``config``; ``parse_config(serialize(c))`` returns ``c``."""
    out = []
    for section in SECTIONS:
        out.append(f"[{section}]")
        for key, (home, _) in SCHEMA.items():
            if home == section:
                out.append(f"{key} = {_format(getattr(config, key))}")
        out.append("")
    return "\n".join(out)


def config_hash(config):
    """First 16 hex digits of the SHA-256 of the canonical text (output directory excluded)."""
    text = serialize(config.replace(directory="") if config.directory else config)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def provenance(config):
    return {"config_hash": config_hash(config), "master_seed": config.seed, "version": __version__}
