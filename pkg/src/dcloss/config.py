"""Scenario configuration files.

Line-oriented INI sections::

    [channel.70deg]            # explicit chain ...
    p_stay_good = 0.9991
    p_stay_bad = 0.82

    [channel.60deg]            # ... or calibration targets
    pi_bad = 0.09311
    zero_loss_prob = 0.550351
    window = 10

    [sweep]                    # defaults inherited by [sweep.<label>] blocks
    channels = 70deg, 60deg
    q = 256
    mode = exact

    [sweep.n10]
    n = 10
    policies = pdps, nc
    lb = 0, 0.2, 0.4, 0.6, 0.8, 1
    dt = 0, 0.2, 0.4, 0.6, 0.8, 1
    k = 2, 4, 6, 8, 10

    [mc]
    rounds = 100000
    seed = 1

    [output]
    format = csv

The full grammar is in ``docs/config.md``.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .channel import GilbertElliottChannel, calibrate
from .gf import is_prime
from .strategy import MODES, POLICIES

__all__ = [
    "SchemaError",
    "RangeError",
    "ChannelSpec",
    "SweepBlock",
    "McSpec",
    "OutputSpec",
    "ScenarioConfig",
    "parse_config",
    "load_config",
    "parse_q",
    "format_q",
]

DEFAULT_Q = 256
DEFAULT_MODE = "exact"

_CHANNEL_KEYS = {"p_stay_good", "p_stay_bad", "pi_bad", "zero_loss_prob", "window"}
_SWEEP_KEYS = {"channels", "n", "policies", "lb", "dt", "k", "q", "mode", "highlight"}
_MC_KEYS = {"rounds", "seed", "sigma", "lane_rounds", "cold_start"}
_OUTPUT_KEYS = {"path", "format"}


class SchemaError(ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


class RangeError(SchemaError):
    pass


def parse_q(text) -> int | None:
    """Field size from text; ``inf`` selects the ideal decoder (``None``)."""
    if text is None:
        return None
    text = str(text).strip().lower()
    if text in ("inf", "ideal", "none"):
        return None
    q = int(text)
    if q < 2 or q > 1 << 16 or not (q & (q - 1) == 0 or is_prime(q)):
        raise ValueError(f"unsupported field size {q}: need 2^m (m <= 16) or a prime < 2^16")
    return q


def format_q(q) -> str:
    return "inf" if q is None else str(q)


@dataclass(frozen=True)
class ChannelSpec:
    name: str
    p_stay_good: float | None = None
    p_stay_bad: float | None = None
    pi_bad: float | None = None
    zero_loss_prob: float | None = None
    window: int | None = None

    @property
    def is_calibrated(self) -> bool:
        return self.pi_bad is not None

    def build(self) -> GilbertElliottChannel:
        """The channel itself; calibration targets are solved here (may raise Infeasible)."""
        if self.is_calibrated:
            return calibrate(self.pi_bad, self.zero_loss_prob, self.window)
        return GilbertElliottChannel(self.p_stay_good, self.p_stay_bad)


@dataclass(frozen=True)
class SweepBlock:
    label: str
    channels: tuple[str, str]
    n: tuple[int, ...]
    policies: tuple[str, ...]
    lb: tuple[float, ...] = ()
    dt: tuple[float, ...] = ()
    k: tuple[int, ...] = ()
    q: tuple[int | None, ...] = (DEFAULT_Q,)
    mode: str = DEFAULT_MODE
    highlight: frozenset = frozenset()


@dataclass(frozen=True)
class McSpec:
    rounds: int = 100_000
    seed: int = 0
    sigma: float = 3.0
    lane_rounds: int = 10_000
    cold_start: bool = False


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class ScenarioConfig:
    channels: dict
    sweeps: tuple[SweepBlock, ...]
    output: OutputSpec = field(default_factory=OutputSpec)
    mc: McSpec | None = None

    def with_overrides(self, q=None, mode=None, rounds=None, seed=None):
        """Copy with CLI flag overrides applied to every sweep block / the mc section."""
        sweeps = self.sweeps
        if q is not None:
            sweeps = tuple(replace(s, q=(parse_q(q),)) for s in sweeps)
        if mode is not None:
            if mode not in MODES:
                raise SchemaError(f"mode must be one of {MODES}", field="mode")
            sweeps = tuple(replace(s, mode=mode) for s in sweeps)
        mc = self.mc
        if rounds is not None or seed is not None:
            mc = mc or McSpec()
            if rounds is not None:
                mc = replace(mc, rounds=int(rounds))
            if seed is not None:
                mc = replace(mc, seed=int(seed))
        return replace(self, sweeps=sweeps, mc=mc)


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def _line_index(text):
    """(section, key) -> 1-based line number, plus section header lines."""
    index = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = lineno
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip()), lineno)
    return index


class _Reader:
    def __init__(self, parser, lines):
        self.parser = parser
        self.lines = lines

    def error(self, section, key, message, cls=SchemaError):
        line = self.lines.get((section, key), self.lines.get((section, None)))
        name = f"[{section}]" + (f" {key}" if key else "")
        return cls(message, line=line, field=name)

    def raw(self, section, key):
        return self.parser.get(section, key)

    def _convert(self, section, key, text, cast):
        try:
            return cast(text.strip())
        except (TypeError, ValueError) as exc:
            raise self.error(section, key, f"cannot parse {text!r}: {exc}") from None

    def scalar(self, section, key, cast):
        return self._convert(section, key, self.raw(section, key), cast)

    def listing(self, section, key, cast):
        parts = [p for p in re.split(r"[,\s]+", self.raw(section, key).strip()) if p]
        if not parts:
            raise self.error(section, key, "empty list")
        return tuple(self._convert(section, key, p, cast) for p in parts)

    def probability(self, section, key, value):
        if not 0.0 <= value <= 1.0 or math.isnan(value):
            raise self.error(section, key, f"{value} is not in [0, 1]", RangeError)
        return value

    def check_keys(self, section, allowed):
        for key in self.parser.options(section):
            if key not in allowed:
                raise self.error(section, key, f"unknown key; expected one of {sorted(allowed)}")


def _channel(r: _Reader, section, name):
    r.check_keys(section, _CHANNEL_KEYS)
    keys = set(r.parser.options(section))
    explicit = {"p_stay_good", "p_stay_bad"}
    targets = {"pi_bad", "zero_loss_prob", "window"}
    if keys == explicit:
        g = r.probability(section, "p_stay_good", r.scalar(section, "p_stay_good", float))
        b = r.probability(section, "p_stay_bad", r.scalar(section, "p_stay_bad", float))
        return ChannelSpec(name, p_stay_good=g, p_stay_bad=b)
    if keys == targets:
        pi = r.probability(section, "pi_bad", r.scalar(section, "pi_bad", float))
        z = r.probability(section, "zero_loss_prob", r.scalar(section, "zero_loss_prob", float))
        w = r.scalar(section, "window", int)
        if w < 2:
            raise r.error(section, "window", "window must be >= 2", RangeError)
        return ChannelSpec(name, pi_bad=pi, zero_loss_prob=z, window=w)
    raise r.error(
        section, None,
        "channel needs exactly {p_stay_good, p_stay_bad} or {pi_bad, zero_loss_prob, window}",
    )


def _highlight(text):
    policy, x, lb = text.split(":")
    return policy.strip(), float(x), float(lb)


def _sweep(r: _Reader, section, label, defaults, channel_names):
    r.check_keys(section, _SWEEP_KEYS)
    own = set(r.parser.options(section))

    def src(key):
        if key in own:
            return section
        if key in defaults:
            return defaults[key]
        return None

    def get(key, fn, required=True):
        s = src(key)
        if s is None:
            if required:
                raise r.error(section, None, f"missing required key {key!r}")
            return None
        return fn(s, key)

    chans = get("channels", lambda s, k: r.listing(s, k, str))
    if len(chans) != 2:
        raise r.error(src("channels"), "channels", "need exactly two channel names")
    for c in chans:
        if c not in channel_names:
            raise r.error(src("channels"), "channels", f"undefined channel {c!r}")
    ns = get("n", lambda s, k: r.listing(s, k, int))
    for n in ns:
        if n < 1:
            raise r.error(src("n"), "n", f"block size {n} must be >= 1", RangeError)
    policies = get("policies", lambda s, k: r.listing(s, k, str.lower))
    for p in policies:
        if p not in POLICIES:
            raise r.error(src("policies"), "policies", f"unknown policy {p!r}; expected {POLICIES}")

    def probs(s, k):
        return tuple(r.probability(s, k, v) for v in r.listing(s, k, float))

    needs_lb = any(p in ("ps", "pdps", "nc") for p in policies)
    lb = get("lb", probs, required=needs_lb) or ()
    dt = get("dt", probs, required="pdps" in policies) or ()
    ks = get("k", lambda s, k: r.listing(s, k, int), required="nc" in policies) or ()
    if "nc" in policies:
        for k in ks:
            if k < 1:
                raise r.error(src("k"), "k", f"generation size {k} must be >= 1", RangeError)
            for n in ns:
                if k > n:
                    raise r.error(src("k"), "k", f"pair (N={n}, K={k}) violates K <= N")
    qs = get("q", lambda s, k: r.listing(s, k, parse_q), required=False) or (DEFAULT_Q,)
    mode = get("mode", lambda s, k: r.scalar(s, k, str.lower), required=False) or DEFAULT_MODE
    if mode not in MODES:
        raise r.error(src("mode"), "mode", f"mode must be one of {MODES}")
    hl = get("highlight", lambda s, k: r.listing(s, k, _highlight), required=False) or ()
    return SweepBlock(label, tuple(chans), ns, policies, lb, dt, ks, qs, mode, frozenset(hl))


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document; defaults: q=256, mode=exact, no mc."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), strict=True,
        default_section="\x00unused",
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateSectionError as exc:
        raise SchemaError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise SchemaError(f"duplicate key {exc.option!r}", line=exc.lineno,
                          field=f"[{exc.section}]") from None
    except configparser.MissingSectionHeaderError as exc:
        raise SchemaError("content before the first [section]", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise SchemaError("malformed line", line=line) from None

    r = _Reader(parser, _line_index(text))
    channels = {}
    sweep_sections = []
    mc = None
    output = OutputSpec()
    for section in parser.sections():
        head, _, rest = section.partition(".")
        if head == "channel":
            if not rest:
                raise r.error(section, None, "channel section needs a name: [channel.<name>]")
            channels[rest] = _channel(r, section, rest)
        elif head == "sweep":
            sweep_sections.append((section, rest))
        elif section == "mc":
            r.check_keys(section, _MC_KEYS)
            opts = parser.options(section)
            mc = McSpec(
                rounds=r.scalar(section, "rounds", int) if "rounds" in opts else McSpec.rounds,
                seed=r.scalar(section, "seed", int) if "seed" in opts else McSpec.seed,
                sigma=r.scalar(section, "sigma", float) if "sigma" in opts else McSpec.sigma,
                lane_rounds=(r.scalar(section, "lane_rounds", int)
                             if "lane_rounds" in opts else McSpec.lane_rounds),
                cold_start=(parser.getboolean(section, "cold_start")
                            if "cold_start" in opts else False),
            )
            if mc.rounds < 1 or mc.lane_rounds < 1:
                raise r.error(section, "rounds", "rounds and lane_rounds must be >= 1", RangeError)
            if mc.seed < 0 or mc.seed >= 1 << 64:
                raise r.error(section, "seed", "seed must be an unsigned 64-bit integer", RangeError)
        elif section == "output":
            r.check_keys(section, _OUTPUT_KEYS)
            opts = parser.options(section)
            fmt = r.raw(section, "format").strip() if "format" in opts else "csv"
            if fmt not in ("csv", "table"):
                raise r.error(section, "format", "format must be 'csv' or 'table'")
            output = OutputSpec(r.raw(section, "path").strip() if "path" in opts else None, fmt)
        else:
            raise r.error(section, None, "unknown section; expected channel.<name>, sweep, mc, output")

    if not channels:
        raise SchemaError("at least one [channel.<name>] section is required")

    defaults = {}
    if ("sweep", "") in sweep_sections:
        r.check_keys("sweep", _SWEEP_KEYS)
        defaults = {key: "sweep" for key in parser.options("sweep")}
    labelled = [(s, label) for s, label in sweep_sections if label]
    if labelled:
        blocks = tuple(_sweep(r, s, label, defaults, channels) for s, label in labelled)
    elif sweep_sections:
        blocks = (_sweep(r, "sweep", "", {}, channels),)
    else:
        raise SchemaError("at least one [sweep] section is required")
    return ScenarioConfig(channels, blocks, output, mc)


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())
