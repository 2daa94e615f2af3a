"""Experiment configuration: ``key = value`` files, grammars and environment settings."""

import logging
import math
import os
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, List, Optional, Tuple

from dotenv import load_dotenv

from .errors import ArgumentError, ConfigError
from .geometry import Hyperplane, Hypersurface, PointSet1D, Sphere
from .models.problem import SdeProblem
from .models.registry import get_problem
from .utils import format_number

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "convergence", "occupation", "excursion", "dump-transform", "decomposition")
SCHEMES = ("em", "gm", "both")
REFERENCES = ("gm", "exact")
DEFAULT_THREADS = 1
DEFAULT_BATCH_SIZE = 1000

_DYADIC = re.compile(r"^2\^(-?\d+)$")
_SURFACE = re.compile(r"^(sphere|hyperplane|pointset1d)\((.*)\)$")


def _floats(text: str, line: Optional[int]) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"Expected a comma-separated list of numbers, got '{text}'", line)


def _dyadic_exponent(term: str, line: Optional[int]) -> int:
    match = _DYADIC.match(term.strip())
    if not match:
        raise ConfigError(f"Expected a dyadic step like 2^-6, got '{term.strip()}'", line)
    return int(match.group(1))


def parse_deltas(text: str, line: Optional[int] = None) -> Tuple[float, ...]:
    """Parse step sizes: ``2^-a..2^-b`` ranges, ``2^-k`` terms and decimals, comma separated.

    Raises:
        ConfigError: On malformed terms or non-positive values.
    """
    values: List[float] = []
    for term in (part.strip() for part in text.split(",")):
        if not term:
            continue
        if ".." in term:
            low, high = (_dyadic_exponent(end, line) for end in term.split(".."))
            step = 1 if high >= low else -1
            values.extend(2.0 ** k for k in range(low, high + step, step))
        elif _DYADIC.match(term):
            values.append(2.0 ** _dyadic_exponent(term, line))
        else:
            values.extend(_floats(term, line))
    if not values:
        raise ConfigError("No step sizes given", line)
    if any(not v > 0 for v in values):
        raise ConfigError(f"Step sizes must be positive, got {text}", line)
    return tuple(values)


def format_deltas(deltas) -> str:
    parts = []
    for delta in deltas:
        mantissa, exponent = math.frexp(delta)
        parts.append(f"2^{exponent - 1}" if mantissa == 0.5 else format_number(delta))
    return ",".join(parts)


def parse_surface(text: str, line: Optional[int] = None) -> Hypersurface:
    """Parse ``sphere(c1,..;r)``, ``hyperplane(a1,..;b)`` or ``pointset1d(x1,..)``.

    Raises:
        ConfigError: If the text does not describe a valid surface.
    """
    match = _SURFACE.match(text.replace(" ", ""))
    if not match:
        raise ConfigError(f"Unknown surface '{text}'; expected sphere(..;r), hyperplane(..;b) or pointset1d(..)", line)
    kind, body = match.groups()
    try:
        if kind == "pointset1d":
            return PointSet1D(tuple(_floats(body, line)))
        if body.count(";") != 1:
            raise ConfigError(f"{kind} needs the form {kind}(v1,..;s), got '{text}'", line)
        vector, scalar = body.split(";")
        scalars = _floats(scalar, line)
        if len(scalars) != 1:
            raise ConfigError(f"{kind} takes one value after ';', got '{scalar}'", line)
        if kind == "sphere":
            return Sphere(tuple(_floats(vector, line)), scalars[0])
        return Hyperplane(tuple(_floats(vector, line)), scalars[0])
    except ArgumentError as e:
        raise ConfigError(str(e), line)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: what to run, on which problem, with which parameters."""

    command: str = "simulate"
    problem: str = "circle2d"
    scheme: str = "gm"
    deltas: Tuple[float, ...] = ()
    delta: Optional[float] = None
    paths: int = 1000
    seed: int = 0
    ref_levels: int = 16
    eps: Tuple[float, ...] = ()
    out: str = "."
    grid: int = 201
    batch_size: Optional[int] = None
    reference: str = "gm"
    initial: Optional[Tuple[float, ...]] = None
    horizon: Optional[float] = None
    surface: Optional[str] = None

    def validate(self) -> "ExperimentConfig":
        """Check value ranges.

        Raises:
            ConfigError: On the first invalid value.
        """
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command '{self.command}'; expected one of {', '.join(COMMANDS)}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"Unknown scheme '{self.scheme}'; expected one of {', '.join(SCHEMES)}")
        if self.reference not in REFERENCES:
            raise ConfigError(f"Unknown reference '{self.reference}'; expected one of {', '.join(REFERENCES)}")
        if self.paths < 1:
            raise ConfigError(f"paths must be positive, got {self.paths}")
        if self.ref_levels < 0:
            raise ConfigError(f"ref_levels must be non-negative, got {self.ref_levels}")
        if self.grid < 2:
            raise ConfigError(f"grid must be at least 2, got {self.grid}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.surface is not None:
            parse_surface(self.surface)
        return self

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment.

        Raises:
            ConfigError: With the offending line number.
        """
        values = {}
        known = {f.name for f in fields(cls)}
        for number, raw in enumerate(text.splitlines(), start=1):
            content = raw.split("#", 1)[0].strip()
            if not content:
                continue
            if "=" not in content:
                raise ConfigError(f"Expected 'key = value', got '{content}'", number)
            key, value = (part.strip() for part in content.split("=", 1))
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"Unknown key '{key}'", number)
            if key in values:
                raise ConfigError(f"Duplicate key '{key}'", number)
            values[key] = _parse_value(key, value, number)
        return cls(**values).validate()

    def to_text(self) -> str:
        """Serialise to the format read by :meth:`from_text`, one key per line."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None or value == ():
                continue
            lines.append(f"{f.name} = {_format_value(f.name, value)}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with every non-None override applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None}).validate()


def _parse_value(key: str, value: str, line: int) -> Any:
    try:
        if key == "deltas":
            return parse_deltas(value, line)
        if key == "delta":
            single = parse_deltas(value, line)
            if len(single) != 1:
                raise ConfigError(f"delta takes a single step size, got '{value}'", line)
            return single[0]
        if key in ("eps", "initial"):
            return tuple(_floats(value, line))
        if key == "horizon":
            return float(value)
        if key in ("paths", "seed", "ref_levels", "grid", "batch_size"):
            return int(value)
        if key == "surface":
            parse_surface(value, line)
        return value
    except ValueError:
        raise ConfigError(f"Invalid value '{value}' for '{key}'", line)


def _format_value(key: str, value: Any) -> str:
    if key == "deltas":
        return format_deltas(value)
    if key == "delta":
        return format_deltas([value])
    if isinstance(value, tuple):
        return ",".join(format_number(v) for v in value)
    if isinstance(value, float):
        return format_number(value)
    return str(value)


def load_config(path: str) -> ExperimentConfig:
    """Read an experiment configuration file.

    Raises:
        ConfigError: If the file cannot be read or parsed.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")
    logger.debug(f"Loaded config from {path}")
    return ExperimentConfig.from_text(text)


def resolve_problem(config: ExperimentConfig) -> SdeProblem:
    """Built-in problem named by the config, with its overrides applied."""
    problem = get_problem(config.problem)
    surface = None
    if config.surface is not None:
        surface = parse_surface(config.surface)
        logger.warning(f"Overriding the surface of {problem.name} with {surface.describe()}")
    try:
        return problem.with_overrides(initial=config.initial, horizon=config.horizon, surface=surface)
    except ArgumentError as e:
        raise ConfigError(str(e))


def load_environment() -> None:
    """Load a ``.env`` file from the working directory, if present."""
    load_dotenv()


def _positive_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got '{raw}'")
    if value < 1:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def thread_count() -> int:
    """Worker threads for Monte Carlo batches (``PWSDE_THREADS``)."""
    return _positive_env("PWSDE_THREADS", DEFAULT_THREADS)


def batch_size() -> int:
    """Paths simulated per vectorised batch (``PWSDE_BATCH_SIZE``)."""
    return _positive_env("PWSDE_BATCH_SIZE", DEFAULT_BATCH_SIZE)


def memoize_alpha() -> bool:
    """Cache offsets evaluated off the sample grid (``PWSDE_MEMOIZE_ALPHA``, default off)."""
    raw = os.getenv("PWSDE_MEMOIZE_ALPHA", "").strip().lower()
    if raw in ("", "0", "false", "no", "off"):
        return False
    if raw in ("1", "true", "yes", "on"):
        return True
    raise ConfigError(f"PWSDE_MEMOIZE_ALPHA must be a boolean, got '{raw}'")
