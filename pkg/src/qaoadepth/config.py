"""Run configuration: flat key=value files, CLI overrides and canonical hashing.

Precedence is CLI > config file > defaults. The resolved configuration is
serialized back out with every run (17 significant digits for floats) so a
persisted config reruns bit-identically, and its SHA-256 prefix is embedded in
every output file.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .dynamics import IntegratorConfig
from .operators import NoiseModel
from .optimizer import OptimizerConfig
from .selection import LambdaSchedule

NOISE_NAMES = ("none", "relaxation", "dephasing")


class ConfigError(ValueError):
    """Invalid configuration input; maps to exit code 2."""


@dataclass
class RunConfig:
    graph: str = ""  # path to a graph file; empty means generate from the fields below
    nodes: int = 5
    edges: int = 8
    weight_min: float = 0.1
    weight_max: float = 1.0
    seed: int = 7
    noise: str = "none"
    coupling: float = 0.0
    p: int = 8
    p_min: int = 1
    scale: float = 6.0
    eta: float = 0.008
    epsilon: float = 1e-3
    iters: int = 300
    pg_iters: int = 200
    refine_iters: int = 100
    lambda_init: float = 6.0
    lambda_factor: float = 0.6
    rounds: int = 8
    plateau_tol: float = 0.01
    dt: float = 5e-4
    out: str = "runs"
    jobs: int = 1

    def validate(self) -> None:
        if self.noise not in NOISE_NAMES:
            raise ConfigError(f"noise must be one of {NOISE_NAMES}, got {self.noise!r}")
        positive = ["scale", "eta", "epsilon", "dt", "lambda_init", "weight_min", "weight_max"]
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.weight_max < self.weight_min:
            raise ConfigError("weight_max must be at least weight_min")
        if self.coupling < 0.0:
            raise ConfigError("coupling must be nonnegative")
        if self.noise == "none" and self.coupling != 0.0:
            raise ConfigError("noise 'none' requires coupling 0")
        if not 0.0 < self.lambda_factor < 1.0:
            raise ConfigError("lambda_factor must lie in (0, 1)")
        for name in ("nodes", "p", "p_min", "rounds", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.edges < 0:
            raise ConfigError("edges must be nonnegative")
        for name in ("iters", "pg_iters", "refine_iters"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if self.plateau_tol < 0.0:
            raise ConfigError("plateau_tol must be nonnegative")

    # --- derived component configs -------------------------------------------------
    def noise_model(self) -> NoiseModel:
        return NoiseModel.from_name(self.noise, self.coupling)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(step=self.dt)

    def optimizer(self, lam: float = 0.0, hybrid: bool = False) -> OptimizerConfig:
        if hybrid:
            total = self.pg_iters + self.refine_iters
            return OptimizerConfig(eta=self.eta, epsilon=self.epsilon, lam=lam,
                                   iterations=total, hybrid_split=(self.pg_iters, self.refine_iters))
        return OptimizerConfig(eta=self.eta, epsilon=self.epsilon, lam=lam, iterations=self.iters)

    def lambda_schedule(self) -> LambdaSchedule:
        return LambdaSchedule(self.lambda_init, self.lambda_factor, self.rounds, self.plateau_tol)


_FIELDS = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _convert(name: str, raw: str):
    kind = _FIELDS[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"config key {name!r}: cannot parse {raw!r} as {kind}") from None


def parse_config_text(text: str) -> dict:
    """Parse flat key=value lines; '#' starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELDS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, value)
    return values


def load_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults, config-file values and CLI overrides (highest wins)."""
    merged: dict = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(merged) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config = RunConfig(**merged)
    config.validate()
    return config


def format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


# fields that do not influence computed results and stay out of the hash
_ENVIRONMENT_FIELDS = ("out", "jobs")


def serialize_config(config: RunConfig, skip: tuple[str, ...] = ()) -> str:
    """Canonical sorted key=value rendering; the basis of the config hash."""
    lines = [f"{name}={format_value(getattr(config, name))}" for name in sorted(_FIELDS) if name not in skip]
    return "\n".join(lines) + "\n"


def config_hash(config: RunConfig) -> str:
    """Digest over the result-determining fields (output dir and job count excluded)."""
    payload = serialize_config(config, skip=_ENVIRONMENT_FIELDS)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]
