"""Campaign configuration: defaults, flat key=value files, flag overlay.

Precedence is defaults < config file < command-line flags.  File syntax is
one `key = value` pair per line, '#' comments, booleans as true/false.
Every field has a usable default so `covrl fuzz` runs out of the box.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .coverage import ConfigurationError
from .reward import REWARD_SCHEMES


@dataclass
class Config:
    target: str = "toy"              # "toy" or an argv template with {case}
    corpus: str = "corpus"           # directory of starting seeds
    out: str = "out"                 # campaign output directory
    coverage_channel: str = "envfile"
    timeout_ms: int = 1000
    map_exponent: int = 16
    reward_scheme: str = "cwr"
    alpha: float = 0.6               # idf momentum rate
    iter_cycle: int = 10000          # executions per cycle
    mask_rate: float = 0.15
    mask_max_slots: int = 8
    max_case_tokens: int = 256
    strategy_mix: str = "1,1,1"      # insert,overwrite,splice weights
    mutator: str = "mock"            # "mock" or host:port of a service
    mock_adaptive: bool = True       # reward-adaptive mock sampling
    top_k: int = 32
    contrastive_alpha: float = 0.6
    error_sample_rate: float = 0.25  # error cases sampled into the dataset
    finetune_epochs: int = 1
    uniform_energy: bool = False     # ablation: ignore seed energy
    execs: int = 50000               # total execution budget
    max_seconds: float = 0.0         # wall-clock cap, 0 = none
    seed: int = 0                    # campaign rng seed

    def validate(self) -> "Config":
        if self.reward_scheme not in REWARD_SCHEMES:
            raise ConfigurationError(
                f"reward_scheme must be one of {REWARD_SCHEMES}, got {self.reward_scheme!r}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError("alpha must be in [0, 1]")
        if not 0.0 <= self.error_sample_rate <= 1.0:
            raise ConfigurationError("error_sample_rate must be in [0, 1]")
        if not 0.0 < self.mask_rate <= 1.0:
            raise ConfigurationError("mask_rate must be in (0, 1]")
        if self.mask_max_slots < 1:
            raise ConfigurationError("mask_max_slots must be at least 1")
        if self.iter_cycle < 1:
            raise ConfigurationError("iter_cycle must be at least 1")
        if self.execs < 1:
            raise ConfigurationError("execs must be at least 1")
        try:
            weights = self.strategy_weights()
        except ValueError as exc:
            raise ConfigurationError(f"bad strategy_mix: {exc}") from None
        if len(weights) != 3 or any(w < 0 for w in weights) or sum(weights) == 0:
            raise ConfigurationError(
                "strategy_mix needs three non-negative weights, at least one positive"
            )
        return self

    def strategy_weights(self) -> list[float]:
        return [float(part) for part in self.strategy_mix.split(",")]


_FIELDS = {f.name: f for f in dataclasses.fields(Config)}


def _coerce(name: str, raw: str):
    f = _FIELDS[name]
    if f.type in ("bool", bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if f.type in ("int", int):
            return int(raw.strip())
        if f.type in ("float", float):
            return float(raw.strip())
    except ValueError:
        raise ConfigurationError(f"{name}: cannot parse {raw!r}") from None
    return raw.strip()


def parse_config_file(path: str) -> dict:
    """Flat key=value file to a dict of typed values."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigurationError(
                    f"{path}:{lineno}: expected key = value, got {stripped!r}"
                )
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in _FIELDS:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw)
    return values


def build_config(file_path: str | None = None, overrides: dict | None = None) -> Config:
    """Merge defaults, an optional config file, and explicit overrides."""
    values: dict = {}
    if file_path:
        values.update(parse_config_file(file_path))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELDS:
            raise ConfigurationError(f"unknown config field {key!r}")
        values[key] = val
    return Config(**values).validate()
