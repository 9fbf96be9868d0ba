"""Game configuration and deterministic seed derivation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Union

import numpy as np

CROSS_VALIDATE = "cross-validate"

#: eta is either a fixed trade-off weight or the sentinel string
#: "cross-validate", meaning the harness picks it on held-out seeds.
EtaSetting = Union[float, str]


@dataclass(frozen=True)
class GameConfig:
    """Parameters of one navigation teaching game.

    ``learning_steps`` counts the human's demonstration actions; the robot
    then acts alone for ``horizon_total - learning_steps`` steps.
    """

    grid_size: int = 10
    horizon_total: int = 20
    learning_steps: int = 10
    num_features: int = 10
    rbf_bandwidth: float = 2.5
    gamma: float = 1.0
    lambda_: float = 5.0
    eta: EtaSetting = CROSS_VALIDATE
    belief_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.grid_size < 1:
            raise ValueError(f"grid_size must be positive, got {self.grid_size}")
        if self.horizon_total < 1:
            raise ValueError(f"horizon_total must be positive, got {self.horizon_total}")
        if not (1 <= self.learning_steps <= self.horizon_total):
            raise ValueError(
                f"learning_steps must be in [1, horizon_total], got {self.learning_steps}"
            )
        if self.num_features < 1:
            raise ValueError(f"num_features must be >= 1, got {self.num_features}")
        if self.num_features > self.grid_size**2:
            raise ValueError("num_features exceeds number of grid cells")
        if self.rbf_bandwidth <= 0:
            raise ValueError(f"rbf_bandwidth must be positive, got {self.rbf_bandwidth}")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.lambda_ <= 0:
            raise ValueError(f"lambda must be positive, got {self.lambda_}")
        if isinstance(self.eta, str):
            if self.eta != CROSS_VALIDATE:
                raise ValueError(f"eta must be a number or {CROSS_VALIDATE!r}, got {self.eta!r}")
        elif self.eta < 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")
        if self.belief_samples < 1:
            raise ValueError(f"belief_samples must be >= 1, got {self.belief_samples}")
        if not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def deployment_steps(self) -> int:
        return self.horizon_total - self.learning_steps

    def with_overrides(self, **kwargs) -> "GameConfig":
        return replace(self, **kwargs)


# The config file is flat JSON whose keys are exactly the GameConfig field
# names ("lambda" on disk maps to the lambda_ attribute).
_FILE_KEYS = {
    "lambda" if f.name == "lambda_" else f.name: f.name for f in fields(GameConfig)
}


def config_from_dict(doc: dict) -> GameConfig:
    """Build a config from a flat key-value mapping; unknown keys are fatal."""
    unknown = sorted(set(doc) - set(_FILE_KEYS))
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    return GameConfig(**{_FILE_KEYS[k]: v for k, v in doc.items()})


def config_to_dict(config: GameConfig) -> dict:
    inverse = {attr: key for key, attr in _FILE_KEYS.items()}
    return {inverse[f.name]: getattr(config, f.name) for f in fields(GameConfig)}


def load_config(path: str | Path) -> GameConfig:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"config file {path} must hold a flat JSON object")
    return config_from_dict(doc)


def save_config(config: GameConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def child_seed(base_seed: int, *parts) -> int:
    """Derive a stable 64-bit child seed from a base seed and a key path.

    Hash-based so the stream for one purpose does not shift when other
    conditions are added or reordered.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base_seed)).encode())
    for part in parts:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "little")


def rng_for(base_seed: int, *parts) -> np.random.Generator:
    return np.random.default_rng(child_seed(base_seed, *parts))
