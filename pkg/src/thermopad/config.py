"""INI experiment configuration with protocol defaults pre-filled.

An empty file (or no overrides at all) reproduces the reference protocol
shape: 10 splits, SGD momentum 0.9, learning rate 0.0001, batch 16,
patience 10.  The ``THERMOPAD_SEED`` environment variable, when set,
overrides both the data seed and the training seed.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from pathlib import Path

from .data import SyntheticParams
from .errors import ConfigError
from .models import FAMILIES
from .nn import Hyperparams

SEED_ENV_VAR = "THERMOPAD_SEED"

MODES = ("authenticity", "identity")

# cli-facing experiment modes map onto the protocol module's split modes
PROTOCOL_MODES = {"authenticity": "open_set", "identity": "closed_set"}

_DEFAULTS = {
    "data": {
        "num_subjects": "20",
        "sessions": "2",
        "images_per_class_per_modality": "6",
        "fake_images_per_class": "2",
        "image_height": "64",
        "image_width": "64",
        "seed": "0",
    },
    "model": {
        "family": "alex_micro",
        "channel_scale": "0.125",
        "input_height": "64",
        "input_width": "64",
    },
    "training": {
        "learning_rate": "0.0001",
        "momentum": "0.9",
        "batch_size": "16",
        "patience": "10",
        "max_epochs": "200",
        "seed": "0",
    },
    "experiment": {
        "mode": "authenticity",
        "n_splits": "10",
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one ``thermopad run`` needs, resolved and validated."""

    synthetic: SyntheticParams
    mode: str
    family: str
    hp: Hyperparams
    n_splits: int
    channel_scale: float
    input_size: tuple[int, int]

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.n_splits < 1:
            raise ConfigError(f"n_splits must be >= 1, got {self.n_splits}")

    @property
    def protocol_mode(self) -> str:
        return PROTOCOL_MODES[self.mode]


def _parse(parser: configparser.ConfigParser, section: str, key: str, kind):
    raw = parser.get(section, key)
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from exc


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Read an INI file on top of the defaults; ``None`` means defaults only."""
    parser = configparser.ConfigParser()
    parser.read_dict(_DEFAULTS)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            with path.open() as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for section in parser.sections():
        if section not in _DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _DEFAULTS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    data_seed = _parse(parser, "data", "seed", int)
    train_seed = _parse(parser, "training", "seed", int)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            data_seed = train_seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from exc

    try:
        synthetic = SyntheticParams(
            num_subjects=_parse(parser, "data", "num_subjects", int),
            sessions=_parse(parser, "data", "sessions", int),
            images_per_class_per_modality=_parse(
                parser, "data", "images_per_class_per_modality", int
            ),
            fake_images_per_class=_parse(parser, "data", "fake_images_per_class", int),
            image_size=(
                _parse(parser, "data", "image_height", int),
                _parse(parser, "data", "image_width", int),
            ),
            rng_seed=data_seed,
        )
        hp = Hyperparams(
            learning_rate=_parse(parser, "training", "learning_rate", float),
            momentum=_parse(parser, "training", "momentum", float),
            batch_size=_parse(parser, "training", "batch_size", int),
            patience=_parse(parser, "training", "patience", int),
            max_epochs=_parse(parser, "training", "max_epochs", int),
            rng_seed=train_seed,
        )
        return ExperimentConfig(
            synthetic=synthetic,
            mode=parser.get("experiment", "mode"),
            family=parser.get("model", "family"),
            hp=hp,
            n_splits=_parse(parser, "experiment", "n_splits", int),
            channel_scale=_parse(parser, "model", "channel_scale", float),
            input_size=(
                _parse(parser, "model", "input_height", int),
                _parse(parser, "model", "input_width", int),
            ),
        )
    except ConfigError:
        raise
    except Exception as exc:
        # dataclass validators raise their own error types; unify for the cli
        raise ConfigError(str(exc)) from exc


def write_default_config(path: str | Path) -> None:
    """Emit the full default config as an editable INI file."""
    parser = configparser.ConfigParser()
    parser.read_dict(_DEFAULTS)
    with Path(path).open("w") as fh:
        parser.write(fh)
