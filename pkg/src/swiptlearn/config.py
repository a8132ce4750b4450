"""Sectioned key=value run configuration.

Three sections are recognized: [train], [eh] and [sweep].  Every key is
optional and falls back to the module defaults; unknown sections or keys are
rejected.  All parse errors name the source, line and key.  Values set on
the command line via --set section.key=value go through the same typed
parsers as the file itself.
"""

from __future__ import annotations

import math

from .autoencoder import TrainConfig
from .experiment import SweepConfig
from .rectenna import RectennaParams


class ConfigError(Exception):
    """Malformed configuration text, file or override."""


def _parse_int(text: str) -> int:
    try:
        return int(text, 10)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _parse_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None
    if math.isnan(v):
        raise ConfigError("nan is not a valid value")
    return v


def _parse_finite(text: str) -> float:
    v = _parse_float(text)
    if math.isinf(v):
        raise ConfigError(f"expected a finite number, got {text!r}")
    return v


def _parse_snr(text: str) -> float:
    # +inf is the documented noise-off sentinel.
    v = _parse_float(text)
    if v == -math.inf:
        raise ConfigError("snr_db may be +inf but not -inf")
    return v


def _parse_b_scale(text: str):
    if text.strip().lower() == "none":
        return None
    return _parse_finite(text)


def _parse_float_list(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if any(not p for p in parts):
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}")
    return tuple(_parse_finite(p) for p in parts)


SCHEMA = {
    "train": {
        "m_messages": _parse_int,
        "n_channel_uses": _parse_int,
        "snr_db": _parse_snr,
        "lambda": _parse_finite,
        "avg_power": _parse_finite,
        "batch_size": _parse_int,
        "train_set_size": _parse_int,
        "epochs": _parse_int,
        "learning_rate": _parse_finite,
        "seed": _parse_int,
    },
    "eh": {
        "i_s": _parse_finite,
        "eta": _parse_finite,
        "v_t": _parse_finite,
        "r_a": _parse_finite,
        "r_l": _parse_finite,
        "b_scale": _parse_b_scale,
    },
    "sweep": {
        "lambda_grid": _parse_float_list,
        "ser_max": _parse_finite,
        "num_seeds": _parse_int,
        "ser_samples": _parse_int,
    },
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse config text into {section: {key: typed value}}."""
    sections: dict[str, dict] = {name: {} for name in SCHEMA}
    current = None
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in SCHEMA:
                raise ConfigError(f"{where}: unknown section [{name}]")
            current = name
            continue
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if current is None:
            raise ConfigError(f"{where}: key {key!r} appears before any [section]")
        if key not in SCHEMA[current]:
            raise ConfigError(f"{where}: unknown key {key!r} in section [{current}]")
        if key in sections[current]:
            raise ConfigError(f"{where}: duplicate key {key!r} in section [{current}]")
        try:
            sections[current][key] = SCHEMA[current][key](value)
        except ConfigError as exc:
            raise ConfigError(f"{where}: key {key!r}: {exc}") from None
    return sections


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text, source=str(path))


def apply_overrides(sections: dict, assignments) -> dict:
    """Apply --set section.key=value pairs on top of parsed sections."""
    out = {name: dict(vals) for name, vals in sections.items()}
    for raw in assignments:
        if "=" not in raw:
            raise ConfigError(f"override {raw!r}: expected section.key=value")
        target, _, value = raw.partition("=")
        target = target.strip()
        if "." not in target:
            raise ConfigError(f"override {raw!r}: expected section.key=value")
        section, _, key = target.partition(".")
        if section not in SCHEMA:
            raise ConfigError(f"override {raw!r}: unknown section {section!r}")
        if key not in SCHEMA[section]:
            raise ConfigError(f"override {raw!r}: unknown key {key!r} in section [{section}]")
        try:
            out[section][key] = SCHEMA[section][key](value.strip())
        except ConfigError as exc:
            raise ConfigError(f"override {raw!r}: {exc}") from None
    return out


def build_rectenna(sections: dict) -> RectennaParams:
    try:
        return RectennaParams(**sections.get("eh", {}))
    except ValueError as exc:
        raise ConfigError(f"section [eh]: {exc}") from None


def build_train_config(sections: dict) -> TrainConfig:
    kwargs = dict(sections.get("train", {}))
    if "m_messages" not in kwargs:
        raise ConfigError("section [train]: m_messages is required")
    if "lambda" in kwargs:
        kwargs["lam"] = kwargs.pop("lambda")
    kwargs["rectenna"] = build_rectenna(sections)
    try:
        return TrainConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"section [train]: {exc}") from None


def build_sweep_config(sections: dict) -> SweepConfig:
    base = build_train_config(sections)
    try:
        return SweepConfig(base=base, **sections.get("sweep", {}))
    except ValueError as exc:
        raise ConfigError(f"section [sweep]: {exc}") from None
