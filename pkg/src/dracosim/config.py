"""Run configuration and its sectioned ``key = value`` file format.

A run file looks like::

    [field]
    width = 100
    height = 100

    [nodes]
    count = 100
    alpha = 20
    buffer_capacity = 20000

    [replication]
    strategy = draco
    degree = 5

    [failure]
    fraction = 0.5
    mode = boundary

    [collection]
    strategy = draco
    cr = 20

    [sim]
    duration = 400

Every key is optional; unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass
from pathlib import Path

from .core import FieldGeometry

REPLICATION_STRATEGIES = ("draco", "greedy", "random")
COLLECTION_STRATEGIES = ("draco", "sa_rw", "rw")
FAILURE_MODES = ("during", "boundary")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending setting."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SimConfig:
    width: float = 100.0
    height: float = 100.0
    n_nodes: int = 100
    alpha: float = 20.0
    buffer_capacity: int = 20000
    sense_min: float = 1.0
    sense_max: float = 4.0
    replication_strategy: str = "draco"
    replication_degree: int = 5
    advert_interval: float = 10.0
    stale_after: float | None = None  # defaults to 2 * advert_interval
    hop_delay: float = 0.01
    # per-transmission loss; stands in for collisions and fading on the radio
    drop_probability: float = 0.19
    duration: float = 400.0
    failure_fraction: float = 0.0
    failure_mode: str = "boundary"
    collection_strategy: str | None = "draco"
    sink_cr: float = 20.0
    max_sites: int | None = None  # defaults to sites_per_node * n_nodes
    sites_per_node: int = 20
    site_rejection_limit: int = 1_000_000

    def __post_init__(self) -> None:
        self.validate()

    @property
    def geometry(self) -> FieldGeometry:
        return FieldGeometry.of_size(self.width, self.height)

    @property
    def stale_window(self) -> float:
        return 2.0 * self.advert_interval if self.stale_after is None else self.stale_after

    @property
    def site_budget(self) -> int:
        return self.sites_per_node * self.n_nodes if self.max_sites is None else self.max_sites

    def validate(self) -> None:
        checks = [
            ("width", self.width > 0, "must be > 0"),
            ("height", self.height > 0, "must be > 0"),
            ("n_nodes", self.n_nodes >= 1, "must be >= 1"),
            ("alpha", self.alpha > 0, "must be > 0"),
            ("buffer_capacity", self.buffer_capacity >= 0, "must be >= 0"),
            ("sense_min", 0 < self.sense_min <= self.sense_max, "need 0 < sense_min <= sense_max"),
            ("replication_strategy", self.replication_strategy in REPLICATION_STRATEGIES,
             f"must be one of {REPLICATION_STRATEGIES}"),
            ("replication_degree", self.replication_degree >= 1, "must be >= 1"),
            ("advert_interval", self.advert_interval > 0, "must be > 0"),
            ("stale_after", self.stale_after is None or self.stale_after > 0, "must be > 0"),
            ("hop_delay", self.hop_delay >= 0, "must be >= 0"),
            ("drop_probability", 0.0 <= self.drop_probability < 1.0, "must be in [0, 1)"),
            ("duration", self.duration > 0, "must be > 0"),
            ("failure_fraction", 0.0 <= self.failure_fraction <= 1.0, "must be in [0, 1]"),
            ("failure_mode", self.failure_mode in FAILURE_MODES, f"must be one of {FAILURE_MODES}"),
            ("collection_strategy",
             self.collection_strategy is None or self.collection_strategy in COLLECTION_STRATEGIES,
             f"must be one of {COLLECTION_STRATEGIES} or none"),
            ("sink_cr", 0 < self.sink_cr < min(self.width, self.height) / 2,
             "must satisfy 0 < cr < min(field side) / 2"),
            ("max_sites", self.max_sites is None or self.max_sites >= 0, "must be >= 0"),
            ("sites_per_node", self.sites_per_node >= 0, "must be >= 0"),
            ("site_rejection_limit", self.site_rejection_limit >= 1, "must be >= 1"),
        ]
        for name, ok, message in checks:
            if not ok:
                raise ConfigError(FIELD_TO_KEY.get(name, name), message)

    def replace(self, **changes) -> "SimConfig":
        try:
            return dataclasses.replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(next(iter(changes), "?"), str(exc)) from None

    def digest(self) -> str:
        text = ";".join(f"{f.name}={getattr(self, f.name)!r}" for f in dataclasses.fields(self))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


# section -> file key -> (SimConfig field, parser)
def _opt_int(text: str) -> int | None:
    return None if text.lower() in ("", "none", "auto") else int(text)


def _opt_float(text: str) -> float | None:
    return None if text.lower() in ("", "none", "auto") else float(text)


def _opt_str(text: str) -> str | None:
    return None if text.lower() in ("", "none") else text.lower()


SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "field": {"width": ("width", float), "height": ("height", float)},
    "nodes": {
        "count": ("n_nodes", int),
        "alpha": ("alpha", float),
        "buffer_capacity": ("buffer_capacity", int),
        "sense_min": ("sense_min", float),
        "sense_max": ("sense_max", float),
    },
    "replication": {
        "strategy": ("replication_strategy", str.lower),
        "degree": ("replication_degree", int),
        "advert_interval": ("advert_interval", float),
        "stale_after": ("stale_after", _opt_float),
    },
    "failure": {"fraction": ("failure_fraction", float), "mode": ("failure_mode", str.lower)},
    "collection": {
        "strategy": ("collection_strategy", _opt_str),
        "cr": ("sink_cr", float),
        "max_sites": ("max_sites", _opt_int),
        "sites_per_node": ("sites_per_node", int),
        "site_rejection_limit": ("site_rejection_limit", int),
    },
    "sim": {
        "duration": ("duration", float),
        "hop_delay": ("hop_delay", float),
        "drop_probability": ("drop_probability", float),
    },
}

FIELD_TO_KEY = {
    fname: f"{section}.{key}"
    for section, keys in SCHEMA.items()
    for key, (fname, _) in keys.items()
}


def parse_value(section: str, key: str, text: str):
    try:
        fname, conv = SCHEMA[section][key]
    except KeyError:
        raise ConfigError(f"{section}.{key}", "unknown key") from None
    try:
        return fname, conv(text.strip())
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}", f"cannot parse {text!r}: {exc}") from None


def read_sections(text: str, extra: dict[str, set[str]] | None = None) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from None
    allowed = {s: set(k) for s, k in SCHEMA.items()}
    for s, keys in (extra or {}).items():
        allowed.setdefault(s, set()).update(keys)
    for section in parser.sections():
        if section not in allowed:
            raise ConfigError(section, "unknown section")
        for key in parser[section]:
            if key not in allowed[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    return parser


def config_from_text(text: str, base: SimConfig | None = None) -> SimConfig:
    parser = read_sections(text)
    changes = {}
    for section in parser.sections():
        for key, value in parser[section].items():
            fname, parsed = parse_value(section, key, value)
            changes[fname] = parsed
    return (base or SimConfig()).replace(**changes)


def load_config(name_or_path: str) -> SimConfig:
    """``default`` names the built-in defaults; anything else is a file path."""
    if name_or_path == "default":
        return SimConfig()
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError("config", f"no such file: {name_or_path}")
    return config_from_text(path.read_text())


def config_to_text(config: SimConfig) -> str:
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (fname, _) in keys.items():
            value = getattr(config, fname)
            lines.append(f"{key} = {'none' if value is None else value}")
        lines.append("")
    return "\n".join(lines)
