"""Discrete-event simulator for hop-by-hop data replication and mobile-sink
data collection in IoT sensor fields."""

__version__ = "0.1.0"

from .config import ConfigError, SimConfig
from .kernel import BACKENDS, DEFAULT_BACKEND, HAVE_COMPILED
from .metrics import MetricsReport, compute_metrics
from .runner import simulate

__all__ = [
    "BACKENDS",
    "ConfigError",
    "DEFAULT_BACKEND",
    "HAVE_COMPILED",
    "MetricsReport",
    "SimConfig",
    "compute_metrics",
    "simulate",
    "__version__",
]
