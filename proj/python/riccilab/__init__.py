"""Python access to the riccilab check catalog and scenario drivers."""

import json

from ._core import (
    CflViolation,
    ConfigInvalid,
    Error,
    PointOutOfChart,
    ProviderUnavailable,
    UnknownCheck,
    catalog,
    curvature_at,
    known_providers,
)
from . import _core

__all__ = [
    "CflViolation",
    "ConfigInvalid",
    "Error",
    "PointOutOfChart",
    "ProviderUnavailable",
    "UnknownCheck",
    "catalog",
    "config",
    "convergence",
    "curvature_at",
    "flow_trace",
    "known_providers",
    "verify",
]


def config(**overrides):
    """Default run configuration as a dict, with top-level keys replaced."""
    c = json.loads(_core.default_config())
    c.update(overrides)
    return json.loads(_core.normalize_config(json.dumps(c)))


def verify(cfg=None, **overrides):
    """Run the suite described by `cfg` (a dict) and return the report dict."""
    c = dict(cfg or {})
    c.update(overrides)
    return json.loads(_core.run_suite_json(json.dumps(c)))


def flow_trace(cfg=None, snapshot_dir="", **overrides):
    c = dict(cfg or {})
    c.update(overrides)
    return _core.flow_trace(json.dumps(c), snapshot_dir)


def convergence(cfg=None, **overrides):
    c = dict(cfg or {})
    c.update(overrides)
    return _core.convergence(json.dumps(c))
