"""Python front end for the kdvh library."""

import json

import numpy as np

from . import _core
from ._core import (
    BlowUp,
    ConfigError,
    Error,
    ThresholdViolation,
    alpha_coeffs,
    energy_threshold,
    evaluate_energy,
    hierarchy_level,
    mollify,
    random_field,
    sobolev_norm,
    verify_identity,
    version,
)

__all__ = [
    "BlowUp",
    "ConfigError",
    "Error",
    "ThresholdViolation",
    "alpha_coeffs",
    "energy_blueprint",
    "energy_threshold",
    "evaluate_energy",
    "hierarchy_level",
    "mollify",
    "random_field",
    "run_experiment",
    "sobolev_norm",
    "solve",
    "verify_identity",
    "version",
]


def energy_blueprint(l):
    return json.loads(_core.energy_blueprint(l))


def solve(u0, config=None):
    """Integrates from the samples u0; config uses the CLI's nested keys."""
    final, csv = _core.solve(np.asarray(u0, dtype=float), json.dumps(config or {}))
    return final, csv


def run_experiment(name, config=None):
    """Returns (passed, metrics dict, csv text)."""
    passed, metrics, csv = _core.run_experiment(name, json.dumps(config or {}))
    return passed, json.loads(metrics), csv
