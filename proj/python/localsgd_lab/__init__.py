"""Deterministic simulator of VRL-SGD, Local SGD, EASGD and S-SGD.

Configs may be given as JSON text or as plain dicts.
"""

import json as _json

from . import _core
from ._core import (
    TRACE_HEADER,
    ConfigError,
    DimensionMismatch,
    NumericalError,
    localsgd_fixed_point,
    localsgd_limit_v_variance,
    vec_axpy,
    vec_mean,
)

__all__ = [
    "TRACE_HEADER",
    "ConfigError",
    "DimensionMismatch",
    "NumericalError",
    "check_hyperparams",
    "localsgd_fixed_point",
    "localsgd_limit_v_variance",
    "oracle_run",
    "run",
    "sweep",
    "vec_axpy",
    "vec_mean",
    "verify",
]


def _text(config):
    if config is None:
        return "{}"
    if isinstance(config, str):
        return config
    return _json.dumps(config)


def run(config=None, threads=1):
    """One experiment; returns the summary plus trace columns and trace_csv."""
    return _core.run(_text(config), threads)


def sweep(config, axis, values, threads=1):
    """One run per value of `axis`; each entry also carries its `value`."""
    return _core.sweep(_text(config), axis, [str(v) for v in values], threads)


def check_hyperparams(config=None):
    return _core.check_hyperparams(_text(config))


def oracle_run(config=None):
    return _core.oracle_run(_text(config))


def verify(quick=True):
    return _core.verify(quick)
