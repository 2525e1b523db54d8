"""DG solver for electroneutral multi-ion transport."""

import json as _json

from ._core import (
    ConfigError,
    Error,
    IoError,
    SolveFailure,
    check_config,
    observed_rate,
    read_vtk,
    run_mms,
    run_reactor,
    run_solvecheck,
    set_deterministic,
    set_num_threads,
)

__all__ = [
    "ConfigError",
    "Error",
    "IoError",
    "SolveFailure",
    "check_config",
    "observed_rate",
    "read_vtk",
    "run",
    "run_mms",
    "run_reactor",
    "run_solvecheck",
    "set_deterministic",
    "set_num_threads",
]

_RUNNERS = {"mms": run_mms, "reactor": run_reactor, "solvecheck": run_solvecheck}


def run(experiment, config, out):
    """Runs an experiment; `config` is a JSON string or a dict."""
    if experiment not in _RUNNERS:
        raise ConfigError(f"unknown experiment '{experiment}'")
    text = config if isinstance(config, str) else _json.dumps(config)
    return _RUNNERS[experiment](text, str(out))
