"""Groupwise query performance prediction."""

import json

from ._gqpp import (
    ContractError,
    DataError,
    Error,
    NumericalError,
    __version__,
    aggregate,
    baseline,
    dump_config,
    kendall_tau,
    load_embeddings,
    make_splits,
    paired_t_test,
    pearson,
    save_embeddings,
    write_synthetic,
)
from ._gqpp import run_experiment as _run_experiment


def run_experiment(config):
    """Run the split protocol. `config` is `key = value` text or a dict."""
    if isinstance(config, dict):
        config = "\n".join(
            f"{k} = {','.join(map(str, v)) if isinstance(v, (list, tuple)) else v}" for k, v in config.items()
        )
    return json.loads(_run_experiment(config))


__all__ = [
    "ContractError",
    "DataError",
    "Error",
    "NumericalError",
    "__version__",
    "aggregate",
    "baseline",
    "dump_config",
    "kendall_tau",
    "load_embeddings",
    "make_splits",
    "paired_t_test",
    "pearson",
    "run_experiment",
    "save_embeddings",
    "write_synthetic",
]
