"""Python bindings for the mixlab core."""

import json
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

from . import _mixlab
from ._mixlab import (
    DegenerateInput,
    FormatError,
    InvalidArgument,
    MixlabError,
    atd,
    benr,
    benr_theoretical,
    equivalence_lambda,
    grad_rate,
    interference_sweep,
    loss_at_lambda,
    mix_grad_early,
    mixed_score,
    relative_fluctuation,
    spearman,
    total_grad_early,
    vanilla_grad_early,
    welch_t_one_tailed,
)

ConfigLike = Union[Mapping[str, Any], str, Path]

__all__ = [
    "DegenerateInput",
    "FormatError",
    "InvalidArgument",
    "MixlabError",
    "atd",
    "benr",
    "benr_theoretical",
    "config_hash",
    "equivalence_lambda",
    "grad_rate",
    "interference_sweep",
    "load_config",
    "loss_at_lambda",
    "metrics_csv",
    "mix_grad_early",
    "mixed_score",
    "relative_fluctuation",
    "run",
    "spearman",
    "sweep_grad_rate",
    "total_grad_early",
    "vanilla_grad_early",
    "welch_t_one_tailed",
]


def _config_text(config: ConfigLike) -> str:
    if isinstance(config, (str, Path)):
        return Path(config).read_text()
    return json.dumps(dict(config))


def load_config(config: ConfigLike) -> dict:
    """Parsed and validated config with every default filled in."""
    return json.loads(_mixlab.normalize_config(_config_text(config)))


def config_hash(config: ConfigLike) -> str:
    return _mixlab.config_hash(_config_text(config))


def run(config: ConfigLike, write_files: bool = False) -> dict:
    """Trains one configured run and returns its record as a dict."""
    return json.loads(_mixlab.run(_config_text(config), write_files))


def metrics_csv(record: Mapping[str, Any]) -> str:
    return _mixlab.metrics_csv(json.dumps(dict(record)))


def sweep_grad_rate(config: ConfigLike, grid: Mapping[str, Sequence[int]]) -> str:
    """Grad-rate sweep CSV (n_samples,hidden_width,seed,grad_rate)."""
    return _mixlab.sweep_grad_rate(_config_text(config), json.dumps(dict(grid)))
