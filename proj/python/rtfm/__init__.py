"""Python access to the rtfm core: dataset generation, DRO weights, the toy
in-context model, score reports and the command line."""

import json

import numpy as np

from . import _rtfm
from ._rtfm import RtfmError, ToyModel, __version__, dataset_hash, theta_grid_size

__all__ = [
    "RtfmError",
    "ToyModel",
    "__version__",
    "auc_ovo",
    "dataset_arrays",
    "dataset_hash",
    "default_theta",
    "dro_weights",
    "generate_dataset",
    "report",
    "run_cli",
    "theta_grid_size",
]


def default_theta():
    return json.loads(_rtfm.default_theta())


def generate_dataset(theta=None, seed=0, n_train=128, n_test=64):
    """Returns the dataset payload (the bridge wire form) as a JSON string."""
    theta = default_theta() if theta is None else theta
    return _rtfm.generate_dataset(json.dumps(theta), int(seed), int(n_train), int(n_test))


def dataset_arrays(payload):
    """(x, y, train_indices, test_indices) with NaN for missing cells."""
    d = json.loads(payload)
    rows = d["rows"]
    x = np.array([[np.nan if v is None else v for v in row[:-1]] for row in rows], dtype=float)
    y = np.array([row[-1] for row in rows], dtype=int)
    return x, y, np.asarray(d["train_indices"]), np.asarray(d["test_indices"])


def dro_weights(gaps, c_frac=0.5):
    return _rtfm.dro_weights([float(g) for g in gaps], float(c_frac))


def auc_ovo(probs, labels):
    return _rtfm.auc_ovo(np.asarray(probs, dtype=float), [int(v) for v in labels])


def report(csv_text, reference="RTFM"):
    return json.loads(_rtfm.report(csv_text, reference))


def run_cli(*args):
    """Runs one rtfm subcommand in-process; returns (exit_code, stdout, stderr)."""
    return _rtfm.run_cli([str(a) for a in args])
