"""Photonic VQE simulator: Python bindings to the C++ core."""

import json as _json
import os as _os

_here = _os.path.dirname(__file__)
if "PVQE_DATA_DIR" not in _os.environ and _os.path.isdir(_os.path.join(_here, "data")):
    _os.environ["PVQE_DATA_DIR"] = _os.path.join(_here, "data")

from ._pvqe import *  # noqa: F401,F403
from ._pvqe import __version__, run_vqe as _run_vqe, normalize_config as _normalize_config


def run(config):
    """Run one VQE from a config dict (or JSON text) and return the trace dict."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _run_vqe(text)


def normalize(config):
    """Fill every default of a config dict and return it."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_normalize_config(text))


def data_dir():
    return _os.environ.get("PVQE_DATA_DIR", "")
