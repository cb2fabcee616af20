"""Experiment protocols behind the ``eval``, ``optimize``, ``shift`` and ``drns`` commands."""

from ..config import Mode
from .common import RunOutputs, run_replicates, summarize
from .drns_sweep import run_drns_sweep
from .optimize import run_optimize
from .shift import run_covariate_shift
from .stationary import run_eval_stationary

PROTOCOLS = {
    Mode.EVAL: run_eval_stationary,
    Mode.OPTIMIZE: run_optimize,
    Mode.SHIFT: run_covariate_shift,
    Mode.DRNS: run_drns_sweep,
}

__all__ = [
    "PROTOCOLS",
    "RunOutputs",
    "run_covariate_shift",
    "run_drns_sweep",
    "run_eval_stationary",
    "run_optimize",
    "run_replicates",
    "summarize",
]
