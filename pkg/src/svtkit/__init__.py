"""Nonconvex singular value shrinkage and low-rank matrix completion.

The toolkit covers, bottom up: concave scalar penalties and their
gradients (:mod:`svtkit.penalties`), the scalar proximal operator solved
by fixed-point iteration (:mod:`svtkit.scalar_prox`), singular value
shrinkage operators built on top of it (:mod:`svtkit.gsvt`), proximal
gradient solvers for matrix completion (:mod:`svtkit.solvers`), and the
data generation, metrics and file formats used by the benchmark CLI
(:mod:`svtkit.data`, :mod:`svtkit.cli`).
"""

from ._backend import backend
from .penalties import Penalty, parse_penalty
from .scalar_prox import FixedPointConfig, ProxOutcome, brute_force_prox, prox, soft_threshold
from .gsvt import GsvtResult, SvdFactors, gsvt, gsvt_objective, svd, weighted_objective, weighted_svt
from .solvers import (
    CompletionProblem,
    SolveTrace,
    SolverConfig,
    convex_pg_solve,
    gpg_solve,
    irnn_solve,
)

__version__ = "0.1.0"

__all__ = [
    "Penalty",
    "parse_penalty",
    "FixedPointConfig",
    "ProxOutcome",
    "prox",
    "brute_force_prox",
    "soft_threshold",
    "SvdFactors",
    "GsvtResult",
    "svd",
    "gsvt",
    "gsvt_objective",
    "weighted_svt",
    "weighted_objective",
    "CompletionProblem",
    "SolverConfig",
    "SolveTrace",
    "gpg_solve",
    "irnn_solve",
    "convex_pg_solve",
    "backend",
    "__version__",
]
