"""Scalar proximal operator of a concave penalty.

Solves, for b >= 0,

    prox_g(b) = argmin_{x >= 0}  f_b(x) = g(x) + (x - b)^2 / 2.

For the smooth concave families the minimizer is found by comparing
f_b(0) against f_b at the largest stationary point of f_b in [0, b];
that stationary point is located by the fixed-point iteration
x_{k+1} = b - g'(x_k) started at x_0 = b, which decreases monotonically
to it (and drops below zero exactly when no stationary point exists).
The convex l1 penalty reduces to soft thresholding, and scad is handled
by exact enumeration of its piecewise-quadratic candidates.

The hot loop lives in a per-family kernel with a compiled and a pure
Python implementation (see :mod:`svtkit._backend`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernel
from .errors import FixedPointDivergenceError
from .penalties import FAMILY_CODES, L1, SCAD, Penalty


@dataclass(frozen=True)
class FixedPointConfig:
    """Controls for the fixed-point search and candidate comparison.

    ``tolerance`` is relative: the iteration stops when successive
    iterates differ by at most tolerance * max(1, b).  ``tie_tolerance``
    is the absolute objective gap within which f_b(0) and f_b at the
    stationary candidate count as tied (the nonzero candidate wins).
    """

    tolerance: float = 1e-12
    max_iterations: int = 10000
    tie_tolerance: float = 1e-12

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.max_iterations > 0:
            raise ValueError("max_iterations must be positive")
        if not self.tie_tolerance > 0:
            raise ValueError("tie_tolerance must be positive")


DEFAULT_CONFIG = FixedPointConfig()


@dataclass(frozen=True)
class ProxOutcome:
    """Result of the scalar prox with its candidate bookkeeping.

    The minimizer is always one of 0 and ``stationary_candidate`` (the
    largest stationary point of f_b in [0, b], None when there is none;
    for scad, the best positive candidate of the piecewise enumeration).
    """

    minimizer: float
    stationary_candidate: float | None
    objective_at_zero: float
    objective_at_candidate: float | None
    iterations: int
    tie: bool


def soft_threshold(b: float, tau: float) -> float:
    """max(b - tau, 0) for b >= 0, tau >= 0."""
    if b < 0 or tau < 0:
        raise ValueError("soft_threshold requires b >= 0 and tau >= 0")
    return max(b - tau, 0.0)


def _run_kernel(penalty: Penalty, values, config: FixedPointConfig):
    b = np.ascontiguousarray(values, dtype=np.float64)
    x, cand, f_cand, iters = kernel.prox_batch(
        FAMILY_CODES[penalty.family],
        penalty.lam,
        penalty.gamma if penalty.gamma is not None else 0.0,
        penalty.p if penalty.p is not None else 0.0,
        penalty.scale,
        b,
        config.tolerance,
        config.max_iterations,
        config.tie_tolerance,
    )
    bad = np.nonzero(iters < 0)[0]
    if bad.size:
        i = int(bad[0])
        raise FixedPointDivergenceError(float(b[i]), float(x[i]), config.max_iterations)
    return x, cand, f_cand, iters


def fixed_point_stationary(
    penalty: Penalty, b: float, config: FixedPointConfig = DEFAULT_CONFIG
) -> float | None:
    """Largest stationary point of f_b on [0, b], or None if none exists.

    Requires a smooth concave family (``penalty.supports_fixed_point_prox()``).
    Returns b directly when g'(b) = 0; otherwise runs the fixed-point
    iteration, whose iterates decrease strictly while above the answer.

    Raises
    ------
    FixedPointDivergenceError
        If the iteration does not settle within config.max_iterations.
    """
    if not penalty.supports_fixed_point_prox():
        raise ValueError(
            f"fixed-point search needs a smooth concave family, not {penalty.family!r}"
        )
    if b < 0:
        raise ValueError("b must be nonnegative")
    _, cand, _, _ = _run_kernel(penalty, [b], config)
    c = float(cand[0])
    return None if math.isnan(c) else c


def prox(penalty: Penalty, b: float, config: FixedPointConfig = DEFAULT_CONFIG) -> ProxOutcome:
    """Minimize g(x) + (x - b)^2 / 2 over x >= 0.

    Accepts the l1 and scad families (closed forms) and every smooth
    concave family (fixed-point search plus candidate comparison).  When
    the two candidates tie within ``config.tie_tolerance`` the nonzero
    one is returned, which makes the map b -> minimizer nondecreasing.
    """
    if b < 0:
        raise ValueError("b must be nonnegative")
    if penalty.family not in (L1, SCAD) and not penalty.supports_fixed_point_prox():
        raise ValueError(f"no prox rule for family {penalty.family!r}")
    x, cand, f_cand, iters = _run_kernel(penalty, [b], config)
    x0, c, fc = float(x[0]), float(cand[0]), float(f_cand[0])
    f_zero = 0.5 * b * b
    has_cand = not math.isnan(c)
    return ProxOutcome(
        minimizer=x0,
        stationary_candidate=c if has_cand else None,
        objective_at_zero=f_zero,
        objective_at_candidate=fc if has_cand else None,
        iterations=int(iters[0]),
        tie=has_cand and abs(fc - f_zero) <= config.tie_tolerance,
    )


def prox_minimizers(
    penalty: Penalty, values, config: FixedPointConfig = DEFAULT_CONFIG
) -> np.ndarray:
    """Prox minimizers for a flat array of nonnegative inputs.

    Internal helper for the matrix operators; identical to calling
    :func:`prox` elementwise and collecting ``minimizer``.
    """
    values = np.asarray(values, dtype=float)
    if np.any(values < 0):
        raise ValueError("prox inputs must be nonnegative")
    if penalty.family not in (L1, SCAD) and not penalty.supports_fixed_point_prox():
        raise ValueError(f"no prox rule for family {penalty.family!r}")
    x, _, _, _ = _run_kernel(penalty, values, config)
    return x


def brute_force_prox(penalty: Penalty, b: float, grid_step: float) -> float:
    """Grid-search oracle for the scalar prox.

    Evaluates f_b on the grid {0, d, 2d, ..., b} (b itself is appended
    when the step does not divide it) and returns the minimizing grid
    point, preferring the largest on exact ties.  Used as the
    independent reference the fast path is tested against.
    """
    if b < 0:
        raise ValueError("b must be nonnegative")
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    grid = np.arange(0.0, b, grid_step)
    grid = np.append(grid, b)
    f = penalty.value(grid) + 0.5 * (grid - b) ** 2
    best = f.min()
    return float(grid[np.nonzero(f == best)[0][-1]])
