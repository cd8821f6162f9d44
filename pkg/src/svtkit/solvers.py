"""Proximal gradient solvers for low-rank matrix completion.

The problem is

    min_X  F(X) = sum_i g(sigma_i(X)) + h(X),
    h(X) = ||P(X) - P(M)||_F^2 / 2,

where P keeps the observed entries and zeros the rest (its gradient has
Lipschitz constant 1).  Two nonconvex solvers share one iteration
skeleton and differ only in how they shrink the gradient step
B = X - grad_h(X)/mu:

* the proximal-gradient solver applies the full singular value
  shrinkage operator of (1/mu) * g (exact prox step), and
* the reweighted baseline linearizes g at the current spectrum and
  applies weighted soft thresholding with weights g'(sigma_i(X))/mu,
  which is a looser surrogate and typically decreases F more slowly.

The convex baseline is the proximal-gradient solver with the l1 penalty
(classic iterative soft thresholding of singular values).

The penalty magnitude lam follows a continuation schedule: it starts at
lambda0 and is multiplied by ``decay`` until it reaches lambda_target.
By default the decay is applied every iteration; setting a finite
``continuation_tolerance`` switches to a staged schedule that holds lam
fixed until the iterate has settled (relative step below that
tolerance), which tracks the solution path much more tightly and is
what the hard noise-free recovery presets use.  Convergence is only
declared at the target lam, once the relative step drops below
``step_tolerance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverDivergenceError
from .gsvt import _weighted_shrink, gsvt, svd
from .penalties import L1, Penalty
from .scalar_prox import DEFAULT_CONFIG, FixedPointConfig


@dataclass(frozen=True)
class CompletionProblem:
    """Observed entries of an m x n matrix.

    Parameters
    ----------
    shape : (int, int)
    omega : (k, 2) integer array of (row, col) pairs, no duplicates.
    observed : (k,) float array, the matrix values on omega.
    """

    shape: tuple[int, int]
    omega: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        m, n = self.shape
        omega = np.asarray(self.omega, dtype=np.intp)
        observed = np.asarray(self.observed, dtype=float)
        if m <= 0 or n <= 0:
            raise ValueError(f"bad shape {self.shape}")
        if omega.ndim != 2 or omega.shape[1] != 2:
            raise ValueError("omega must be a (k, 2) index array")
        if omega.shape[0] == 0:
            raise ValueError("omega must contain at least one entry")
        if observed.shape != (omega.shape[0],):
            raise ValueError("observed must have one value per omega entry")
        if not np.all(np.isfinite(observed)):
            raise ValueError("observed values must be finite")
        rows, cols = omega[:, 0], omega[:, 1]
        if rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n:
            raise ValueError("omega indices out of range")
        lin = rows * n + cols
        if np.unique(lin).size != lin.size:
            raise ValueError("omega contains duplicate index pairs")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "observed", observed)

    def observed_matrix(self) -> np.ndarray:
        """Dense matrix holding the observations, zero elsewhere."""
        out = np.zeros(self.shape)
        out[self.omega[:, 0], self.omega[:, 1]] = self.observed
        return out


@dataclass(frozen=True)
class SolverConfig:
    """Configuration shared by all completion solvers.

    ``mu`` must exceed 1 (the Lipschitz constant of the data-fit
    gradient); the margin mu - 1 is what guarantees monotone descent.
    ``lambda0`` and ``lambda_target`` bound the continuation schedule
    and ``decay`` is its multiplier, applied every iteration by default
    or, when ``continuation_tolerance`` is finite, whenever the relative
    step falls below it.  ``penalty`` supplies the family and shape
    parameters (its lam field is overridden by the schedule).
    """

    penalty: Penalty
    lambda0: float
    lambda_target: float
    mu: float = 1.1
    decay: float = 0.9
    max_iterations: int = 500
    step_tolerance: float = 1e-5
    continuation_tolerance: float = math.inf
    fixed_point: FixedPointConfig = field(default_factory=lambda: DEFAULT_CONFIG)

    def __post_init__(self):
        if not self.mu > 1:
            raise ValueError("mu must exceed 1")
        if not (0 < self.decay < 1):
            raise ValueError("decay must lie in (0, 1)")
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if not 0 < self.lambda_target <= self.lambda0:
            raise ValueError("need 0 < lambda_target <= lambda0")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if not self.step_tolerance > 0:
            raise ValueError("step_tolerance must be positive")
        if not self.continuation_tolerance > 0:
            raise ValueError("continuation_tolerance must be positive")


@dataclass
class SolveTrace:
    """Per-iteration record of a solver run.

    Entry k describes the step from iterate k to iterate k+1: the
    objective F at iterate k under the lam in effect, the Frobenius norm
    of the step, that lam, and (when a ground truth was supplied) the
    relative error of iterate k.
    """

    objective: list[float] = field(default_factory=list)
    step_norm: list[float] = field(default_factory=list)
    lam: list[float] = field(default_factory=list)
    rel_err: list[float] | None = None
    iterations: int = 0
    converged: bool = False


def grad_h(problem: CompletionProblem, x) -> np.ndarray:
    """Gradient of the data-fit term: x - observations on omega, else 0."""
    x = np.asarray(x, dtype=float)
    if x.shape != problem.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {problem.shape}")
    rows, cols = problem.omega[:, 0], problem.omega[:, 1]
    out = np.zeros(problem.shape)
    out[rows, cols] = x[rows, cols] - problem.observed
    return out


def _h(problem: CompletionProblem, x) -> float:
    rows, cols = problem.omega[:, 0], problem.omega[:, 1]
    with np.errstate(over="ignore"):  # overflow surfaces as the divergence error
        return 0.5 * float(np.sum((x[rows, cols] - problem.observed) ** 2))


def objective_f(problem: CompletionProblem, penalty: Penalty, x) -> float:
    """Full objective: sum_i g(sigma_i(x)) plus the data-fit term."""
    x = np.asarray(x, dtype=float)
    if x.shape != problem.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {problem.shape}")
    sig = np.linalg.svd(x, compute_uv=False)
    return float(np.sum(penalty.value(sig))) + _h(problem, x)


def _rel_err(x, truth, truth_norm):
    return float(np.linalg.norm(x - truth) / truth_norm)


def _solve(problem, config, init, truth, step):
    """Shared continuation loop; ``step`` maps (B, sigma_x, lam) to
    (new iterate, its spectrum)."""
    if init is None:
        x = problem.observed_matrix()
    else:
        x = np.array(init, dtype=float)
        if x.shape != problem.shape:
            raise ValueError(f"init shape {x.shape} does not match {problem.shape}")
    truth_norm = None
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        if truth.shape != problem.shape:
            raise ValueError(f"truth shape {truth.shape} does not match {problem.shape}")
        truth_norm = float(np.linalg.norm(truth))

    trace = SolveTrace(rel_err=None if truth is None else [])
    lam = config.lambda0
    floor = config.lambda_target
    sigma_x = svd(x).sigma
    penalty = config.penalty

    for _ in range(config.max_iterations):
        f_val = float(np.sum(penalty.with_lam(lam).value(sigma_x))) + _h(problem, x)
        if not math.isfinite(f_val):
            raise SolverDivergenceError(
                f"objective became non-finite at iteration {trace.iterations}"
            )
        b = x - grad_h(problem, x) / config.mu
        x_new, sigma_new = step(b, sigma_x, lam)
        step_norm = float(np.linalg.norm(x_new - x))
        rel_step = step_norm / max(1.0, float(np.linalg.norm(x)))

        trace.objective.append(f_val)
        trace.step_norm.append(step_norm)
        trace.lam.append(lam)
        if trace.rel_err is not None:
            trace.rel_err.append(_rel_err(x, truth, truth_norm))
        trace.iterations += 1

        x, sigma_x = x_new, sigma_new
        at_floor = lam <= floor * (1.0 + 1e-12)
        if at_floor:
            if rel_step < config.step_tolerance:
                trace.converged = True
                break
        elif rel_step < config.continuation_tolerance:
            lam = max(config.decay * lam, floor)
    return x, trace


def gpg_solve(problem: CompletionProblem, config: SolverConfig, init=None, truth=None):
    """Proximal gradient with exact nonconvex singular value shrinkage.

    Each iteration shrinks B = X - grad_h(X)/mu with the prox of
    (1/mu) * g at the current lam.  At fixed lam the objective descends
    by at least (mu - 1)/2 times the squared step norm.

    Returns the final iterate and the per-iteration trace.
    """
    def step(b, sigma_x, lam):
        result = gsvt(config.penalty.with_lam(lam).scaled(1.0 / config.mu), b,
                      config.fixed_point)
        return result.x, result.shrunk_sigma

    return _solve(problem, config, init, truth, step)


def irnn_solve(problem: CompletionProblem, config: SolverConfig, init=None, truth=None):
    """Reweighted baseline: linearize g at the current spectrum.

    The weights g'(sigma_i(X)) are nondecreasing along the descending
    spectrum because g' is nonincreasing, so the weighted shrinkage step
    is valid.  A diverging weight at sigma = 0 (lp family) forces the
    corresponding output singular value to zero, which the +inf
    threshold achieves on its own.
    """
    if config.penalty.family == L1:
        raise ValueError("the reweighted baseline needs a concave family, not l1")

    def step(b, sigma_x, lam):
        pen = config.penalty.with_lam(lam)
        # descending spectrum + nonincreasing g' => ascending weights
        w = np.empty_like(sigma_x)
        pos = sigma_x > 0
        w[pos] = pen.grad(sigma_x[pos])
        w[~pos] = pen.grad_at_zero()
        return _weighted_shrink(w / config.mu, b)

    return _solve(problem, config, init, truth, step)


def convex_pg_solve(problem: CompletionProblem, config: SolverConfig, init=None, truth=None):
    """Convex baseline: the same iteration with the l1 penalty.

    Identical to gpg_solve with the penalty family forced to l1 (i.e.
    iterative soft thresholding of singular values), so the nonconvex
    runs have a like-for-like convex reference.
    """
    pen = Penalty(family=L1, lam=config.penalty.lam, scale=config.penalty.scale)
    cfg = SolverConfig(
        penalty=pen,
        lambda0=config.lambda0,
        lambda_target=config.lambda_target,
        mu=config.mu,
        decay=config.decay,
        max_iterations=config.max_iterations,
        step_tolerance=config.step_tolerance,
        continuation_tolerance=config.continuation_tolerance,
        fixed_point=config.fixed_point,
    )
    return gpg_solve(problem, cfg, init=init, truth=truth)
