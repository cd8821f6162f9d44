"""Singular value shrinkage operators.

The central operator maps a matrix B to the minimizer of

    sum_i g(sigma_i(X)) + ||X - B||_F^2 / 2,

computed by taking the SVD of B, applying the scalar prox of g to each
singular value and reassembling with B's singular vectors.  This is
valid because the scalar prox is a monotone map, so the shrunk values
inherit the nonincreasing order of the input spectrum; the operator
checks that property on every call.

The weighted variant shrinks sigma_i by an individual threshold w_i.
That construction is only optimal when the weights are ascending
(paired with the descending spectrum); for descending weights it can be
beaten by another matrix, so non-ascending weights are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .penalties import Penalty
from .scalar_prox import DEFAULT_CONFIG, FixedPointConfig, prox_minimizers


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD (u, sigma, v) with b = u @ diag(sigma) @ v.T.

    sigma is nonincreasing and nonnegative; u and v have orthonormal
    columns.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class GsvtResult:
    """Shrunk matrix together with the input and output spectra."""

    x: np.ndarray
    shrunk_sigma: np.ndarray
    input_sigma: np.ndarray


def svd(b) -> SvdFactors:
    """Thin SVD with singular values sorted in nonincreasing order.

    Raises np.linalg.LinAlgError if the decomposition fails to converge
    (it never silently returns garbage).
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 2:
        raise ValueError("svd expects a 2-d matrix")
    if not np.all(np.isfinite(b)):
        raise ValueError("svd requires finite entries")
    u, s, vt = np.linalg.svd(b, full_matrices=False)
    # LAPACK already returns a sorted spectrum; enforce it anyway since
    # the shrinkage logic depends on the order
    order = np.argsort(-s, kind="stable")
    return SvdFactors(u=u[:, order], sigma=s[order], v=vt[order].T)


def _assert_nonincreasing(values: np.ndarray, scale: float) -> np.ndarray:
    """Validate monotone order up to rounding noise, then enforce it."""
    tol = 1e-9 * max(1.0, scale)
    diffs = np.diff(values)
    if diffs.size and diffs.max() > tol:
        raise AssertionError(
            f"shrunk spectrum is not nonincreasing (max inversion {diffs.max():.3e}); "
            "this indicates a prox bug"
        )
    return np.minimum.accumulate(values)


def gsvt(penalty: Penalty, b, config: FixedPointConfig = DEFAULT_CONFIG) -> GsvtResult:
    """Shrink the singular values of b through the scalar prox of g.

    Parameters
    ----------
    penalty : Penalty
        Any family with a prox rule (l1, scad, or a smooth concave one).
    b : (m, n) array_like
    config : FixedPointConfig, optional

    Returns
    -------
    GsvtResult
        ``x = u @ diag(shrunk_sigma) @ v.T`` plus both spectra.
    """
    factors = svd(b)
    shrunk = prox_minimizers(penalty, factors.sigma, config)
    top = float(factors.sigma[0]) if factors.sigma.size else 1.0
    shrunk = _assert_nonincreasing(shrunk, top)
    x = (factors.u * shrunk) @ factors.v.T
    return GsvtResult(x=x, shrunk_sigma=shrunk, input_sigma=factors.sigma)


def gsvt_objective(penalty: Penalty, x, b) -> float:
    """sum_i g(sigma_i(x)) + ||x - b||_F^2 / 2."""
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    if x.shape != b.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {b.shape}")
    sig = np.linalg.svd(x, compute_uv=False)
    return float(np.sum(penalty.value(sig)) + 0.5 * np.linalg.norm(x - b) ** 2)


def _weighted_shrink(weights, b):
    """weighted_svt plus the shrunk spectrum (internal)."""
    b = np.asarray(b, dtype=float)
    weights = np.asarray(weights, dtype=float)
    k = min(b.shape)
    if weights.shape != (k,):
        raise ValueError(f"expected {k} weights for a {b.shape} matrix, got {weights.shape}")
    if np.any(np.isnan(weights)) or np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    with np.errstate(invalid="ignore"):  # inf - inf in diff is fine
        if np.any(np.diff(weights) < 0):
            raise ValueError("weights must be ascending (w_1 <= ... <= w_m)")
    factors = svd(b)
    shrunk = np.maximum(factors.sigma - weights, 0.0)
    top = float(factors.sigma[0]) if factors.sigma.size else 1.0
    shrunk = _assert_nonincreasing(shrunk, top)
    return (factors.u * shrunk) @ factors.v.T, shrunk


def weighted_svt(weights, b) -> np.ndarray:
    """Soft-threshold each singular value sigma_i of b by its weight w_i.

    ``weights`` must be nonnegative and ascending (w_1 <= ... <= w_m,
    paired with the descending spectrum) and have length min(m, n);
    +inf entries are allowed and force the corresponding output value to
    zero.  Non-ascending weights are rejected: that is exactly the
    regime where this construction stops being a minimizer of the
    weighted objective.
    """
    x, _ = _weighted_shrink(weights, b)
    return x


def weighted_objective(weights, x, b) -> float:
    """sum_i w_i * sigma_i(x) + ||x - b||_F^2 / 2."""
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    if x.shape != b.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {b.shape}")
    weights = np.asarray(weights, dtype=float)
    sig = np.linalg.svd(x, compute_uv=False)
    return float(np.sum(weights * sig) + 0.5 * np.linalg.norm(x - b) ** 2)
