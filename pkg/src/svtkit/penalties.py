"""Concave scalar penalty families applied to singular values.

Each penalty is a function g(theta) defined for theta >= 0 with g(0) = 0,
nondecreasing and concave on [0, inf).  Supported families:

========= ============================================ ==================
name      g(theta)                                     parameters
========= ============================================ ==================
l1        lam * theta                                  lam
lp        lam * theta**p                               lam, 0 < p < 1
scad      three-piece quadratic spline                 lam, gamma > 1
logarithm  lam/log(gamma+1)*log(gamma*theta + 1)       lam, gamma > 0
mcp       lam*theta - theta**2/(2*gamma), capped       lam, gamma > 1
geman     lam*theta / (theta + gamma)                  lam, gamma > 1
laplace   lam*(1 - exp(-theta/gamma))                  lam, gamma > 1
========= ============================================ ==================

All families except ``l1`` (convex) and ``scad`` (non-convex gradient)
are smooth with a convex, nonincreasing gradient; those are the ones the
fixed-point prox solver accepts (see :mod:`svtkit.scalar_prox`).

A positive ``scale`` multiplies the whole function, so ``scale=1/mu``
realizes the (1/mu)*g penalty used inside proximal-gradient steps without
touching lam or gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

L1 = "l1"
LP = "lp"
SCAD = "scad"
LOGARITHM = "logarithm"
MCP = "mcp"
GEMAN = "geman"
LAPLACE = "laplace"

FAMILIES = (L1, LP, SCAD, LOGARITHM, MCP, GEMAN, LAPLACE)

#: integer codes shared with the compiled prox kernel
FAMILY_CODES = {name: code for code, name in enumerate(FAMILIES)}

_NEEDS_GAMMA = frozenset({SCAD, LOGARITHM, MCP, GEMAN, LAPLACE})

#: families with a smooth concave g whose gradient is convex and
#: nonincreasing, i.e. the ones the fixed-point solver handles
SMOOTH_CONCAVE = frozenset({LP, LOGARITHM, MCP, GEMAN, LAPLACE})


@dataclass(frozen=True)
class Penalty:
    """A parameterized concave penalty g(theta; lam, gamma, p), times ``scale``.

    Parameters
    ----------
    family : str
        One of :data:`FAMILIES`.
    lam : float
        Penalty magnitude, must be positive.
    gamma : float, optional
        Shape parameter; required for scad/logarithm/mcp/geman/laplace.
        Must exceed 1 except for ``logarithm`` where any positive value
        is accepted.
    p : float, optional
        Exponent in (0, 1); required for (and only for) ``lp``.
    scale : float
        Positive multiplier applied to the whole function (default 1).
    """

    family: str
    lam: float
    gamma: float | None = None
    p: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"unknown penalty family {self.family!r}; expected one of {FAMILIES}"
            )
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be positive and finite, got {self.lam!r}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive and finite, got {self.scale!r}")
        if self.family in _NEEDS_GAMMA:
            if self.gamma is None:
                raise ValueError(f"{self.family} requires a gamma parameter")
            lo = 0.0 if self.family == LOGARITHM else 1.0
            if not (math.isfinite(self.gamma) and self.gamma > lo):
                raise ValueError(
                    f"{self.family} requires gamma > {lo:g}, got {self.gamma!r}"
                )
        elif self.gamma is not None:
            raise ValueError(f"{self.family} does not take a gamma parameter")
        if self.family == LP:
            if self.p is None or not (0.0 < self.p < 1.0):
                raise ValueError(f"lp requires p in (0, 1), got {self.p!r}")
        elif self.p is not None:
            raise ValueError(f"{self.family} does not take a p parameter")

    def value(self, theta):
        """Evaluate scale * g(theta) for theta >= 0 (scalar or ndarray)."""
        th = np.asarray(theta, dtype=float)
        if np.any(th < 0) or not np.all(np.isfinite(th)):
            raise ValueError("theta must be finite and nonnegative")
        lam, gam = self.lam, self.gamma
        if self.family == L1:
            out = lam * th
        elif self.family == LP:
            out = lam * th**self.p
        elif self.family == SCAD:
            out = np.where(
                th <= lam,
                lam * th,
                np.where(
                    th <= gam * lam,
                    (-(th**2) + 2.0 * gam * lam * th - lam * lam) / (2.0 * (gam - 1.0)),
                    0.5 * lam * lam * (gam + 1.0),
                ),
            )
        elif self.family == LOGARITHM:
            out = lam / math.log(gam + 1.0) * np.log(gam * th + 1.0)
        elif self.family == MCP:
            out = np.where(th < gam * lam, lam * th - th**2 / (2.0 * gam), 0.5 * gam * lam * lam)
        elif self.family == GEMAN:
            out = lam * th / (th + gam)
        else:  # laplace
            out = lam * (1.0 - np.exp(-th / gam))
        out = self.scale * out
        return float(out) if np.isscalar(theta) or th.ndim == 0 else out

    def grad(self, theta):
        """Evaluate scale * g'(theta) for theta > 0 (scalar or ndarray).

        At the scad/mcp piece boundaries this is the one-sided derivative
        from the left, which keeps the gradient nonincreasing.  Use
        :meth:`grad_at_zero` for theta = 0.
        """
        th = np.asarray(theta, dtype=float)
        if np.any(th <= 0) or not np.all(np.isfinite(th)):
            raise ValueError("theta must be finite and positive; use grad_at_zero for 0")
        lam, gam = self.lam, self.gamma
        if self.family == L1:
            out = np.full_like(th, lam)
        elif self.family == LP:
            out = lam * self.p * th ** (self.p - 1.0)
        elif self.family == SCAD:
            out = np.where(
                th <= lam,
                lam,
                np.where(th <= gam * lam, (gam * lam - th) / (gam - 1.0), 0.0),
            )
        elif self.family == LOGARITHM:
            out = lam * gam / (math.log(gam + 1.0) * (gam * th + 1.0))
        elif self.family == MCP:
            out = np.where(th < gam * lam, lam - th / gam, 0.0)
        elif self.family == GEMAN:
            out = lam * gam / (th + gam) ** 2
        else:  # laplace
            out = lam / gam * np.exp(-th / gam)
        out = self.scale * out
        return float(out) if np.isscalar(theta) or th.ndim == 0 else out

    def grad_at_zero(self) -> float:
        """Right limit of the gradient at theta = 0.

        Returns ``math.inf`` for the lp family (the gradient diverges);
        callers must branch on ``math.isinf`` before using the value.
        """
        if self.family == LP:
            return math.inf
        if self.family in (L1, SCAD, MCP):
            g0 = self.lam
        elif self.family == LOGARITHM:
            g0 = self.lam * self.gamma / math.log(self.gamma + 1.0)
        else:  # geman, laplace
            g0 = self.lam / self.gamma
        return self.scale * g0

    def supports_fixed_point_prox(self) -> bool:
        """Whether the fixed-point prox solver applies to this family.

        True for the smooth concave families (lp, logarithm, mcp, geman,
        laplace).  False for scad (its gradient is not convex) and for l1
        (convex, handled by the soft-threshold closed form instead).
        """
        return self.family in SMOOTH_CONCAVE

    def scaled(self, factor: float) -> "Penalty":
        """Return a copy with ``scale`` multiplied by ``factor``."""
        return replace(self, scale=self.scale * factor)

    def with_lam(self, lam: float) -> "Penalty":
        """Return a copy with the lam parameter replaced."""
        return replace(self, lam=lam)


def parse_penalty(text: str) -> Penalty:
    """Parse a penalty specification string.

    Format: ``family:lambda=<v>[,gamma=<v>][,p=<v>]``, for example
    ``logarithm:lambda=1,gamma=1.5`` or ``l1:lambda=0.5``.

    Raises
    ------
    ValueError
        If the string is malformed; the message quotes the offending token.
    """
    family, sep, params = text.partition(":")
    family = family.strip().lower()
    if family not in FAMILIES:
        raise ValueError(f"unknown penalty family {family!r} in spec {text!r}")
    if not sep or not params.strip():
        raise ValueError(f"penalty spec {text!r} is missing parameters (need lambda=<v>)")
    kwargs: dict[str, float] = {}
    names = {"lambda": "lam", "gamma": "gamma", "p": "p"}
    for token in params.split(","):
        key, eq, value = token.partition("=")
        key = key.strip().lower()
        if not eq or key not in names:
            raise ValueError(f"bad penalty parameter token {token!r} in spec {text!r}")
        if names[key] in kwargs:
            raise ValueError(f"duplicate penalty parameter {token!r} in spec {text!r}")
        try:
            kwargs[names[key]] = float(value)
        except ValueError:
            raise ValueError(f"bad numeric value in token {token!r} of spec {text!r}") from None
    if "lam" not in kwargs:
        raise ValueError(f"penalty spec {text!r} is missing lambda=<v>")
    return Penalty(family=family, **kwargs)
