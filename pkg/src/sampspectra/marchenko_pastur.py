"""Marchenko-Pastur limit law and its closed-form reconstruction error.

For oversampling ratio beta in (0, 1] the limiting eigenvalue density is
supported on [c2, c1] with c_{1,2} = (1 +- sqrt(beta))^2. Its moments are
the Narayana polynomials in beta, matching the large-d limit of the exact
moment expansion, and the mean reconstruction error of the linear MMSE
filter has a closed form in (beta, alpha) where alpha is the noise-to-signal
power ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ConvergenceError
from .moments import moment_limit

#: Square roots in the closed form may go fractionally negative through
#: rounding; anything this far below zero signals corrupted inputs instead.
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class MPParams:
    """Support edges of the Marchenko-Pastur law for a given beta."""

    beta: float
    c1: float = None
    c2: float = None

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        root = math.sqrt(self.beta)
        object.__setattr__(self, "c1", (1 + root) ** 2)
        object.__setattr__(self, "c2", (1 - root) ** 2)


def mp_pdf(x, params: MPParams):
    """Density of the Marchenko-Pastur law, zero outside (c2, c1).

    Accepts scalars or arrays. The value at the support edges is 0; for
    beta = 1 the density is integrable but unbounded near x = 0.
    """
    x = np.asarray(x, dtype=float)
    inside = (x > params.c2) & (x < params.c1)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = np.sqrt((params.c1 - xi) * (xi - params.c2)) / (
        2 * np.pi * xi * params.beta
    )
    return out if out.ndim else float(out)


def mp_moment(p: int, beta: float) -> float:
    """p-th moment of the law: the Narayana polynomial in beta (1 for p=0)."""
    if p == 0:
        return 1.0
    return moment_limit(p, beta)


def mp_lmmse(beta: float, alpha: float) -> float:
    """Mean LMMSE reconstruction error under the Marchenko-Pastur law.

    ``alpha`` is the noise-to-signal power ratio; alpha = 0 is the
    noiseless sentinel and returns exactly 0. The closed form is
    (2 beta - theta + sqrt(theta^2 - 4 beta)) / (2 beta) with
    theta = 1 + beta (1 + alpha).
    """
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if alpha < 0 or not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite and non-negative, got {alpha}")
    if alpha == 0:
        return 0.0
    theta = 1 + beta * (1 + alpha)
    disc = theta * theta - 4 * beta
    if disc < -_DOMAIN_SLACK:
        raise ValueError(
            f"discriminant {disc} is negative; beta/alpha inputs are corrupted"
        )
    value = (2 * beta - theta + math.sqrt(max(disc, 0.0))) / (2 * beta)
    if value < -_DOMAIN_SLACK or value > 1 + _DOMAIN_SLACK:
        raise ValueError(f"closed form produced {value}, outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def mp_expectation(g, beta: float, tolerance: float = 1e-10) -> float:
    """Integral of ``g`` against the Marchenko-Pastur density.

    Substituting x = c2 + (c1 - c2) sin^2(t) removes the square-root
    endpoint singularities (and the 1/x pole at beta = 1), leaving a smooth
    integrand on [0, pi/2] for adaptive quadrature.
    """
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    params = MPParams(beta)
    c1, c2 = params.c1, params.c2
    span = c1 - c2

    def integrand(t):
        x = c2 + span * math.sin(t) ** 2
        return g(x) * span**2 * math.sin(2 * t) ** 2 / (4 * math.pi * beta * x)

    value, err = quad(integrand, 0.0, math.pi / 2, epsabs=tolerance / 2,
                      epsrel=1e-12, limit=200)
    if err > tolerance:
        raise ConvergenceError(
            f"quadrature error estimate {err} exceeds tolerance {tolerance}",
            estimates=(value, value + err),
        )
    return value
