"""Small-jump contributions to the truncated first and second moments.

Within the cube |x - z| <= eps the stable jumps of intensity sigma add

    R = sigma^alpha k_alpha beta eps^(1 - alpha) / (1 - alpha)      (alpha != 1)
    S = sigma^alpha k_alpha eps^(2 - alpha) / (2 - alpha)

to the drift and to the diagonal of the diffusion matrix.  The two half-lines
carry weights (1 + beta)/2 and (1 - beta)/2, which sum to one in S, so S does
not depend on beta.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .stable import StableParams, kernel_density, stable_kernel_constant


@dataclass(frozen=True)
class CorrectionInput:
    alpha: float
    beta: float
    sigma_value: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if not -1.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [-1, 1]")
        if np.any(np.asarray(self.sigma_value) <= 0):
            raise ValueError("sigma_value must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def drift_correction(c):
    """R^{alpha,beta,eps}; accepts an array ``sigma_value``."""
    sigma = np.asarray(c.sigma_value, dtype=float)
    if c.alpha == 1.0:
        out = (2.0 / math.pi) * sigma * c.beta * math.log(c.epsilon)
    else:
        out = (sigma ** c.alpha * stable_kernel_constant(c.alpha) * c.beta
               * c.epsilon ** (1.0 - c.alpha) / (1.0 - c.alpha))
    return out if out.ndim else float(out)


def diffusion_correction(c):
    """S_ii^{alpha,eps}; independent of beta.  Off-diagonal entries are zero."""
    sigma = np.asarray(c.sigma_value, dtype=float)
    out = (sigma ** c.alpha * stable_kernel_constant(c.alpha)
           * c.epsilon ** (2.0 - c.alpha) / (2.0 - c.alpha))
    return out if out.ndim else float(out)


def _half_line(c, power, sign, lo, hi):
    """Integral of y^power W(y / sigma) / sigma for |y| in [lo, hi] on one side.

    The algebraic singularity at y = 0 is integrable for the moments used here
    and is left to the adaptive extrapolation of QUADPACK.
    """
    p = StableParams(c.alpha, c.beta)
    sigma = c.sigma_value

    def f(r):
        y = sign * r
        return y ** power * kernel_density(p, y / sigma) / sigma

    val, err = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=500)
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise ArithmeticError(f"quadrature did not converge (error estimate {err:g})")
    return val


def correction_quadrature_oracle(c, moment):
    """Numerically integrate the defining jump-kernel integrals of R (moment 1) or S (moment 2)."""
    if moment not in (1, 2):
        raise ValueError("moment must be 1 or 2")
    eps = c.epsilon
    if moment == 2 or c.alpha < 1.0:
        return _half_line(c, moment, 1, 0.0, eps) + _half_line(c, moment, -1, 0.0, eps)
    if c.alpha > 1.0:
        return -(_half_line(c, 1, 1, eps, math.inf) + _half_line(c, 1, -1, eps, math.inf))
    # alpha == 1: oriented integrals over |y| between 1 and eps
    return _half_line(c, 1, 1, 1.0, eps) + _half_line(c, 1, -1, 1.0, eps)
