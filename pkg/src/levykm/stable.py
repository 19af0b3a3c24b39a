"""Alpha-stable law utilities.

Stable laws are parameterized as S_alpha(scale, beta, shift) with
characteristic function ``exp(-scale^a |t|^a (1 - i beta sgn(t) tan(pi a / 2)))``
for alpha != 1.  In this parameterization the Levy measure of S_alpha(1, beta, 0)
has density ``k_alpha (1 +/- beta) / (2 |xi|^(1 + alpha))``.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not -1.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [-1, 1], got {self.beta}")


def check_estimable(alpha, margin=0.05):
    """Reject alpha within ``margin`` of {0, 1, 2}; estimators are unstable there."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if min(alpha, abs(alpha - 1.0), 2.0 - alpha) <= margin:
        raise ValueError(f"alpha={alpha} is within {margin} of {{0, 1, 2}}")


def stable_kernel_constant(alpha):
    """k_alpha = alpha (1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2)); 2/pi at alpha = 1."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if alpha == 1.0:
        return 2.0 / math.pi
    if abs(alpha - 1.0) < 1e-7:
        # (1 - a) / cos(pi a / 2) -> 2 / pi; avoid cancellation
        d = 1.0 - alpha
        ratio = d / math.sin(math.pi * d / 2.0)
        return alpha * ratio / math.gamma(2.0 - alpha)
    return alpha * (1.0 - alpha) / (math.gamma(2.0 - alpha) * math.cos(math.pi * alpha / 2.0))


def kernel_density(p, xi):
    """Levy jump density W^{alpha,beta}(xi) of a standard scalar stable motion."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi == 0):
        raise ValueError("kernel density is undefined at xi = 0")
    k = stable_kernel_constant(p.alpha)
    weight = np.where(xi > 0, 1.0 + p.beta, 1.0 - p.beta)
    out = k * weight / (2.0 * np.abs(xi) ** (1.0 + p.alpha))
    return out if out.ndim else float(out)


def cms_transform(alpha, beta, v, w):
    """Chambers-Mallows-Stuck map from V ~ U(-pi/2, pi/2), W ~ Exp(1) to S_alpha(1, beta, 0)."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if alpha == 1.0:
        if beta != 0.0:
            raise ValueError("alpha = 1 with beta != 0 is not supported")
        return np.tan(v)
    if alpha == 2.0:
        return 2.0 * np.sqrt(w) * np.sin(v)
    zeta = beta * math.tan(math.pi * alpha / 2.0)
    b = math.atan(zeta) / alpha
    s = (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
    av = alpha * (v + b)
    return (s * np.sin(av) / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - av) / w) ** ((1.0 - alpha) / alpha))


def _uniform_exponential(u, size):
    u1 = u.random(size)
    u2 = u.random(size)
    # open interval for both draws
    u1 = np.where(u1 == 0.0, 0.5, u1)
    v = np.pi * (u1 - 0.5)
    w = -np.log1p(-u2)
    w = np.where(w == 0.0, np.finfo(float).tiny, w)
    return v, w


def sample_standard_stable(p, u, size=None):
    """Draw from S_alpha(1, beta, 0) using the generator ``u``."""
    if p.alpha == 1.0 and p.beta != 0.0:
        raise ValueError("alpha = 1 with beta != 0 is not supported")
    v, w = _uniform_exponential(u, size)
    out = cms_transform(p.alpha, p.beta, v, w)
    return out if np.ndim(out) else float(out)


def sample_levy_increment(p, h, u, size=None):
    """Increment L_{t+h} - L_t ~ S_alpha(h^(1/alpha), beta, 0)."""
    if h <= 0:
        raise ValueError("h must be positive")
    return h ** (1.0 / p.alpha) * sample_standard_stable(p, u, size)


def unit_sphere_area(n):
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def isotropic_kernel_constant(n, alpha):
    """c(n, alpha) of the rotationally symmetric jump density c / |y|^(n + alpha)."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    return (alpha * math.gamma((n + alpha) / 2.0)
            / (2.0 ** (1.0 - alpha) * math.pi ** (n / 2.0) * math.gamma(1.0 - alpha / 2.0)))


def subordinated_gaussian(alpha, v, w, g):
    """Isotropic stable vector sqrt(2A) G from CMS inputs (v, w) and Gaussian rows ``g``.

    A ~ S_{alpha/2}(cos(pi alpha / 4)^(2/alpha), 1, 0) is a positive stable
    subordinator, giving characteristic function exp(-|xi|^alpha).
    """
    half = alpha / 2.0
    scale = math.cos(math.pi * alpha / 4.0) ** (1.0 / half)
    a = scale * cms_transform(half, 1.0, v, w)
    return np.sqrt(2.0 * a)[..., None] * g


def sample_isotropic_stable_vector(n, alpha, u, size=None):
    """Rotationally invariant stable vector(s) in R^n with chf exp(-|xi|^alpha)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    shape = () if size is None else (size,) if np.ndim(size) == 0 else tuple(size)
    v, w = _uniform_exponential(u, shape)
    g = u.standard_normal(shape + (n,))
    return subordinated_gaussian(alpha, v, w, g)
