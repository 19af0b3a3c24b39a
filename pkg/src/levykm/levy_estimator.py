"""Estimation of the stable jump law and the noise intensity from pair data.

For each coordinate i the increments y = x_i - z_i are binned by z_i and
counted on the geometric intervals [m^k eps, m^(k+1) eps) and their mirror
images.  The expected count in bin l and interval k is

    h M_l sigma_l^alpha k_alpha (1 +/- beta) alpha^-1 eps^-alpha m^(-k alpha) (1 - m^-alpha) / 2

and alpha, beta and sigma_l are recovered in closed form from the counts.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .stable import isotropic_kernel_constant, stable_kernel_constant, unit_sphere_area


class EstimationError(RuntimeError):
    pass


class EstimationWarning(UserWarning):
    pass


@dataclass
class EstimationConfig:
    epsilon: float = 0.5
    m: float = 5.0
    N: int = 1
    Nc_list: tuple = tuple(range(10, 26))
    z_min: object = None
    z_max: object = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.m <= 1:
            raise ValueError("m must exceed 1")
        if self.N < 1 or int(self.N) != self.N:
            raise ValueError("N must be a positive integer")
        if not self.Nc_list or any(int(c) != c or c < 1 for c in self.Nc_list):
            raise ValueError("every Nc must be a positive integer")
        self.Nc_list = tuple(int(c) for c in self.Nc_list)

    def edges(self):
        return self.epsilon * self.m ** np.arange(self.N + 2, dtype=float)

    def window(self, i, data=None):
        """Estimation window [z_min, z_max] for coordinate ``i`` (0-based).

        Scalar bounds apply to every coordinate."""
        if self.z_min is not None and self.z_max is not None:
            lo = self.z_min if np.ndim(self.z_min) == 0 else self.z_min[i]
            hi = self.z_max if np.ndim(self.z_max) == 0 else self.z_max[i]
            return float(lo), float(hi)
        if data is None:
            raise ValueError("no estimation window configured")
        col = data.Z[:, i]
        return float(col.min()), float(col.max())

    def check_epsilon(self, h):
        lo, hi = 10.0 * math.sqrt(h), 50.0 * math.sqrt(h)
        if not lo <= self.epsilon <= hi:
            warnings.warn(
                f"epsilon={self.epsilon} outside the recommended band "
                f"[{lo:.4g}, {hi:.4g}] (10 to 50 times sqrt(h))", EstimationWarning, stacklevel=2)
            return False
        return True


@dataclass
class JumpCounts:
    """Event counts for one coordinate and one bin count ``Nc``.

    ``n_plus[k, l]`` / ``n_minus[k, l]`` count increments in the k-th positive /
    negative interval for z-bin l.  Counts may be fractional when injected.
    """

    dim: int
    Nc: int
    midpoints: np.ndarray
    M_l: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray
    epsilon: float
    m: float

    @property
    def N(self):
        return self.n_plus.shape[0] - 1

    def swapped(self):
        return JumpCounts(self.dim, self.Nc, self.midpoints, self.M_l, self.n_minus,
                          self.n_plus, self.epsilon, self.m)

    def scaled(self, factor):
        return JumpCounts(self.dim, self.Nc, self.midpoints, self.M_l, self.n_plus * factor,
                          self.n_minus * factor, self.epsilon, self.m)


def bin_index(values, lo, hi, Nc):
    """Half-open equal-width bin of each value; the last bin is closed at ``hi``.

    Values outside [lo, hi] get index -1.
    """
    width = (hi - lo) / Nc
    idx = np.floor((values - lo) / width).astype(np.int64)
    idx = np.where(values == hi, Nc - 1, idx)
    idx = np.minimum(idx, Nc - 1)
    return np.where((values < lo) | (values > hi), -1, idx)


def interval_index(y, edges):
    """Index k with edges[k] <= y < edges[k+1] (positive side) or
    -edges[k+1] <= y < -edges[k] (negative side); -1 when in neither."""
    last = len(edges) - 2
    kp = np.searchsorted(edges, y, side="right") - 1
    kp = np.where((kp >= 0) & (kp <= last), kp, -1)
    kn = np.searchsorted(edges, -y, side="left") - 1
    kn = np.where((kn >= 0) & (kn <= last), kn, -1)
    return kp, kn


def count_jump_events(data, i, Nc, cfg):
    """Tally geometric-interval jump events of coordinate ``i`` (1-based) per z-bin."""
    if data.M == 0:
        raise EstimationError("empty dataset")
    if not 1 <= i <= data.n:
        raise ValueError(f"dimension index {i} outside 1..{data.n}")
    if Nc > data.M:
        warnings.warn(f"Nc={Nc} exceeds the number of rows {data.M}", EstimationWarning, stacklevel=2)
    lo, hi = cfg.window(i - 1, data)
    z = data.Z[:, i - 1]
    y = data.X[:, i - 1] - z
    return _tally(z, y, lo, hi, Nc, cfg, dim=i)


def _tally(z, y, lo, hi, Nc, cfg, dim):
    l = bin_index(z, lo, hi, Nc)
    keep = l >= 0
    l, y = l[keep], y[keep]
    N = cfg.N
    M_l = np.bincount(l, minlength=Nc).astype(float)
    kp, kn = interval_index(y, cfg.edges())
    pos = kp >= 0
    neg = kn >= 0
    n_plus = np.bincount(kp[pos] * Nc + l[pos], minlength=(N + 1) * Nc).reshape(N + 1, Nc)
    n_minus = np.bincount(kn[neg] * Nc + l[neg], minlength=(N + 1) * Nc).reshape(N + 1, Nc)
    width = (hi - lo) / Nc
    mids = lo + (np.arange(Nc) + 0.5) * width
    return JumpCounts(dim, Nc, mids, M_l, n_plus.astype(float), n_minus.astype(float),
                      cfg.epsilon, cfg.m)


def _rate_sums(counts, combine):
    occupied = counts.M_l > 0
    per = combine(counts)[:, occupied] / counts.M_l[occupied]
    return per.sum(axis=1)


def _alpha_from_sums(sums_list, m, clamp=(0.05, 1.95)):
    values = []
    for sums in sums_list:
        for k in range(1, len(sums)):
            if sums[0] > 0 and sums[k] > 0:
                values.append(math.log(sums[0] / sums[k]) / (k * math.log(m)))
    if not values:
        raise EstimationError("no usable jump counts for alpha (all interval sums vanish)")
    alpha = float(np.mean(values))
    lo, hi = clamp
    if not lo < alpha < hi:
        warnings.warn(f"alpha estimate {alpha:.4f} clamped to ({lo}, {hi})", EstimationWarning,
                      stacklevel=3)
        alpha = min(max(alpha, lo), hi)
    return alpha


def estimate_alpha(counts_list):
    """Stability index from the ratio of the k = 0 to the k-th interval rates, averaged
    over every (Nc, k) in the sweep."""
    if isinstance(counts_list, JumpCounts):
        counts_list = [counts_list]
    sums = [_rate_sums(c, lambda c: c.n_plus + c.n_minus) for c in counts_list]
    return _alpha_from_sums(sums, counts_list[0].m)


def estimate_beta(counts_list):
    """Skewness (1 - rho) / (1 + rho) with rho the pooled negative/positive rate ratio."""
    if isinstance(counts_list, JumpCounts):
        counts_list = [counts_list]
    neg = sum(_rate_sums(c, lambda c: c.n_minus).sum() for c in counts_list)
    pos = sum(_rate_sums(c, lambda c: c.n_plus).sum() for c in counts_list)
    if pos <= 0:
        if neg <= 0:
            raise EstimationError("no jump events: beta undefined")
        warnings.warn("no positive jumps observed; beta set to -1", EstimationWarning, stacklevel=2)
        return -1.0
    rho = neg / pos
    return float(min(max((1.0 - rho) / (1.0 + rho), -1.0), 1.0))


def sigma_from_rate(total, M_l, alpha, h, epsilon, m, N, constant):
    """Invert the summed expected count for the intensity sigma_l."""
    denom = constant * h * M_l * (1.0 - m ** (-(N + 1) * alpha))
    return (alpha * epsilon ** alpha * total / denom) ** (1.0 / alpha)


def estimate_sigma_bins(counts, alpha_hat, h, cfg=None):
    """Per-bin noise intensities as a list of ``(midpoint, sigma)``; empty bins omitted."""
    if not 0.0 < alpha_hat < 2.0:
        raise ValueError("alpha_hat must lie in (0, 2)")
    if h <= 0:
        raise ValueError("h must be positive")
    eps = counts.epsilon if cfg is None else cfg.epsilon
    m = counts.m if cfg is None else cfg.m
    k_alpha = stable_kernel_constant(alpha_hat)
    total = (counts.n_plus + counts.n_minus).sum(axis=0)
    out = []
    skipped = 0
    for l in range(counts.Nc):
        if counts.M_l[l] <= 0 or total[l] <= 0:
            skipped += 1
            continue
        s = sigma_from_rate(total[l], counts.M_l[l], alpha_hat, h, eps, m, counts.N, k_alpha)
        out.append((float(counts.midpoints[l]), float(s)))
    if skipped:
        warnings.warn(f"dimension {counts.dim}, Nc={counts.Nc}: {skipped} bin(s) without data "
                      "or jump events omitted", EstimationWarning, stacklevel=2)
    return out


def expected_counts(alpha, beta, sigma, M_l, h, epsilon, m, N):
    """Exact expected (n_plus, n_minus) arrays of shape (N+1, len(sigma)).

    Used to inject noiseless counts into the estimators.
    """
    sigma = np.asarray(sigma, dtype=float)
    M_l = np.broadcast_to(np.asarray(M_l, dtype=float), sigma.shape)
    k = np.arange(N + 1)[:, None]
    base = (h * M_l * sigma ** alpha * stable_kernel_constant(alpha) / alpha
            * epsilon ** (-alpha) * m ** (-k * alpha) * (1.0 - m ** (-alpha)) / 2.0)
    return base * (1.0 + beta), base * (1.0 - beta)


@dataclass
class LevyEstimate:
    """Estimated jump law per dimension.

    ``sigma_bins[i]`` maps Nc to the list of (midpoint, sigma) pairs;
    ``sigma_fit[i]`` is a :class:`~levykm.sparse_regression.SparseFit` over
    ``sigma_dictionary`` (a univariate dictionary) or ``None``.
    """

    alpha: list
    beta: list
    sigma_bins: list
    sigma_fit: list = field(default_factory=list)
    sigma_dictionary: object = None

    @property
    def n(self):
        return len(self.alpha)

    def sigma_points(self, i):
        """All (midpoint, sigma) pairs of dimension ``i`` (0-based) pooled over Nc."""
        pts = [p for Nc in sorted(self.sigma_bins[i]) for p in self.sigma_bins[i][Nc]]
        return np.array(pts, dtype=float).reshape(-1, 2)

    def sigma_function(self, i):
        """Vectorized fitted intensity for dimension ``i`` (0-based)."""
        fit = self.sigma_fit[i]
        dictionary = self.sigma_dictionary

        def f(x):
            x = np.asarray(x, dtype=float).reshape(-1, 1)
            return dictionary.evaluate(x) @ fit.coefficients

        return f


def estimate_levy(data, cfg, h=None, fit=True, fit_options=None):
    """Full jump-law stage: alpha, beta, per-bin sigma and the fitted sigma functions."""
    from .sparse_regression import build_dictionary

    h = data.h if h is None else h
    cfg.check_epsilon(h)
    alphas, betas, bins, fits = [], [], [], []
    dictionary = build_dictionary(1, (fit_options or {}).get("degree", 4))
    for i in range(1, data.n + 1):
        counts = [count_jump_events(data, i, Nc, cfg) for Nc in cfg.Nc_list]
        a = estimate_alpha(counts)
        b = estimate_beta(counts)
        per_nc = {c.Nc: estimate_sigma_bins(c, a, h, cfg) for c in counts}
        alphas.append(a)
        betas.append(b)
        bins.append(per_nc)
    est = LevyEstimate(alphas, betas, bins, [], dictionary)
    if fit:
        opts = dict(fit_options or {})
        opts.pop("degree", None)
        for i in range(data.n):
            pts = est.sigma_points(i)
            est.sigma_fit.append(fit_sigma_function(pts, dictionary, **opts))
    return est


def fit_sigma_function(points, dictionary, method="ssr", kcv=5, seed=0, lam=0.05,
                       tau_flat=1.25, tau_jump=2.0):
    """Sparse regression of pooled (midpoint, sigma) pairs on a univariate dictionary."""
    from .sparse_regression import fit_sparse

    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if points.shape[0] < dictionary.K:
        raise EstimationError(f"need at least {dictionary.K} sigma values, got {points.shape[0]}")
    A = dictionary.evaluate(points[:, :1])
    fit = fit_sparse(A, points[:, 1], method=method, kcv=kcv, seed=seed, lam=lam,
                     tau_flat=tau_flat, tau_jump=tau_jump)
    grid = np.linspace(points[:, 0].min(), points[:, 0].max(), 201).reshape(-1, 1)
    if np.any(dictionary.evaluate(grid) @ fit.coefficients <= 0):
        warnings.warn("fitted sigma function is not positive on the data range",
                      EstimationWarning, stacklevel=2)
    return fit


# rotationally symmetric noise -------------------------------------------------------


def isotropic_constant(n, alpha):
    """Surface-integrated jump constant S_{n-1} c(n, alpha)."""
    return unit_sphere_area(n) * isotropic_kernel_constant(n, alpha)


def count_isotropic_events(data, Nc, cfg, z_max):
    """Radial counts: rows binned by |z| on [0, z_max), events by |x - z|."""
    r = np.linalg.norm(data.Z, axis=1)
    y = np.linalg.norm(data.X - data.Z, axis=1)
    inside = r < z_max
    counts = _tally(r[inside], y[inside], 0.0, z_max, Nc, cfg, dim=0)
    return counts


def estimate_isotropic(data, cfg, Nc, h=None, z_max=None):
    """Isotropic alpha and radial intensities ``[(midpoint, sigma), ...]``."""
    h = data.h if h is None else h
    if z_max is None:
        z_max = cfg.z_max[0] if cfg.z_max is not None else float(np.linalg.norm(data.Z, axis=1).max()) * (1 + 1e-12)
    counts = count_isotropic_events(data, Nc, cfg, z_max)
    return estimate_isotropic_from_counts(counts, h, data.n)


def estimate_isotropic_from_counts(counts, h, n):
    # radial counts live in n_plus; n_minus stays zero
    total = counts.n_plus + counts.n_minus
    if total.sum() <= 0:
        raise EstimationError("no jump events outside epsilon")
    sums = _rate_sums(counts, lambda c: c.n_plus + c.n_minus)
    alpha = _alpha_from_sums([sums], counts.m)
    const = isotropic_constant(n, alpha)
    by_bin = total.sum(axis=0)
    out = []
    for l in range(counts.Nc):
        if counts.M_l[l] > 0 and by_bin[l] > 0:
            s = sigma_from_rate(by_bin[l], counts.M_l[l], alpha, h, counts.epsilon, counts.m,
                                counts.N, const)
            out.append((float(counts.midpoints[l]), float(s)))
    return alpha, out


def expected_isotropic_counts(n, alpha, sigma, M_l, h, epsilon, m, N):
    """Exact expected radial counts, shape (N+1, len(sigma))."""
    sigma = np.asarray(sigma, dtype=float)
    M_l = np.broadcast_to(np.asarray(M_l, dtype=float), sigma.shape)
    k = np.arange(N + 1)[:, None]
    return (h * M_l * isotropic_constant(n, alpha) * sigma ** alpha / alpha
            * epsilon ** (-alpha) * m ** (-k * alpha) * (1.0 - m ** (-alpha)))
