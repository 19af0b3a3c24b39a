"""Sparse learning of the drift vector and diffusion matrix from pair data.

Increments inside the cube |x_i - z_i| <= eps (all i) carry the drift and
diffusion information.  After the small-jump corrections R and S are
subtracted, each drift component and each diffusion entry is a linear
regression on a polynomial dictionary:

    B_i  = (M_hat / M) h^-1 dx_i         - R_i(z)
    B_ij = (M_hat / M) h^-1 dx_i dx_j    - S_ii(z) [i == j]
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .corrections import CorrectionInput, diffusion_correction, drift_correction
from .simulator import PairDataset
from .sparse_regression import (BinPreprocessConfig, bin_preprocess, build_dictionary,
                                fit_sparse)

METHODS = ("auto", "sindy", "ssr", "ssr-bin")


class LearnerError(RuntimeError):
    pass


class LearnerWarning(UserWarning):
    pass


@dataclass
class LearnConfig:
    """Settings of the drift/diffusion stage.

    ``method='auto'`` uses SSR with cross-validation on binned data for
    n <= 3 and SINDy otherwise.  ``Q`` gives the per-coordinate bin counts
    for binning (default: ``bins_per_dim`` in every coordinate, or about
    ``total_bins`` bins overall when that is unset) and ``bounds`` the
    binning box (default: data range).
    """

    epsilon: float = 1.0
    method: str = "auto"
    degree: int = 3
    Q: tuple = None
    bins_per_dim: int = None
    total_bins: int = 64
    bounds: tuple = None
    kcv: int = 5
    seed: int = 0
    lam: float = 0.05
    tau_flat: float = 1.25
    tau_jump: float = 2.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.degree < 0:
            raise ValueError("degree must be >= 0")

    def resolved_method(self, n):
        method = self.method
        if method == "auto":
            method = "ssr-bin" if n <= 3 else "sindy"
        if method == "ssr-bin" and n > 3:
            raise ValueError("binning is limited to n <= 3")
        return method

    def bin_config(self, n):
        if self.Q is not None:
            Q = tuple(self.Q)
        else:
            per = self.bins_per_dim or max(1, round(self.total_bins ** (1.0 / n)))
            Q = (per,) * n
        return BinPreprocessConfig(Q, bounds=self.bounds)


@dataclass
class DriftDiffusionFit:
    """Learned coefficients: ``drift[i]`` and ``diffusion[(i, j)]`` for i <= j (0-based)."""

    dictionary: object
    drift: list = field(default_factory=list)
    diffusion: dict = field(default_factory=dict)
    M: int = 0
    M_hat: int = 0

    @property
    def prob_ratio(self):
        return self.M_hat / self.M if self.M else float("nan")

    def drift_function(self, i):
        c = self.drift[i].coefficients
        return lambda x: self.dictionary.evaluate(np.atleast_2d(x)) @ c

    def diffusion_function(self, i, j):
        key = (min(i, j), max(i, j))
        c = self.diffusion[key].coefficients
        return lambda x: self.dictionary.evaluate(np.atleast_2d(x)) @ c


def filter_small_increments(data, epsilon):
    """Rows whose increment lies in the cube [-eps, eps]^n, and their count."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    keep = np.all(np.abs(data.X - data.Z) <= epsilon, axis=1)
    M_hat = int(keep.sum())
    if M_hat == 0:
        raise LearnerError(f"no increments inside the cube of half-width {epsilon}")
    out = PairDataset(data.Z[keep], data.X[keep], data.h, seed=data.seed,
                      model_fingerprint=data.model_fingerprint)
    return out, M_hat


def _sigma_at(levy, i, z):
    """Fitted intensity of dimension ``i`` (0-based) at the rows of ``z``; None without jumps."""
    if levy is None:
        return None
    return levy.sigma_function(i)(z[:, i])


@dataclass
class TargetParts:
    """Pieces of a regression target: ``B = factor * raw - correction`` on ``rows``."""

    factor: float
    raw: np.ndarray
    correction: np.ndarray
    rows: np.ndarray

    @property
    def B(self):
        return self.factor * self.raw - self.correction


def _usable(sig, i):
    ok = sig > 0
    if not np.all(ok):
        warnings.warn(f"fitted sigma_{i + 1} is not positive on {int((~ok).sum())} row(s); "
                      "those rows are dropped", LearnerWarning, stacklevel=3)
    return ok


def drift_target_parts(filtered, M, levy, i, epsilon):
    """Target decomposition for drift component ``i`` (0-based)."""
    dx = filtered.X[:, i] - filtered.Z[:, i]
    factor = filtered.M / M
    raw = dx / filtered.h
    rows = np.ones(filtered.M, dtype=bool)
    corr = np.zeros(filtered.M)
    sig = _sigma_at(levy, i, filtered.Z)
    if sig is not None:
        rows = _usable(sig, i)
        safe = np.where(rows, sig, 1.0)
        corr = drift_correction(CorrectionInput(levy.alpha[i], levy.beta[i], safe, epsilon))
        corr = np.broadcast_to(corr, safe.shape)
    return TargetParts(factor, raw[rows], np.asarray(corr)[rows], np.flatnonzero(rows))


def diffusion_target_parts(filtered, M, levy, i, j, epsilon):
    """Target decomposition for diffusion entry (i, j), i <= j (0-based)."""
    if i > j:
        raise ValueError("need i <= j")
    d = filtered.X - filtered.Z
    factor = filtered.M / M
    raw = d[:, i] * d[:, j] / filtered.h
    rows = np.ones(filtered.M, dtype=bool)
    corr = np.zeros(filtered.M)
    sig = _sigma_at(levy, i, filtered.Z) if i == j else None
    if sig is not None:
        rows = _usable(sig, i)
        safe = np.where(rows, sig, 1.0)
        corr = np.broadcast_to(
            diffusion_correction(CorrectionInput(levy.alpha[i], 0.0, safe, epsilon)), safe.shape)
    return TargetParts(factor, raw[rows], np.asarray(corr)[rows], np.flatnonzero(rows))


def assemble_drift_system(filtered, M, levy, dictionary, i, epsilon):
    """Design matrix and target of drift component ``i`` (0-based)."""
    parts = drift_target_parts(filtered, M, levy, i, epsilon)
    A = dictionary.evaluate(filtered.Z[parts.rows])
    return A, parts.B


def assemble_diffusion_system(filtered, M, levy, dictionary, i, j, epsilon):
    """Design matrix and target of diffusion entry (i, j), i <= j (0-based)."""
    parts = diffusion_target_parts(filtered, M, levy, i, j, epsilon)
    A = dictionary.evaluate(filtered.Z[parts.rows])
    return A, parts.B


def _solve(points, A, B, dictionary, cfg, n):
    method = cfg.resolved_method(n)
    if method == "ssr-bin":
        A, B = bin_preprocess(points, B, dictionary, cfg.bin_config(n))
        method = "ssr"
    return fit_sparse(A, B, method=method, kcv=cfg.kcv, seed=cfg.seed, lam=cfg.lam,
                      tau_flat=cfg.tau_flat, tau_jump=cfg.tau_jump)


def _prepare(data, cfg, dictionary):
    if dictionary is None:
        dictionary = build_dictionary(data.n, cfg.degree)
    filtered, M_hat = filter_small_increments(data, cfg.epsilon)
    return dictionary, filtered, M_hat


def learn_drift(data, levy, cfg, dictionary=None):
    """Per-dimension sparse drift fits; returns a :class:`DriftDiffusionFit`.

    ``levy=None`` disables the jump corrections (pure diffusion data).
    """
    dictionary, filtered, M_hat = _prepare(data, cfg, dictionary)
    out = DriftDiffusionFit(dictionary, M=data.M, M_hat=M_hat)
    for i in range(data.n):
        parts = drift_target_parts(filtered, data.M, levy, i, cfg.epsilon)
        pts = filtered.Z[parts.rows]
        out.drift.append(_solve(pts, dictionary.evaluate(pts), parts.B, dictionary, cfg, data.n))
    return out


def learn_diffusion(data, levy, cfg, dictionary=None, into=None):
    """Sparse fits of a_ij for every unordered pair i <= j (0-based keys)."""
    dictionary, filtered, M_hat = _prepare(data, cfg, dictionary)
    out = into if into is not None else DriftDiffusionFit(dictionary, M=data.M, M_hat=M_hat)
    for i in range(data.n):
        for j in range(i, data.n):
            parts = diffusion_target_parts(filtered, data.M, levy, i, j, cfg.epsilon)
            pts = filtered.Z[parts.rows]
            out.diffusion[(i, j)] = _solve(pts, dictionary.evaluate(pts), parts.B, dictionary,
                                           cfg, data.n)
    return out


def learn_drift_diffusion(data, levy, cfg, dictionary=None):
    fit = learn_drift(data, levy, cfg, dictionary)
    return learn_diffusion(data, levy, cfg, fit.dictionary, into=fit)
