"""Candidate dictionaries and sparse linear regression engines.

Three solvers share one result type :class:`SparseFit`:

* ``least_squares``: plain minimizer of ||B - A c||^2,
* ``sindy``: sequential hard thresholding with refits,
* ``ssr_path`` + ``cross_validation_scores`` + ``select_sparsity``: greedy
  backward elimination with a K-fold score used to pick the sparsity level.

``bin_preprocess`` compresses a large low-dimensional regression into one
weighted row per occupied phase-space bin.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exprlang import evaluate_array, parse_expression, to_string


class RegressionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Dictionary:
    """Candidate functions psi_1..psi_K of an n-dimensional state.

    Either ``exponents`` (monomials, one tuple of n powers per function) or
    ``expressions`` (parsed expression trees) is set.
    """

    n: int
    exponents: tuple = None
    expressions: tuple = None

    def __post_init__(self):
        if (self.exponents is None) == (self.expressions is None):
            raise ValueError("give exactly one of exponents or expressions")
        basis = self.exponents if self.exponents is not None else tuple(map(to_string, self.expressions))
        if len(set(basis)) != len(basis):
            raise ValueError("dictionary functions must be distinct")

    @classmethod
    def from_strings(cls, n, texts):
        return cls(n, expressions=tuple(parse_expression(t) for t in texts))

    @property
    def K(self):
        return len(self.exponents if self.exponents is not None else self.expressions)

    def names(self):
        """Human-readable basis, e.g. ``['1', 'x1', 'x1^2*x2']``."""
        if self.expressions is not None:
            return [to_string(e) for e in self.expressions]
        out = []
        for powers in self.exponents:
            parts = [f"x{i + 1}" if p == 1 else f"x{i + 1}^{p}"
                     for i, p in enumerate(powers) if p > 0]
            out.append("*".join(parts) if parts else "1")
        return out

    def evaluate(self, points):
        return evaluate_dictionary(self, points)


def build_dictionary(n, degree):
    """All monomials of total degree <= ``degree`` in graded-lexicographic order."""
    if n < 1 or degree < 0:
        raise ValueError("need n >= 1 and degree >= 0")
    exponents = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            powers = [0] * n
            for i in combo:
                powers[i] += 1
            exponents.append(tuple(powers))
    return Dictionary(n, exponents=tuple(exponents))


def evaluate_dictionary(dictionary, points):
    """Matrix A with ``A[j, k] = psi_k(points[j])``."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != dictionary.n:
        raise ValueError(f"points must have shape (M, {dictionary.n})")
    M = points.shape[0]
    A = np.empty((M, dictionary.K))
    if dictionary.expressions is not None:
        for k, expr in enumerate(dictionary.expressions):
            A[:, k] = evaluate_array(expr, points) if M else 0.0
        return A
    # reuse lower powers: x^p for each coordinate up to the max degree
    top = max(max(p) for p in dictionary.exponents) if dictionary.K else 0
    powers = [np.ones((M, dictionary.n))]
    for _ in range(top):
        powers.append(powers[-1] * points)
    for k, expo in enumerate(dictionary.exponents):
        col = np.ones(M)
        for i, p in enumerate(expo):
            if p:
                col = col * powers[p][:, i]
        A[:, k] = col
    return A


@dataclass
class SparseFit:
    coefficients: np.ndarray
    support: tuple
    residual: float
    cv_path: list = field(default=None)

    @classmethod
    def from_coefficients(cls, A, B, coefficients, cv_path=None, support=None):
        c = np.asarray(coefficients, dtype=float)
        if support is None:
            support = np.flatnonzero(c)
        support = tuple(sorted(int(k) for k in support))
        r = B - A @ c
        return cls(c, support, float(r @ r), cv_path)


def least_squares(A, B):
    """Minimizer of ||B - A c||_2^2 via an SVD-based solver.

    A rank-deficient design returns the minimum-norm solution with a warning.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[1] == 0:
        return np.zeros(0)
    c, _, rank, _ = np.linalg.lstsq(A, B, rcond=None)
    if rank < A.shape[1]:
        warnings.warn(f"rank-deficient design (rank {rank} < {A.shape[1]}); "
                      "returning minimum-norm solution", RegressionWarning, stacklevel=2)
    return c


def _restricted_fit(A, B, support):
    c = np.zeros(A.shape[1])
    idx = list(support)
    if idx:
        c[idx] = least_squares(A[:, idx], B)
    return c


def _column_scale(A):
    rms = np.sqrt(np.mean(A * A, axis=0)) if A.shape[0] else np.ones(A.shape[1])
    return np.where(rms > 0, rms, 1.0)


def sindy(A, B, lam, normalize=True, max_iter=100):
    """Sequentially thresholded least squares.

    With ``normalize`` the columns are scaled to unit RMS first, so ``lam``
    is compared against coefficients of the scaled problem and is
    dimensionless.  The returned coefficients are in the original units.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    scale = _column_scale(A) if normalize else np.ones(A.shape[1])
    As = A / scale
    support = list(range(A.shape[1]))
    c = _restricted_fit(As, B, support)
    for _ in range(max_iter):
        keep = [k for k in support if abs(c[k]) >= lam]
        if keep == support:
            break
        support = keep
        c = _restricted_fit(As, B, support)
    else:
        warnings.warn("thresholding did not settle", RegressionWarning, stacklevel=2)
    if not support:
        warnings.warn("all coefficients eliminated", RegressionWarning, stacklevel=2)
    c[[k for k in range(A.shape[1]) if k not in support]] = 0.0
    return SparseFit.from_coefficients(A, B, c / scale, support=support)


def ssr_path(A, B):
    """Backward elimination path; entry q has q coefficients forced to zero.

    Entry 0 is the full least-squares fit and entry K the empty model.  Each
    step removes the smallest |c_k| of the current support (lowest index on
    ties) and refits on the rest.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    K = A.shape[1]
    if K < 1:
        raise ValueError("need at least one dictionary function")
    support = list(range(K))
    path = []
    c = _restricted_fit(A, B, support)
    path.append(SparseFit.from_coefficients(A, B, c, support=support))
    while support:
        mags = np.abs(c[support])
        drop = support[int(np.argmin(mags))]  # argmin returns first minimum
        support.remove(drop)
        c = _restricted_fit(A, B, support)
        path.append(SparseFit.from_coefficients(A, B, c, support=support))
    return path


def cv_folds(M, kcv, seed):
    """Random partition of ``range(M)`` into ``kcv`` near-equal folds."""
    if kcv < 2 or M < kcv:
        raise ValueError("need kcv >= 2 and at least kcv rows")
    order = np.random.default_rng(seed).permutation(M)
    return np.array_split(order, kcv)


def cross_validation_scores(A, B, kcv=5, seed=0, folds=None):
    """List of (q, delta_q) for the backward-elimination path.

    delta_q^2 is the average over folds of the held-out mean squared residual
    of SSR_q fitted on the remaining folds.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if folds is None:
        folds = cv_folds(A.shape[0], kcv, seed)
    K = A.shape[1]
    total = np.zeros(K + 1)
    for test in folds:
        train = np.ones(A.shape[0], dtype=bool)
        train[test] = False
        if train.sum() < K:
            warnings.warn("training fold smaller than dictionary; using minimum-norm fits",
                          RegressionWarning, stacklevel=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegressionWarning)
            path = ssr_path(A[train], B[train])
        for q, fit in enumerate(path):
            r = B[test] - A[test] @ fit.coefficients
            total[q] += (r @ r) / len(test)
    delta = np.sqrt(total / len(folds))
    return [(q, float(d)) for q, d in enumerate(delta)]


def select_sparsity(path, tau_flat=1.25, tau_jump=2.0):
    """Pick q at the abrupt rise of the score curve.

    q is the end of the initial run of steps whose score ratio stays at or
    below ``tau_flat``.  It is accepted when the run reaches the end of the
    path or the next ratio is at least ``tau_jump``; otherwise 0 is returned
    with a warning.
    """
    qs = [q for q, _ in path]
    if not qs:
        raise ValueError("empty score path")
    # scores at roundoff level (exact data) count as equal
    floor = 1e-10 * max(d for _, d in path)
    scores = [max(d, floor) for _, d in path]

    def ratio(a, b):
        if a == 0:
            return 1.0 if b == 0 else math.inf
        return b / a

    end = 0
    while end + 1 < len(scores) and ratio(scores[end], scores[end + 1]) <= tau_flat:
        end += 1
    if end == len(scores) - 1:
        return qs[end]
    if ratio(scores[end], scores[end + 1]) >= tau_jump:
        return qs[end]
    warnings.warn("no abrupt jump in the cross-validation scores; keeping the full model",
                  RegressionWarning, stacklevel=2)
    return qs[0]


def fit_sparse(A, B, method="ssr", kcv=5, seed=0, lam=0.05, tau_flat=1.25, tau_jump=2.0,
               normalize=True):
    """Dispatch to SINDy (``method='sindy'``) or SSR with cross-validation."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if method == "sindy":
        return sindy(A, B, lam, normalize=normalize)
    if method != "ssr":
        raise ValueError(f"unknown method {method!r}")
    scores = cross_validation_scores(A, B, kcv=kcv, seed=seed)
    q = select_sparsity(scores, tau_flat=tau_flat, tau_jump=tau_jump)
    fit = ssr_path(A, B)[q]
    fit.cv_path = scores
    return fit


@dataclass(frozen=True)
class BinPreprocessConfig:
    """Regular grid of ``Q[i]`` bins per coordinate.

    ``bounds`` (one (lo, hi) pair per coordinate) defaults to the data range.
    ``rows`` chooses how a bin's design row is formed: ``'mean'`` averages
    the dictionary over the bin members, ``'centroid'`` evaluates the
    dictionary at the mean member point.
    """

    Q: tuple
    bounds: tuple = None
    rows: str = "mean"

    def __post_init__(self):
        if any(int(q) < 1 for q in self.Q):
            raise ValueError("bin counts must be >= 1")
        if self.rows not in ("mean", "centroid"):
            raise ValueError("rows must be 'mean' or 'centroid'")

    @property
    def Q_total(self):
        return int(np.prod(self.Q))


def bin_assignments(points, cfg):
    """Flat bin index of every row (C order over the per-coordinate grid)."""
    points = np.asarray(points, dtype=float)
    n = points.shape[1]
    if len(cfg.Q) != n:
        raise ValueError(f"need {n} bin counts, got {len(cfg.Q)}")
    idx = np.zeros(points.shape[0], dtype=np.int64)
    for i in range(n):
        if cfg.bounds is None:
            lo, hi = points[:, i].min(), points[:, i].max()
        else:
            lo, hi = cfg.bounds[i]
        q = int(cfg.Q[i])
        width = (hi - lo) / q if hi > lo else 1.0
        k = np.floor((points[:, i] - lo) / width).astype(np.int64)
        idx = idx * q + np.clip(k, 0, q - 1)
    return idx


def bin_preprocess(points, B, dictionary, cfg):
    """Weighted bin-level regression system (W A_Q, W B_Q).

    Only occupied bins appear.  Row weights are bin count / M, and B_Q holds
    within-bin means of B.
    """
    points = np.asarray(points, dtype=float)
    B = np.asarray(B, dtype=float)
    if points.ndim != 2 or points.shape[1] > 3:
        raise ValueError("binning is limited to n <= 3")
    M = points.shape[0]
    if M == 0:
        raise ValueError("no data to bin")
    idx = bin_assignments(points, cfg)
    occupied, inverse, counts = np.unique(idx, return_inverse=True, return_counts=True)
    nb = len(occupied)

    def bin_mean(values):
        values = values.reshape(M, -1)
        sums = [np.bincount(inverse, weights=col, minlength=nb) for col in values.T]
        return np.column_stack(sums) / counts[:, None]

    if cfg.rows == "mean":
        A_Q = bin_mean(dictionary.evaluate(points))
    else:
        A_Q = dictionary.evaluate(bin_mean(points))
    B_Q = bin_mean(B)[:, 0]
    w = counts / M
    return w[:, None] * A_Q, w * B_Q
