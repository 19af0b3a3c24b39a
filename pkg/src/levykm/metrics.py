"""Error measures against a known generating model."""

from dataclasses import asdict, dataclass

import numpy as np

from .exprlang import evaluate_array


@dataclass
class ErrorReport:
    """Per-dimension errors.

    e_alpha, e_beta: absolute parameter errors.
    e_sigma: mean absolute error of the per-bin intensities over every bin of
    the sweep, divided by max |sigma| on the domain.
    e_sr: RMS error of the fitted intensity function on a uniform grid,
    divided by max |sigma|; ``None`` without a fit.
    """

    e_alpha: list
    e_beta: list
    e_sigma: list
    e_sr: list

    def to_dict(self):
        return asdict(self)


def _true_sigma(truth, i, x):
    pts = np.zeros((len(x), truth.n))
    pts[:, i] = x
    return evaluate_array(truth.sigma[i], pts)


def compute_error_metrics(levy, truth, grid_points=1001):
    """Compare a :class:`~levykm.levy_estimator.LevyEstimate` with the true model."""
    if truth.levy is None:
        raise ValueError("the true model has no jump noise")
    e_a, e_b, e_s, e_sr = [], [], [], []
    for i in range(truth.n):
        lo, hi = truth.domain[i]
        grid = np.linspace(lo, hi, grid_points)
        true_grid = _true_sigma(truth, i, grid)
        scale = float(np.max(np.abs(true_grid)))
        e_a.append(abs(levy.alpha[i] - truth.levy[i].alpha))
        e_b.append(abs(levy.beta[i] - truth.levy[i].beta))
        pts = levy.sigma_points(i)
        if len(pts):
            err = np.abs(pts[:, 1] - _true_sigma(truth, i, pts[:, 0]))
            e_s.append(float(np.mean(err)) / scale)
        else:
            e_s.append(float("nan"))
        if levy.sigma_fit:
            fitted = levy.sigma_function(i)(grid)
            e_sr.append(float(np.sqrt(np.mean((fitted - true_grid) ** 2))) / scale)
        else:
            e_sr.append(None)
    return ErrorReport(e_a, e_b, e_s, e_sr)
