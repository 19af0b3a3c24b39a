"""End-to-end runs (simulate, estimate the jump law, learn drift and diffusion)
and the error-scan experiment driver."""

import csv
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import io
from .learner import LearnConfig, learn_diffusion, learn_drift
from .levy_estimator import EstimationConfig, estimate_levy
from .metrics import compute_error_metrics
from .simulator import ModelSpec, generate_pairs, generate_trajectories

SCAN_MODES = ("M", "Mh-fixed", "h")


class PipelineError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    """Everything one pipeline run needs.

    Data come from ``data`` (a dataset CSV) when given, otherwise from
    simulating ``model``: ``M`` fresh uniform pairs, or ``M0`` trajectories of
    duration ``T`` when ``M0`` is set.
    """

    model: object = None
    data: str = None
    M: int = 10 ** 6
    h: float = 1e-3
    seed: int = 0
    M0: int = None
    T: float = None
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    learn: LearnConfig = field(default_factory=LearnConfig)
    sigma_fit: dict = field(default_factory=lambda: {"method": "ssr", "degree": 4})
    out: str = None
    save_data: bool = True
    workers: int = 1

    def resolved_model(self):
        if self.model is None or isinstance(self.model, ModelSpec):
            return self.model
        return io.load_model(self.model)

    def validate(self):
        if self.model is None and self.data is None:
            raise ValueError("give a model or a dataset")
        if self.data is not None and not os.path.exists(self.data):
            raise ValueError(f"dataset {self.data} does not exist")
        if isinstance(self.model, str) and not os.path.exists(self.model):
            raise ValueError(f"model file {self.model} does not exist")
        if self.data is None:
            if self.M0 is None and (self.M is None or self.M < 1):
                raise ValueError("M must be >= 1")
            if self.M0 is not None and (self.M0 < 1 or self.T is None or self.T < self.h):
                raise ValueError("trajectory mode needs M0 >= 1 and T >= h")
            if self.h <= 0:
                raise ValueError("h must be positive")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
        raise PipelineError(name, exc) from exc


def _window(cfg, model):
    """Default the estimation window to the model domain."""
    est = cfg.estimation
    if model is not None and (est.z_min is None or est.z_max is None):
        est = replace(est, z_min=tuple(b[0] for b in model.domain),
                      z_max=tuple(b[1] for b in model.domain))
    return est


def simulate(model, cfg):
    if cfg.M0 is not None:
        return generate_trajectories(model, cfg.M0, cfg.T, cfg.h, cfg.seed, workers=cfg.workers)
    return generate_pairs(model, cfg.M, cfg.h, cfg.seed, workers=cfg.workers)


def run_pipeline(cfg):
    """Run all stages and write levy.json, drift.json, diffusion.json, report.json.

    Returns a dict with the dataset, the estimates and the error report.
    """
    _stage("validate", cfg.validate)
    model = _stage("load-model", cfg.resolved_model)
    if cfg.data is not None:
        data = _stage("load-data", io.load_dataset, cfg.data)
    else:
        data = _stage("simulate", simulate, model, cfg)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        if cfg.save_data and cfg.data is None:
            _stage("save-data", io.save_dataset, data, os.path.join(cfg.out, "data.csv"))
        if model is not None:
            io.save_model(model, os.path.join(cfg.out, "model.json"))
    est_cfg = _window(cfg, model)
    levy = _stage("estimate-levy", estimate_levy, data, est_cfg, fit=True,
                  fit_options=dict(cfg.sigma_fit))
    fits = _stage("learn-drift", learn_drift, data, levy, cfg.learn)
    fits = _stage("learn-diffusion", learn_diffusion, data, levy, cfg.learn, fits.dictionary,
                  into=fits)
    report = {"n": data.n, "M": data.M, "M_hat": fits.M_hat, "h": data.h, "seed": data.seed,
              "model_fingerprint": data.model_fingerprint}
    errors = None
    if model is not None and model.levy is not None:
        errors = compute_error_metrics(levy, model)
        report["errors"] = errors.to_dict()
    if cfg.out:
        io.write_json(io.levy_to_dict(levy), os.path.join(cfg.out, "levy.json"))
        io.write_json(io.drift_to_dict(fits), os.path.join(cfg.out, "drift.json"))
        io.write_json(io.diffusion_to_dict(fits), os.path.join(cfg.out, "diffusion.json"))
        io.write_json(report, os.path.join(cfg.out, "report.json"))
    return {"data": data, "levy": levy, "fits": fits, "errors": errors, "report": report}


def scan_settings(vary, values, M, h):
    """(M, h) pairs of an error scan.

    ``vary='M'`` varies M at fixed h; ``'Mh-fixed'`` varies M with M*h held
    at the configured product; ``'h'`` takes ``values`` as h^-1 at fixed M.
    """
    if vary == "M":
        return [(int(v), h) for v in values]
    if vary == "Mh-fixed":
        return [(int(v), M * h / int(v)) for v in values]
    if vary == "h":
        return [(M, 1.0 / float(v)) for v in values]
    raise ValueError(f"vary must be one of {SCAN_MODES}")


def error_scan(cfg, vary, values, seeds=None):
    """Jump-law errors over a grid of data sizes or time steps.

    Errors are averaged over ``seeds`` (default: the configured seed only).
    Returns one dict per value with keys mode, M, h, e_alpha_i, e_beta_i,
    e_sigma_i.
    """
    model = cfg.resolved_model()
    if model is None or model.levy is None:
        raise ValueError("error scans need a model with jump noise")
    seeds = [cfg.seed] if seeds is None else list(seeds)
    est_cfg = _window(cfg, model)
    rows = []
    for M, h in scan_settings(vary, values, cfg.M, cfg.h):
        reports = []
        for s in seeds:
            data = generate_pairs(model, M, h, s, workers=cfg.workers)
            levy = estimate_levy(data, est_cfg, fit=False)
            reports.append(compute_error_metrics(levy, model))
        row = {"mode": vary, "M": M, "h": h}
        for i in range(model.n):
            row[f"e_alpha_{i + 1}"] = float(np.mean([r.e_alpha[i] for r in reports]))
            row[f"e_beta_{i + 1}"] = float(np.mean([r.e_beta[i] for r in reports]))
            row[f"e_sigma_{i + 1}"] = float(np.mean([r.e_sigma[i] for r in reports]))
        rows.append(row)
    return rows


def scan_columns(n):
    cols = ["mode", "M", "h"]
    for i in range(1, n + 1):
        cols += [f"e_alpha_{i}", f"e_beta_{i}", f"e_sigma_{i}"]
    return cols


def write_scan_csv(rows, path, n):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=scan_columns(n))
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
