"""File formats: model JSON, pair-dataset CSV with a JSON sidecar, result JSON."""

import json
import os

import numpy as np

from .levy_estimator import LevyEstimate
from .simulator import ModelError, ModelSpec, PairDataset
from .sparse_regression import Dictionary, SparseFit


class FormatError(ValueError):
    pass


# models ------------------------------------------------------------------------------


def load_model(path):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ModelError("/: model must be a JSON object")
    return ModelSpec.from_dict(d)


def save_model(model, path):
    write_json(model.to_dict(), path)


# datasets ----------------------------------------------------------------------------


def sidecar_path(path):
    return os.path.splitext(path)[0] + ".json"


def save_dataset(data, path):
    """CSV with header z_1..z_n,x_1..x_n (17 significant digits) plus a metadata sidecar."""
    n = data.n
    header = ",".join([f"z_{i}" for i in range(1, n + 1)] + [f"x_{i}" for i in range(1, n + 1)])
    np.savetxt(path, np.hstack([data.Z, data.X]), delimiter=",", fmt="%.17g", header=header,
               comments="")
    meta = {"n": n, "M": data.M, "h": data.h, "seed": data.seed,
            "model_fingerprint": data.model_fingerprint}
    write_json(meta, sidecar_path(path))


def _locate_bad_line(path, width):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if lineno == 1:
                continue
            fields = line.rstrip("\n").split(",")
            if len(fields) != width:
                return lineno, f"expected {width} fields, found {len(fields)}"
            try:
                [float(f) for f in fields]
            except ValueError:
                return lineno, "non-numeric field"
    return None, "unreadable data"


def load_dataset(path):
    meta_path = sidecar_path(path)
    meta = {}
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if len(header) % 2 or not header[0]:
        raise FormatError(f"{path}: line 1: header must list z_1..z_n,x_1..x_n")
    n = len(header) // 2
    expected = [f"z_{i}" for i in range(1, n + 1)] + [f"x_{i}" for i in range(1, n + 1)]
    if header != expected:
        raise FormatError(f"{path}: line 1: header must be {','.join(expected)}")
    if "n" in meta and meta["n"] != n:
        raise FormatError(f"{path}: sidecar says n={meta['n']} but the header has n={n}")
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError:
        lineno, why = _locate_bad_line(path, 2 * n)
        raise FormatError(f"{path}: line {lineno}: {why}") from None
    if table.shape[0] == 0:
        table = table.reshape(0, 2 * n)
    if table.shape[1] != 2 * n:
        raise FormatError(f"{path}: expected {2 * n} columns, found {table.shape[1]}")
    if "M" in meta and meta["M"] != table.shape[0]:
        raise FormatError(f"{path}: line {table.shape[0] + 2}: sidecar declares M={meta['M']} "
                          f"rows but the file has {table.shape[0]} (truncated?)")
    if "h" not in meta:
        raise FormatError(f"{meta_path}: /h: required key missing")
    return PairDataset(table[:, :n], table[:, n:], float(meta["h"]), seed=meta.get("seed"),
                       model_fingerprint=meta.get("model_fingerprint"))


# results -----------------------------------------------------------------------------


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _fit_to_dict(fit):
    d = {"coefficients": [float(c) for c in fit.coefficients],
         "support": list(fit.support), "residual": float(fit.residual)}
    if fit.cv_path is not None:
        d["cv_path"] = [[int(q), float(s)] for q, s in fit.cv_path]
    return d


def _fit_from_dict(d):
    cv = d.get("cv_path")
    return SparseFit(np.array(d["coefficients"], dtype=float), tuple(d["support"]),
                     float(d["residual"]), None if cv is None else [(int(q), float(s)) for q, s in cv])


def _dictionary_to_dict(dictionary):
    if dictionary.exponents is not None:
        return {"n": dictionary.n, "basis": dictionary.names(),
                "exponents": [list(e) for e in dictionary.exponents]}
    return {"n": dictionary.n, "basis": dictionary.names()}


def _dictionary_from_dict(d):
    if "exponents" in d:
        return Dictionary(d["n"], exponents=tuple(tuple(e) for e in d["exponents"]))
    return Dictionary.from_strings(d["n"], d["basis"])


def levy_to_dict(est):
    bins = []
    for i, per_nc in enumerate(est.sigma_bins):
        for Nc in sorted(per_nc):
            pts = per_nc[Nc]
            bins.append({"dim": i + 1, "Nc": Nc, "midpoints": [p[0] for p in pts],
                         "values": [p[1] for p in pts]})
    out = {"alpha": list(est.alpha), "beta": list(est.beta), "sigma_bins": bins}
    if est.sigma_fit:
        out["sigma_dictionary"] = _dictionary_to_dict(est.sigma_dictionary)
        out["sigma_fit"] = [dict(_fit_to_dict(f), dim=i + 1, basis=est.sigma_dictionary.names())
                            for i, f in enumerate(est.sigma_fit)]
    return out


def levy_from_dict(d):
    n = len(d["alpha"])
    bins = [dict() for _ in range(n)]
    for b in d["sigma_bins"]:
        bins[b["dim"] - 1][b["Nc"]] = list(zip(b["midpoints"], b["values"]))
    fits, dictionary = [], None
    if "sigma_fit" in d:
        dictionary = _dictionary_from_dict(d["sigma_dictionary"])
        fits = [_fit_from_dict(f) for f in sorted(d["sigma_fit"], key=lambda f: f["dim"])]
    return LevyEstimate(list(d["alpha"]), list(d["beta"]), bins, fits, dictionary)


def drift_to_dict(fit):
    return {"dictionary": _dictionary_to_dict(fit.dictionary), "basis": fit.dictionary.names(),
            "M": fit.M, "M_hat": fit.M_hat,
            "coefficients": {str(i + 1): _fit_to_dict(f) for i, f in enumerate(fit.drift)}}


def diffusion_to_dict(fit):
    return {"dictionary": _dictionary_to_dict(fit.dictionary), "basis": fit.dictionary.names(),
            "M": fit.M, "M_hat": fit.M_hat,
            "coefficients": {f"{i + 1},{j + 1}": _fit_to_dict(f)
                             for (i, j), f in sorted(fit.diffusion.items())}}


def fits_from_dicts(drift=None, diffusion=None):
    """Rebuild a :class:`~levykm.learner.DriftDiffusionFit` from result dictionaries."""
    from .learner import DriftDiffusionFit

    src = drift if drift is not None else diffusion
    out = DriftDiffusionFit(_dictionary_from_dict(src["dictionary"]), M=src["M"], M_hat=src["M_hat"])
    if drift is not None:
        keys = sorted(drift["coefficients"], key=int)
        out.drift = [_fit_from_dict(drift["coefficients"][k]) for k in keys]
    if diffusion is not None:
        for key, f in diffusion["coefficients"].items():
            i, j = (int(s) - 1 for s in key.split(","))
            out.diffusion[(i, j)] = _fit_from_dict(f)
    return out

