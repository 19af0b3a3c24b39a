"""Euler-Maruyama simulation of jump-diffusion SDEs with multiplicative stable noise.

    dx = b(x) dt + Lambda(x) dB + sigma(x) o dL

Each row of a pair dataset (or each trajectory) draws from its own
counter-based stream, so datasets are reproducible under any chunking.
"""

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .exprlang import evaluate, evaluate_array, free_variables, parse_expression, to_string
from .stable import StableParams, cms_transform

CHUNK_ROWS = 1 << 16


class ModelError(ValueError):
    pass


def _parse(item, where):
    try:
        return parse_expression(str(item)) if not isinstance(item, (int, float)) else parse_expression(repr(float(item)))
    except ValueError as exc:
        raise ModelError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class ModelSpec:
    """Generative description of an SDE.

    ``sigma`` and ``levy`` may be ``None`` for a model without jump noise;
    ``diffusion_factor`` may be ``None`` for a model without Brownian noise.
    """

    n: int
    drift: tuple
    diffusion_factor: tuple = None
    sigma: tuple = None
    levy: tuple = None
    domain: tuple = None
    name: str = ""
    check_grid: int = field(default=101, repr=False, compare=False)

    def __post_init__(self):
        n = self.n
        if n < 1:
            raise ModelError("n must be >= 1")
        if len(self.drift) != n:
            raise ModelError(f"/drift: expected {n} expressions, got {len(self.drift)}")
        if self.diffusion_factor is not None:
            if len(self.diffusion_factor) != n or any(len(r) != n for r in self.diffusion_factor):
                raise ModelError(f"/diffusion_factor: expected a {n}x{n} matrix")
        if (self.sigma is None) != (self.levy is None):
            raise ModelError("/sigma and /levy must be given together")
        if self.sigma is not None:
            if len(self.sigma) != n or len(self.levy) != n:
                raise ModelError(f"/sigma, /levy: expected {n} entries")
            for i, s in enumerate(self.sigma):
                extra = free_variables(s) - {i + 1}
                if extra:
                    raise ModelError(
                        f"/sigma/{i}: sigma_{i + 1} may depend only on x{i + 1} "
                        f"(found x{min(extra)})")
        if self.domain is None or len(self.domain) != n:
            raise ModelError(f"/domain: expected {n} intervals")
        for i, (lo, hi) in enumerate(self.domain):
            if not lo < hi:
                raise ModelError(f"/domain/{i}: empty interval [{lo}, {hi}]")
        for i, e in enumerate(self.all_exprs()):
            bad = [k for k in free_variables(e) if k > n]
            if bad:
                raise ModelError(f"expression '{to_string(e)}' references x{bad[0]} but n = {n}")
        if self.sigma is not None:
            for i, s in enumerate(self.sigma):
                lo, hi = self.domain[i]
                grid = np.zeros((self.check_grid, n))
                grid[:, i] = np.linspace(lo, hi, self.check_grid)
                vals = evaluate_array(s, grid)
                if np.any(vals <= 0):
                    raise ModelError(f"/sigma/{i}: sigma_{i + 1} must be positive on the domain")

    def all_exprs(self):
        out = list(self.drift)
        if self.diffusion_factor is not None:
            out += [e for row in self.diffusion_factor for e in row]
        if self.sigma is not None:
            out += list(self.sigma)
        return out

    @classmethod
    def from_dict(cls, d):
        try:
            n = int(d["n"])
            drift = tuple(_parse(e, f"/drift/{i}") for i, e in enumerate(d["drift"]))
            diff = d.get("diffusion_factor")
            if diff is not None:
                diff = tuple(tuple(_parse(e, f"/diffusion_factor/{i}/{j}") for j, e in enumerate(row))
                             for i, row in enumerate(diff))
            sigma = d.get("sigma")
            levy = d.get("levy")
            if sigma is not None:
                sigma = tuple(_parse(e, f"/sigma/{i}") for i, e in enumerate(sigma))
            if levy is not None:
                parsed = []
                for i, p in enumerate(levy):
                    try:
                        parsed.append(StableParams(float(p["alpha"]), float(p.get("beta", 0.0))))
                    except (KeyError, TypeError, ValueError) as exc:
                        raise ModelError(f"/levy/{i}: {exc}") from None
                levy = tuple(parsed)
            domain = tuple((float(lo), float(hi)) for lo, hi in d["domain"])
        except KeyError as exc:
            raise ModelError(f"/{exc.args[0]}: required key missing") from None
        return cls(n, drift, diff, sigma, levy, domain, name=str(d.get("name", "")))

    def to_dict(self):
        d = {"name": self.name, "n": self.n, "drift": [to_string(e) for e in self.drift]}
        d["diffusion_factor"] = (None if self.diffusion_factor is None else
                                 [[to_string(e) for e in row] for row in self.diffusion_factor])
        d["sigma"] = None if self.sigma is None else [to_string(e) for e in self.sigma]
        d["levy"] = (None if self.levy is None else
                     [{"alpha": p.alpha, "beta": p.beta} for p in self.levy])
        d["domain"] = [list(b) for b in self.domain]
        return d

    def fingerprint(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # vectorized coefficient evaluation -------------------------------------------------

    def drift_values(self, Z):
        return np.column_stack([evaluate_array(e, Z) for e in self.drift])

    def diffusion_factor_values(self, Z):
        n = self.n
        out = np.zeros((Z.shape[0], n, n))
        if self.diffusion_factor is not None:
            for i in range(n):
                for j in range(n):
                    out[:, i, j] = evaluate_array(self.diffusion_factor[i][j], Z)
        return out

    def diffusion_matrix_values(self, Z):
        lam = self.diffusion_factor_values(Z)
        return np.einsum("mik,mjk->mij", lam, lam)

    def sigma_values(self, Z):
        if self.sigma is None:
            return np.zeros_like(Z)
        return np.column_stack([evaluate_array(e, Z) for e in self.sigma])


@dataclass
class PairDataset:
    """Paired observations: row j of ``X`` is the image of row j of ``Z`` after time ``h``."""

    Z: np.ndarray
    X: np.ndarray
    h: float
    seed: int = None
    model_fingerprint: str = None

    def __post_init__(self):
        self.Z = np.asarray(self.Z, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.Z.ndim != 2 or self.Z.shape != self.X.shape:
            raise ValueError("Z and X must be M x n arrays of equal shape")
        if not (np.all(np.isfinite(self.Z)) and np.all(np.isfinite(self.X))):
            raise ValueError("dataset contains non-finite entries")
        if self.h <= 0:
            raise ValueError("h must be positive")

    @property
    def M(self):
        return self.Z.shape[0]

    @property
    def n(self):
        return self.Z.shape[1]

    @property
    def increments(self):
        return self.X - self.Z


def _euler_rows(model, Z, h, xi, dL):
    """One Euler step for every row given Gaussian draws ``xi`` and Levy increments ``dL``."""
    try:
        X = Z + model.drift_values(Z) * h
        if model.diffusion_factor is not None:
            lam = model.diffusion_factor_values(Z)
            X = X + np.einsum("mij,mj->mi", lam, np.sqrt(h) * xi)
        if model.sigma is not None:
            X = X + model.sigma_values(Z) * dL
    except ValueError as exc:
        raise ModelError(f"coefficient evaluation failed: {exc}") from None
    return X


def euler_step(model, z, h, noise=None, rng=None):
    """Single Euler-Maruyama step from state ``z``.

    ``noise`` may be a pair ``(xi, dL)`` of injected draws: ``xi`` standard
    Gaussians and ``dL`` Levy increments over ``h``.  Otherwise draws come from
    ``rng`` (a :class:`numpy.random.Generator`).
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("z must be finite")
    if h <= 0:
        raise ValueError("h must be positive")
    n = model.n
    if noise is not None:
        xi, dL = (np.zeros(n) if a is None else np.asarray(a, dtype=float) for a in noise)
    else:
        rng = np.random.default_rng() if rng is None else rng
        xi = rng.standard_normal(n)
        dL = np.zeros(n)
        if model.levy is not None:
            from .stable import sample_levy_increment
            dL = np.array([sample_levy_increment(p, h, rng) for p in model.levy])
    # scalar path goes through the scalar evaluator
    def ev(e):
        return evaluate(e, z)
    x = z + np.array([ev(e) for e in model.drift]) * h
    if model.diffusion_factor is not None:
        lam = np.array([[ev(e) for e in row] for row in model.diffusion_factor])
        x = x + lam @ (np.sqrt(h) * xi)
    if model.sigma is not None:
        x = x + np.array([ev(e) for e in model.sigma]) * dL
    return x


def _draw_noise(model, gen, streams, step, h):
    n = model.n
    xi = gen.normal(streams, step, _rng.TAG_GAUSS, n)
    dL = np.zeros((len(streams), n))
    if model.levy is not None:
        u = gen.uniform(streams, step, _rng.TAG_LEVY, 2 * n)
        for i, p in enumerate(model.levy):
            v = np.pi * (u[:, 2 * i] - 0.5)
            w = -np.log(u[:, 2 * i + 1])
            dL[:, i] = h ** (1.0 / p.alpha) * cms_transform(p.alpha, p.beta, v, w)
    return xi, dL


def _uniform_in_domain(model, gen, streams, step, tag):
    u = gen.uniform(streams, step, tag, model.n)
    lo = np.array([b[0] for b in model.domain])
    hi = np.array([b[1] for b in model.domain])
    return lo + (hi - lo) * u


def _chunks(total, size):
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def generate_pairs(model, M, h, seed, workers=1, chunk_rows=CHUNK_ROWS):
    """Uniform initial points on the domain box and their Euler images after ``h``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if h <= 0:
        raise ValueError("h must be positive")
    gen = _rng.CounterRNG(seed)
    Z = np.empty((M, model.n))
    X = np.empty((M, model.n))

    def work(bounds):
        a, b = bounds
        streams = np.arange(a, b, dtype=np.uint64)
        z = _uniform_in_domain(model, gen, streams, 0, _rng.TAG_INITIAL)
        xi, dL = _draw_noise(model, gen, streams, 0, h)
        try:
            X[a:b] = _euler_rows(model, z, h, xi, dL)
        except ModelError as exc:
            raise ModelError(f"{exc} (rows {a}..{b - 1})") from None
        Z[a:b] = z

    _run(work, _chunks(M, chunk_rows), workers)
    return PairDataset(Z, X, h, seed=seed, model_fingerprint=model.fingerprint())


def _run(work, jobs, workers):
    if workers <= 1:
        for j in jobs:
            work(j)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, jobs))


def generate_trajectories(model, M0, T, h, seed, workers=1, inject=None, chunk_rows=CHUNK_ROWS):
    """Record every consecutive (state, next state) pair along Euler trajectories.

    Each of the ``M0`` trajectories starts uniformly in the domain and takes
    ``floor(T/h)`` steps.  A state that leaves the domain box is recorded as
    the image of its pair, then replaced by a fresh uniform point before the
    next step.  ``inject`` maps a step index to an ``(xi, dL)`` pair of
    ``(M0, n)`` arrays that replaces the random draws at that step.

    Rows are ordered trajectory-major: trajectory ``t`` occupies rows
    ``t*K .. t*K + K - 1`` where ``K = floor(T/h)``.
    """
    if M0 < 1:
        raise ValueError("M0 must be >= 1")
    if h <= 0 or T < h:
        raise ValueError("need 0 < h <= T")
    K = int(np.floor(T / h + 1e-9))
    n = model.n
    gen = _rng.CounterRNG(seed)
    Z = np.empty((M0, K, n))
    X = np.empty((M0, K, n))
    lo = np.array([b[0] for b in model.domain])
    hi = np.array([b[1] for b in model.domain])
    inject = inject or {}

    def work(bounds):
        a, b = bounds
        streams = np.arange(a, b, dtype=np.uint64)
        state = _uniform_in_domain(model, gen, streams, 0, _rng.TAG_INITIAL)
        for k in range(K):
            if k in inject:
                xi, dL = (np.asarray(v, dtype=float)[a:b] for v in inject[k])
            else:
                xi, dL = _draw_noise(model, gen, streams, k, h)
            try:
                nxt = _euler_rows(model, state, h, xi, dL)
            except ModelError as exc:
                raise ModelError(f"{exc} (step {k}, trajectories {a}..{b - 1})") from None
            Z[a:b, k] = state
            X[a:b, k] = nxt
            outside = np.any((nxt < lo) | (nxt > hi) | ~np.isfinite(nxt), axis=1)
            state = nxt
            if np.any(outside):
                fresh = _uniform_in_domain(model, gen, streams[outside], k + 1, _rng.TAG_RELOCATE)
                state = state.copy()
                state[outside] = fresh

    _run(work, _chunks(M0, chunk_rows), workers)
    Z = Z.reshape(M0 * K, n)
    X = X.reshape(M0 * K, n)
    return PairDataset(Z, X, h, seed=seed, model_fingerprint=model.fingerprint())
