"""Learning stochastic dynamics driven by Brownian and alpha-stable Levy noise.

Stages: simulate pair data (``simulator``), estimate the jump law
(``levy_estimator``), subtract small-jump corrections (``corrections``) and
learn drift and diffusion by sparse regression (``learner``).
"""

import json
from importlib import resources

from .simulator import ModelSpec

__version__ = "0.1.0"

BUILTIN_MODELS = ("maier_stein", "rossler", "ou_stable", "ou_gaussian")


def builtin_model_path(name):
    """Filesystem path of a bundled model JSON."""
    if name not in BUILTIN_MODELS:
        raise KeyError(f"unknown model {name!r}; choose from {BUILTIN_MODELS}")
    return str(resources.files(__package__) / "models" / f"{name}.json")


def builtin_model(name):
    with open(builtin_model_path(name)) as fh:
        return ModelSpec.from_dict(json.load(fh))
