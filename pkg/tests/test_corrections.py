import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levykm.corrections import (CorrectionInput, correction_quadrature_oracle,
                                diffusion_correction, drift_correction)

ALPHAS = [0.3, 0.6, 0.8, 1.3, 1.7]
BETAS = [-1.0, -0.4, 0.0, 0.5, 1.0]
EPSILONS = [0.1, 0.5, 2.0]


def test_examples():
    assert drift_correction(CorrectionInput(0.7, 0.0, 1.3, 0.5)) == 0
    assert drift_correction(CorrectionInput(0.5, 0.5, 1.0, 0.5)) == pytest.approx(0.282095, abs=5e-7)
    assert drift_correction(CorrectionInput(1.5, -0.5, 1.0, 1.0)) == pytest.approx(0.598413, abs=5e-7)
    assert diffusion_correction(CorrectionInput(0.5, 0.0, 1.0, 1.0)) == pytest.approx(0.265962, abs=5e-7)
    assert diffusion_correction(CorrectionInput(1.5, 0.0, 1.0, 1.0)) == pytest.approx(1.196827, abs=5e-7)
    s1 = diffusion_correction(CorrectionInput(0.5, 0.0, 1.0, 0.7))
    s2 = diffusion_correction(CorrectionInput(0.5, 0.0, 2.0, 0.7))
    assert s2 / s1 == pytest.approx(math.sqrt(2), rel=1e-14)


def test_alpha_one_branch():
    assert drift_correction(CorrectionInput(1.0, 0.0, 2.0, 0.5)) == 0
    got = drift_correction(CorrectionInput(1.0, 0.4, 2.0, 0.5))
    assert got == pytest.approx(2 / math.pi * 2.0 * 0.4 * math.log(0.5), rel=1e-15)


def test_array_sigma():
    sig = np.array([0.5, 1.0, 2.0])
    out = drift_correction(CorrectionInput(1.5, 0.5, sig, 1.0))
    assert out.shape == (3,)
    assert out[1] == pytest.approx(drift_correction(CorrectionInput(1.5, 0.5, 1.0, 1.0)))


def test_domain():
    for args in [(0.0, 0, 1, 1), (2.0, 0, 1, 1), (1.5, 1.2, 1, 1), (1.5, 0, 0.0, 1), (1.5, 0, 1, 0.0)]:
        with pytest.raises(ValueError):
            CorrectionInput(*args)
    with pytest.raises(ValueError):
        correction_quadrature_oracle(CorrectionInput(1.5, 0, 1, 1), 3)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("beta", BETAS)
@pytest.mark.parametrize("eps", EPSILONS)
def test_closed_forms_match_quadrature(alpha, beta, eps):
    c = CorrectionInput(alpha, beta, 1.3, eps)
    assert abs(correction_quadrature_oracle(c, 1) - drift_correction(c)) <= 1e-8
    assert abs(correction_quadrature_oracle(c, 2) - diffusion_correction(c)) <= 1e-8


@pytest.mark.parametrize("eps", [0.5, 2.0])
def test_alpha_one_quadrature(eps):
    c = CorrectionInput(1.0, 0.0, 1.3, eps)
    assert abs(correction_quadrature_oracle(c, 1) - drift_correction(c)) <= 1e-8


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("eps", EPSILONS)
def test_second_moment_oracle_is_beta_free(alpha, eps):
    vals = [correction_quadrature_oracle(CorrectionInput(alpha, b, 0.9, eps), 2) for b in (-1, 0, 1)]
    assert max(vals) - min(vals) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 1.95).filter(lambda a: abs(a - 1) > 1e-3), st.floats(-1, 1),
       st.floats(0.1, 5), st.floats(0.05, 3))
def test_structure(alpha, beta, sigma, eps):
    r = drift_correction(CorrectionInput(alpha, beta, sigma, eps))
    r1 = drift_correction(CorrectionInput(alpha, 1.0, sigma, eps))
    assert r == pytest.approx(beta * r1, rel=1e-12, abs=1e-300)
    s = diffusion_correction(CorrectionInput(alpha, beta, sigma, eps))
    assert s > 0
    assert s == diffusion_correction(CorrectionInput(alpha, -beta, sigma, eps))
    s2 = diffusion_correction(CorrectionInput(alpha, beta, 2 * sigma, eps))
    assert s2 / s == pytest.approx(2 ** alpha, rel=1e-12)
    r2 = drift_correction(CorrectionInput(alpha, 1.0, 2 * sigma, eps))
    assert r2 / r1 == pytest.approx(2 ** alpha, rel=1e-12)
