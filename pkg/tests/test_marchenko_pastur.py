import math

import numpy as np
import pytest
from scipy.integrate import quad

from sampspectra.errors import ConvergenceError
from sampspectra.marchenko_pastur import (
    MPParams,
    mp_expectation,
    mp_lmmse,
    mp_moment,
    mp_pdf,
)
from sampspectra.moments import moment_limit

BETAS = (0.1, 0.4, 0.8, 1.0)


class TestParams:
    def test_support_edges(self):
        params = MPParams(1.0)
        assert (params.c2, params.c1) == (0.0, 4.0)
        params = MPParams(0.25)
        assert params.c2 == pytest.approx(0.25)
        assert params.c1 == pytest.approx(2.25)

    @pytest.mark.parametrize("bad", [0.0, -0.3, 1.2])
    def test_rejects_bad_ratio(self, bad):
        with pytest.raises(ValueError):
            MPParams(bad)


class TestDensity:
    def test_zero_outside_open_support(self):
        params = MPParams(0.5)
        for x in (-1.0, 0.0, params.c2, params.c1, params.c1 + 1):
            assert mp_pdf(x, params) == 0.0
        assert mp_pdf((params.c1 + params.c2) / 2, params) > 0

    def test_square_case_closed_form(self):
        # At beta = 1 and x = 1 the density is sqrt(3)/(2 pi).
        assert mp_pdf(1.0, MPParams(1.0)) == pytest.approx(
            math.sqrt(3) / (2 * math.pi), abs=1e-15
        )

    def test_array_evaluation(self):
        params = MPParams(0.4)
        x = np.linspace(-1, 4, 101)
        y = mp_pdf(x, params)
        assert y.shape == x.shape
        inside = (x > params.c2) & (x < params.c1)
        assert (y[inside] > 0).all()
        assert not y[~inside].any()

    @pytest.mark.parametrize("beta", BETAS)
    def test_normalization_by_direct_quadrature(self, beta):
        # Independent route: integrate the density itself, without the
        # substitution used by mp_expectation.
        # The raw integrand keeps its square-root endpoint behavior, so the
        # reported error estimate is looser than the substitution route.
        params = MPParams(beta)
        mass, err = quad(lambda x: mp_pdf(x, params), params.c2, params.c1,
                         limit=300)
        assert err < 1e-5
        assert mass == pytest.approx(1.0, abs=1e-6)


class TestMoments:
    def test_zeroth_moment(self):
        assert mp_moment(0, 0.3) == 1.0

    @pytest.mark.parametrize("beta", BETAS)
    def test_matches_limit_polynomial(self, beta):
        for p in range(1, 7):
            assert mp_moment(p, beta) == moment_limit(p, beta)

    @pytest.mark.parametrize("beta", BETAS)
    def test_quadrature_agrees(self, beta):
        for p in range(1, 7):
            integral = mp_expectation(lambda x, p=p: x**p, beta)
            assert integral == pytest.approx(moment_limit(p, beta), abs=1e-9)


class TestExpectation:
    def test_constant_function(self):
        assert mp_expectation(lambda x: 1.0, 0.7) == pytest.approx(1.0, abs=1e-10)

    def test_tolerance_validation(self):
        with pytest.raises(ValueError):
            mp_expectation(lambda x: x, 0.5, tolerance=0.0)

    def test_unreachable_tolerance(self):
        with pytest.raises(ConvergenceError) as info:
            mp_expectation(lambda x: x, 0.5, tolerance=1e-16)
        lo, hi = info.value.estimates
        assert lo == pytest.approx(1.0, abs=1e-8)
        assert hi >= lo


class TestLmmse:
    def test_noiseless_sentinel(self):
        for beta in BETAS:
            assert mp_lmmse(beta, 0.0) == 0.0

    def test_frozen_value(self):
        # Frozen from the closed form after matching the quadrature route
        # below to 1e-10.
        assert mp_lmmse(0.4, 0.1) == pytest.approx(0.060232526704, abs=1e-12)

    def test_golden_ratio_case(self):
        # beta = alpha = 1 gives (sqrt(5) - 1)/2 exactly.
        assert mp_lmmse(1.0, 1.0) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-15)

    @pytest.mark.parametrize("beta", BETAS)
    @pytest.mark.parametrize("snr_db", [0, 10, 20])
    def test_matches_quadrature(self, beta, snr_db):
        alpha = 10 ** (-snr_db / 10)
        shift = alpha * beta
        integral = mp_expectation(lambda x: shift / (x + shift), beta)
        assert mp_lmmse(beta, alpha) == pytest.approx(integral, abs=1e-10)

    def test_monotone_in_noise(self):
        alphas = [0.0, 0.01, 0.1, 1.0, 10.0, 1e6]
        values = [mp_lmmse(0.6, a) for a in alphas]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert 0.0 <= values[-1] <= 1.0

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            mp_lmmse(0.0, 0.1)
        with pytest.raises(ValueError):
            mp_lmmse(0.5, -0.1)
        with pytest.raises(ValueError):
            mp_lmmse(0.5, float("nan"))
