"""Closed forms, shooting, ergodic-constant bisection, profile fitting."""

import json
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergopde import (
    ExponentPair,
    InsufficientSpan,
    InvalidRegime,
    OutOfRange,
    ScalarField,
    blowup_profile_fit,
    ergodic_constant_1d,
    exact_dirichlet_1d,
    export_report,
    shoot_blowup,
)
from conftest import COSINE_C, POWER_C

ZERO = ScalarField.constant(0.0, 1)
EP_LOG = ExponentPair(0.0, 2.0)
EP_POWER = ExponentPair(0.0, 1.5)


class TestExactDirichlet:
    def test_alpha_one_value_at_zero(self):
        u = exact_dirichlet_1d(1.0, 1.0)
        assert u.value_at_zero == pytest.approx(2.0 * np.sqrt(2.0) / 3.0)
        assert u(0.0) == pytest.approx(u.value_at_zero)

    def test_boundary_values_vanish(self):
        u = exact_dirichlet_1d(-0.5, 2.0)
        assert u(np.array([-1.0, 1.0])) == pytest.approx([0.0, 0.0])

    def test_exponent(self):
        # |x|^((2+alpha)/(1+alpha))
        assert exact_dirichlet_1d(1.0, 1.0).exponent == pytest.approx(1.5)

    def test_alpha_zero_is_parabola(self):
        u = exact_dirichlet_1d(0.0, 2.0)
        xs = np.linspace(-1, 1, 11)
        assert u(xs) == pytest.approx(1.0 - xs**2)

    def test_rejects_bad_arguments(self):
        with pytest.raises(OutOfRange):
            exact_dirichlet_1d(-1.0, 1.0)
        with pytest.raises(OutOfRange):
            exact_dirichlet_1d(0.0, -1.0)


class TestShooting:
    def test_cosine_blowup_location(self):
        # alpha=0, beta=2, f+c = c: p' = |c| + p^2, blow-up of u at
        # x* = (pi/2) / sqrt(|c|)
        for c in (-1.0, -2.0):
            x_star, states = shoot_blowup(EP_LOG, c, ZERO)
            assert x_star == pytest.approx(0.5 * np.pi / np.sqrt(-c), rel=1e-8)
            assert [s.phase for s in states]  # trajectory is recorded

    def test_threshold_crossing(self):
        # x*(c) < 1 below the interval threshold, > 1 above it
        assert shoot_blowup(EP_LOG, COSINE_C - 0.05, ZERO)[0] < 1.0
        assert shoot_blowup(EP_LOG, COSINE_C + 0.05, ZERO)[0] > 1.0

    def test_requires_negative_forcing(self):
        with pytest.raises(InvalidRegime):
            shoot_blowup(EP_LOG, 1.0, ZERO)


class TestErgodicConstant:
    def test_log_case_reference_value(self):
        t0 = time.monotonic()
        c, report = ergodic_constant_1d(EP_LOG, ZERO)
        elapsed = time.monotonic() - t0
        assert abs(c - COSINE_C) < 1e-6
        assert elapsed < 5.0
        assert report["bracket"][0] <= c <= report["bracket"][1]

    def test_power_case_reference_value(self):
        # pinned closed form -(4 pi / (3 sqrt 3))^3
        c, _ = ergodic_constant_1d(EP_POWER, ZERO)
        assert abs(c - POWER_C) < 1e-6

    @settings(max_examples=5, deadline=None)
    @given(st.floats(min_value=-2.0, max_value=2.0))
    def test_shift_identity(self, shift):
        # replacing f by f + s shifts the constant by exactly -s
        base, _ = ergodic_constant_1d(EP_LOG, ZERO)
        shifted, _ = ergodic_constant_1d(EP_LOG, ScalarField.constant(shift, 1))
        assert shifted == pytest.approx(base - shift, abs=1e-8)

    def test_nonconstant_forcing_brackets(self):
        f = ScalarField.from_expression("0.5*cos(3.0*x)", dim=1)
        c, report = ergodic_constant_1d(EP_LOG, f)
        # constant-comparison bounds: c_erg(max f) <= c <= c_erg(min f)
        assert COSINE_C - 0.5 <= c <= COSINE_C + 0.5


class TestProfileFit:
    def test_exact_power_law(self):
        d = np.geomspace(1e-3, 0.3, 24)
        vals = 4.0 * d**-1.0
        fit = blowup_profile_fit(d, vals, "power")
        assert fit["chi_hat"] == pytest.approx(1.0, abs=1e-10)
        assert fit["c_hat"] == pytest.approx(4.0, rel=1e-10)

    def test_exact_log_profile(self):
        d = np.geomspace(1e-4, 0.2, 30)
        vals = 1.5 * np.abs(np.log(d)) + 7.0
        fit = blowup_profile_fit(d, vals, "log")
        assert fit["c_hat"] == pytest.approx(1.5, rel=1e-10)

    def test_insufficient_samples(self):
        d = np.geomspace(1e-3, 0.3, 5)
        with pytest.raises(InsufficientSpan):
            blowup_profile_fit(d, 4.0 / d, "power")

    def test_insufficient_span(self):
        d = np.linspace(0.1, 0.15, 20)
        with pytest.raises(InsufficientSpan):
            blowup_profile_fit(d, 4.0 / d, "power")

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=0.2, max_value=4.0),
           st.floats(min_value=0.5, max_value=8.0))
    def test_power_fit_recovers_parameters(self, chi_true, c_true):
        d = np.geomspace(1e-3, 0.3, 20)
        fit = blowup_profile_fit(d, c_true * d**-chi_true, "power")
        assert fit["chi_hat"] == pytest.approx(chi_true, rel=1e-8)
        assert fit["c_hat"] == pytest.approx(c_true, rel=1e-8)


class TestReportExport:
    def test_json_stable_key_order(self):
        payload = {"b": 1, "a": {"z": 2.0, "k": [1, 2]}}
        text = export_report(payload)
        assert text == export_report(payload)
        assert json.loads(text) == payload
        assert text.index('"a"') < text.index('"b"')
