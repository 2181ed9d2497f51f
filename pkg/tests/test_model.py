"""Exponent bookkeeping, blow-up data, scalar fields, config round-trips."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergopde import (
    Box,
    EllipticityBounds,
    ExponentPair,
    OutOfRange,
    PucciPlus,
    ScalarField,
    ScaledTrace,
    amplitude_C,
    chi,
    ergodic_data_for,
    face_normals,
    instance_from_config,
    instance_to_config,
    rescale_residual_factor,
    validate_exponents,
)
from conftest import make_instance


# admissible exponents: alpha > -1, alpha + 1 < beta <= alpha + 2
admissible = st.tuples(
    st.floats(min_value=-0.9, max_value=3.0),
    st.floats(min_value=1e-3, max_value=1.0),
).map(lambda t: (t[0], t[0] + 1.0 + t[1]))


class TestExponents:
    def test_validate_accepts_admissible(self):
        ep = validate_exponents(0.0, 1.5)
        assert ep.alpha == 0.0 and ep.beta == 1.5

    @pytest.mark.parametrize("alpha,beta", [
        (-1.0, 1.5),   # alpha must exceed -1
        (0.0, 1.0),    # beta must exceed alpha + 1
        (0.0, 2.5),    # beta must not exceed alpha + 2
        (1.0, 2.0),    # beta = alpha + 1 is excluded
    ])
    def test_validate_rejects(self, alpha, beta):
        with pytest.raises(OutOfRange):
            validate_exponents(alpha, beta)

    def test_chi_power_case(self):
        # chi = (2 + alpha - beta) / (beta - 1 - alpha)
        assert chi(ExponentPair(0.0, 1.5)) == pytest.approx(1.0)
        assert chi(ExponentPair(1.0, 2.5)) == pytest.approx(1.0)
        assert chi(ExponentPair(0.0, 1.2)) == pytest.approx(4.0)

    def test_chi_log_case(self):
        assert chi(ExponentPair(0.0, 2.0)) == 0.0
        assert ExponentPair(0.0, 2.0).chi_case == "chi=0"
        assert ExponentPair(0.0, 1.5).chi_case == "chi>0"

    @settings(max_examples=100, deadline=None)
    @given(admissible)
    def test_chi_nonnegative_and_zero_only_at_border(self, ab):
        alpha, beta = ab
        ep = validate_exponents(alpha, beta)
        x = chi(ep)
        assert x >= 0.0
        if beta < alpha + 2.0 - 1e-9:
            assert x > 0.0


class TestAmplitude:
    def test_power_case_trace(self):
        # chi=1 instance: C = ((chi+1) F(n x n))^(1/(beta-alpha-1)) / chi
        # = (2 * 1)^(1/0.5) / 1 = 4 for the unit trace operator.
        c = amplitude_C(ScaledTrace(), (1.0,), ExponentPair(0.0, 1.5))
        assert c == pytest.approx(4.0)

    def test_log_case_trace(self):
        # chi=0: C = F(n x n) = 1 for unit trace.
        c = amplitude_C(ScaledTrace(), (1.0,), ExponentPair(0.0, 2.0))
        assert c == pytest.approx(1.0)

    def test_scaled_trace_coefficient_enters(self):
        c = amplitude_C(ScaledTrace(2.0), (1.0,), ExponentPair(0.0, 2.0))
        assert c == pytest.approx(2.0)

    def test_pucci_uses_rank_one_value(self):
        # F(n x n) for PucciPlus(a, A) on a unit normal is A.
        spec = PucciPlus(EllipticityBounds(1.0, 3.0))
        c = amplitude_C(spec, (0.0, 1.0), ExponentPair(0.0, 2.0))
        assert c == pytest.approx(3.0)

    @settings(max_examples=50, deadline=None)
    @given(admissible)
    def test_amplitude_positive(self, ab):
        ep = validate_exponents(*ab)
        assert amplitude_C(ScaledTrace(), (1.0,), ep) > 0.0


class TestRescaleFactor:
    def test_value(self):
        # delta^(beta / (beta - alpha - 1)) with beta=1.5, alpha=0 -> delta^3
        assert rescale_residual_factor(ExponentPair(0.0, 1.5), 0.5) == pytest.approx(0.125)

    @settings(max_examples=50, deadline=None)
    @given(admissible, st.floats(min_value=1e-3, max_value=1.0))
    def test_monotone_in_delta(self, ab, delta):
        ep = validate_exponents(*ab)
        assert rescale_residual_factor(ep, delta) <= rescale_residual_factor(ep, 1.0)

    def test_rejects_nonpositive_delta(self):
        with pytest.raises(OutOfRange):
            rescale_residual_factor(ExponentPair(0.0, 1.5), 0.0)


class TestScalarField:
    def test_expression_evaluation(self):
        f = ScalarField.from_expression("sin(x) + 2", dim=1)
        assert f(np.array([0.0])) == pytest.approx([2.0])

    def test_constant_broadcasts(self):
        f = ScalarField.constant(3.0, dim=2)
        xs = np.zeros((4, 4))
        assert np.all(f(xs, xs) == 3.0)

    def test_expression_round_trip_through_config(self):
        inst = make_instance(0.0, 1.5, b="1", f="cos(x)")
        cfg = instance_to_config(inst)
        back = instance_from_config(cfg)
        xs = np.linspace(-1.0, 1.0, 7)
        assert np.allclose(back.f(xs), np.cos(xs))
        assert back.exponents == inst.exponents


class TestDomain:
    def test_face_normals_point_inward(self):
        normals = face_normals(Box((-1.0, 0.0), (1.0, 2.0)))
        assert np.allclose(normals["axis0_lo"], [1.0, 0.0])
        assert np.allclose(normals["axis1_hi"], [0.0, -1.0])

    def test_ergodic_data_amplitudes_per_face(self):
        inst = make_instance(0.0, 1.5)
        data = ergodic_data_for(inst)
        assert data.chi == pytest.approx(1.0)
        assert set(data.c_of_x) == {"axis0_lo", "axis0_hi"}
        assert all(v == pytest.approx(4.0) for v in data.c_of_x.values())

    def test_shrunk_box(self):
        box = Box((-1.0,), (1.0,))
        inner = box.shrunk(0.5)
        assert inner.lo[0] == pytest.approx(-0.5)
        assert inner.hi[0] == pytest.approx(0.5)

    def test_shifted_f(self):
        inst = make_instance(0.0, 1.5, f="0")
        shifted = inst.shifted_f(-3.0)
        assert shifted.f(np.array([0.25])) == pytest.approx([-3.0])
