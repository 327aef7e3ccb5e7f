"""Dimension engine: frozen reference values, closed forms, invariants.

Reference s_n values were computed by an independent 60-digit
implementation of the candidate minimization (direct mpmath evaluation
of the defining objective, no shared code) and frozen here.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beta_targets.dimension_engine import (
    AxisFamily,
    ExplicitTargets,
    Rotated2DFamily,
    TargetSpec,
    closed_form_example,
    gamma_magnitudes,
    generate_target,
    log_columns,
    s_n,
    s_star,
)
from beta_targets.errors import DomainError
from beta_targets.parallelepiped_geometry import BetaSystem, Parallelepiped

SYS24 = BetaSystem((2.0, 4.0))


def rotated_spec(theta: float) -> TargetSpec:
    return TargetSpec(SYS24, Rotated2DFamily("const", theta_value=theta))


def decay_spec(a: float) -> TargetSpec:
    return TargetSpec(SYS24, Rotated2DFamily("arccos_pow2", a=a))


# frozen reference values (independent extended-precision evaluation)
ROT_PI6_EXACT = {
    1: (1.2208237166164821, -3.8502198590705461),
    5: (1.2421454447964585, -19.792716025796481),
    50: (1.2492209963995866, -199.79248125036058),
}
DECAY_N200_EXACT = {
    0.0: 1.25,
    0.25: 1.2,
    0.5: 1.1428571428571429,
    0.75: 1.0769230769230769,
    1.0: 1.0008326394671107,
    2.0: 1.0,
}
AXIS3_N7 = (1.8760193491940685, -20.197730572445488)


class TestFrozenExact:
    def test_constant_rotation_drift(self):
        # at a fixed angle the finite-n value creeps toward 5/4 from
        # below; the constant log cos theta offset never fully decays
        spec = rotated_spec(math.pi / 6)
        for n, (val, tau_log2) in ROT_PI6_EXACT.items():
            lv = s_n(spec, n, mode="exact")
            assert lv.s_n == pytest.approx(val, rel=0, abs=1e-12)
            assert lv.argmin_tau_log2 == pytest.approx(tau_log2, abs=1e-9)
        assert ROT_PI6_EXACT[50][0] < 1.25 - 1e-4

    def test_axis_aligned_is_exact_at_every_level(self):
        lv = s_n(rotated_spec(0.0), 7, mode="exact")
        assert lv.s_n == pytest.approx(1.25, abs=1e-12)
        assert lv.argmin_tau_log2 == pytest.approx(-28.0, abs=1e-12)

    def test_right_angle(self):
        lv = s_n(rotated_spec(math.pi / 2), 7, mode="exact")
        assert lv.s_n == pytest.approx(1.0, abs=1e-12)
        assert lv.argmin_tau_log2 == pytest.approx(-21.0, abs=1e-12)

    def test_decaying_rotation_near_closed_form(self):
        for a, val in DECAY_N200_EXACT.items():
            lv = s_n(decay_spec(a), 200, mode="exact")
            assert lv.s_n == pytest.approx(val, rel=0, abs=1e-12), a
            cf = closed_form_example(2, a)
            assert abs(lv.s_n - cf) < 1e-2

    def test_three_dimensional_axis_family(self):
        sys3 = BetaSystem((2.0, math.e, 3.0))
        spec = TargetSpec(sys3, AxisFamily((0.5, 1.0, 2.0)))
        lv = s_n(spec, 7, mode="exact")
        assert lv.s_n == pytest.approx(AXIS3_N7[0], rel=0, abs=1e-12)
        assert lv.argmin_tau_log2 == pytest.approx(AXIS3_N7[1], abs=1e-9)

    def test_one_dimensional_closed_form(self):
        # single base: s_n = 1/(1+t) exactly at every level
        for beta, t in [(2.5, 3.0), (2.0, 1.0), (math.pi, 0.25)]:
            spec = TargetSpec(BetaSystem((beta,)), AxisFamily((t,)))
            for n in (1, 4, 9):
                lv = s_n(spec, n, mode="exact")
                assert lv.s_n == pytest.approx(1.0 / (1.0 + t), abs=1e-9)


class TestLimitMode:
    def test_constant_rotation_limit_is_flat(self):
        for theta in (0.0, math.pi / 6, math.pi / 4, 1.0):
            spec = rotated_spec(theta)
            for n in (1, 7, 50):
                lv = s_n(spec, n, mode="limit")
                assert lv.s_n == pytest.approx(1.25, abs=1e-12), theta

    def test_right_angle_limit(self):
        lv = s_n(rotated_spec(math.pi / 2), 3, mode="limit")
        assert lv.s_n == pytest.approx(1.0, abs=1e-12)

    def test_decay_limit_matches_closed_form(self):
        for a in (0.0, 0.3, 0.5, 1.0, 1.5, 7.0):
            lv = s_n(decay_spec(a), 11, mode="limit")
            assert lv.s_n == pytest.approx(closed_form_example(2, a),
                                           abs=1e-12), a

    def test_axis_limit_equals_exact(self):
        # no rotation, no constant offsets: the two modes coincide
        spec = TargetSpec(BetaSystem((2.0, 3.0)), AxisFamily((1.0, 0.5)))
        for n in (1, 5, 12):
            a = s_n(spec, n, mode="exact")
            b = s_n(spec, n, mode="limit")
            assert a.s_n == pytest.approx(b.s_n, abs=1e-12)
            assert a.argmin_tau_log2 == pytest.approx(b.argmin_tau_log2,
                                                      abs=1e-9)

    def test_explicit_targets_have_no_rates(self):
        shape = Parallelepiped((0.25, 0.25), np.diag([0.1, 0.1]))
        spec = TargetSpec(SYS24, ExplicitTargets((shape,)))
        with pytest.raises(DomainError):
            s_n(spec, 1, mode="limit")


class TestGammaMagnitudes:
    def test_rotation_hand_formula(self):
        # gamma_1 spans the image of the long side plus the in-plane
        # shear; gamma_2 follows from the volume identity
        for theta in (0.3, 1.0, math.pi / 4):
            c, s = math.cos(theta), math.sin(theta)
            spec = rotated_spec(theta)
            for n in (1, 3, 6):
                g1 = math.sqrt(2.0 ** (-4 * n) * c * c
                               + 2.0 ** (-6 * n) * s * s)
                g2 = 2.0 ** (-6 * n) / g1
                got = gamma_magnitudes(spec, n)
                assert got[0] == pytest.approx(g1, rel=1e-12)
                assert got[1] == pytest.approx(g2, rel=1e-12)

    def test_log_form_survives_underflow(self):
        spec = rotated_spec(math.pi / 6)
        logs = gamma_magnitudes(spec, 400, as_log2=True)
        # leading norm ~ 2^(-2n) cos theta, trailing carries the rest
        assert logs[0] == pytest.approx(-800 + math.log2(math.cos(math.pi / 6)),
                                        abs=1e-9)
        assert logs[0] + logs[1] == pytest.approx(-2400.0, abs=1e-6)
        assert gamma_magnitudes(spec, 400)[1] == 0.0  # flushed, as warned

    def test_decay_family_both_terms_visible(self):
        # cos theta_n = 2^(-an) makes the leading norm a genuine
        # two-term mix; check against direct evaluation at modest n
        a, n = 0.5, 4
        c = 2.0 ** (-a * n)
        s = math.sqrt(1.0 - c * c)
        g1 = math.sqrt((2.0 ** (-2 * n) * c) ** 2 + (2.0 ** (-3 * n) * s) ** 2)
        got = gamma_magnitudes(decay_spec(a), n)
        assert got[0] == pytest.approx(g1, rel=1e-12)
        assert got[0] * got[1] == pytest.approx(2.0 ** (-6 * n), rel=1e-12)

    def test_zero_angle_and_zero_decay_bit_identical(self):
        sa = log_columns(decay_spec(0.0), 9)
        sb = log_columns(rotated_spec(0.0), 9)
        assert np.array_equal(sa[0], sb[0])
        assert np.array_equal(sa[1], sb[1])
        assert gamma_magnitudes(decay_spec(0.0), 9, as_log2=True) == \
            gamma_magnitudes(rotated_spec(0.0), 9, as_log2=True)


class TestObjectiveProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.01, 1.55), st.integers(1, 9), st.data())
    def test_candidate_sufficiency(self, theta, n, data):
        # the objective is piecewise affine in 1/Lambda, so a fine grid
        # between consecutive candidates never beats the discrete min
        lv = s_n(rotated_spec(theta), n, mode="exact")
        w = [n * l for l in SYS24.log2_betas]
        g = [-x for x in lv.gamma_log2]
        lo = min(w + g) * 0.5
        hi = max(w + g) * 1.5
        lam = data.draw(st.floats(lo, hi))
        val = sum(1.0 if wi >= lam else wi / lam for wi in w) + \
            sum(1.0 - gi / lam for gi in g if gi <= lam)
        assert val >= lv.s_n - 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.floats(1.2, 9.0), st.floats(0.05, 4.0), st.integers(1, 6))
    def test_axis_scaling_monotone(self, beta, t, n):
        # shrinking the target faster can only lower the level value
        spec_slow = TargetSpec(BetaSystem((beta,)), AxisFamily((t,)))
        spec_fast = TargetSpec(BetaSystem((beta,)), AxisFamily((t * 2,)))
        assert s_n(spec_fast, n).s_n <= s_n(spec_slow, n).s_n + 1e-12

    def test_explicit_matches_axis(self):
        # feeding the axis family's own boxes through the explicit path
        # must reproduce the same levels
        sys2 = BetaSystem((2.0, 3.0))
        fam = AxisFamily((1.0, 0.5), origin=(0.1, 0.2))
        spec = TargetSpec(sys2, fam)
        shapes = tuple(generate_target(spec, n) for n in (1, 2, 3))
        espec = TargetSpec(sys2, ExplicitTargets(shapes))
        for n in (1, 2, 3):
            assert s_n(espec, n).s_n == pytest.approx(
                s_n(spec, n).s_n, abs=1e-12)

    def test_bad_levels_and_modes(self):
        spec = rotated_spec(0.0)
        with pytest.raises(DomainError):
            s_n(spec, 0)
        with pytest.raises(DomainError):
            s_n(spec, 2, mode="asymptotic")
        with pytest.raises(DomainError):
            log_columns(spec, -3)

    def test_oversized_target_rejected(self):
        # a gamma norm at or above 1 leaves no admissible tau
        sys_slow = BetaSystem((1.05, 1.05))
        shape = Parallelepiped((0.0, 0.0), np.diag([1.2, 1.2]))
        spec = TargetSpec(sys_slow, ExplicitTargets((shape,)))
        with pytest.raises(DomainError):
            s_n(spec, 1)


class TestLevelData:
    def test_fields_and_views(self):
        lv = s_n(rotated_spec(0.3), 4)
        assert lv.n == 4 and lv.mode == "exact"
        assert lv.gamma_log2[0] >= lv.gamma_log2[1]
        assert list(lv.candidates_log2_tau) == \
            sorted(lv.candidates_log2_tau)
        assert lv.argmin_tau == pytest.approx(
            2.0 ** lv.argmin_tau_log2, rel=1e-15)
        assert lv.gamma_norms[0] == pytest.approx(
            2.0 ** lv.gamma_log2[0], rel=1e-15)
        assert any(abs(lv.argmin_tau_log2 - c) < 1e-9
                   for c in lv.candidates_log2_tau)

    def test_candidates_deduplicated(self):
        # theta = 0 collapses gamma norms onto the contraction scales
        lv = s_n(rotated_spec(0.0), 5)
        c = np.asarray(lv.candidates_log2_tau)
        assert np.all(np.diff(c) > 1e-9)


class TestSStar:
    def test_windowed_report_converges_in_limit_mode(self):
        rep = s_star(rotated_spec(1.0), 1, 30, window=10, mode="limit")
        assert rep.s_star == pytest.approx(1.25, abs=1e-12)
        assert rep.converged
        assert len(rep.levels) == 30
        assert rep.tail_max - rep.tail_min < rep.tolerance
        assert rep.large_intersection_class.startswith("G^")

    def test_exact_mode_flags_slow_drift(self):
        # at window 5 and tol 1e-9 the pi/6 drift is still visible
        rep = s_star(rotated_spec(math.pi / 6), 1, 25, window=5,
                     tolerance=1e-9, mode="exact")
        assert not rep.converged
        assert rep.s_star == max(lv.s_n for lv in rep.levels[-5:])
        loose = s_star(rotated_spec(math.pi / 6), 1, 25, window=5,
                       tolerance=1e-2, mode="exact")
        assert loose.converged

    def test_argument_validation(self):
        spec = rotated_spec(0.0)
        with pytest.raises(DomainError):
            s_star(spec, 5, 2)
        with pytest.raises(DomainError):
            s_star(spec, 1, 10, window=11)
        with pytest.raises(DomainError):
            s_star(spec, 1, 10, tolerance=0.0)


class TestGenerateTarget:
    def test_axis_box(self):
        spec = TargetSpec(BetaSystem((2.0, 3.0)),
                          AxisFamily((1.0, 1.0), origin=(0.25, 0.25)))
        p = generate_target(spec, 2)
        assert np.allclose(p.origin, [0.25, 0.25])
        assert np.allclose(p.columns, np.diag([2.0 ** -2, 3.0 ** -2]))

    def test_rotated_box_inside_unit_square(self):
        p = generate_target(rotated_spec(math.pi / 4), 3)
        v = p.vertices()
        assert np.all(v >= 0.0) and np.all(v < 1.0)
        assert np.allclose(p.origin, [0.5, 0.5])

    def test_escaping_target_warns(self):
        spec = TargetSpec(BetaSystem((2.0, 4.0)),
                          AxisFamily((1.0, 1.0), origin=(0.9, 0.9)))
        with pytest.warns(RuntimeWarning):
            generate_target(spec, 1)

    def test_explicit_level_bounds(self):
        shape = Parallelepiped((0.2, 0.2), np.diag([0.1, 0.1]))
        spec = TargetSpec(SYS24, ExplicitTargets((shape,)))
        assert generate_target(spec, 1) is shape
        with pytest.raises(DomainError):
            generate_target(spec, 2)


class TestClosedForms:
    def test_values(self):
        assert closed_form_example(1, 0.0) == 1.25
        assert closed_form_example(1, 1.0) == 1.25
        assert closed_form_example(1, math.pi / 2) == 1.0
        assert closed_form_example(2, 0.0) == 1.25
        assert closed_form_example(2, 1.0) == 1.0
        assert closed_form_example(2, 0.5) == pytest.approx(
            1.0 + 0.5 / 3.5, abs=1e-15)
        assert closed_form_example(2, 3.0) == 1.0

    def test_domain(self):
        with pytest.raises(DomainError):
            closed_form_example(1, -0.1)
        with pytest.raises(DomainError):
            closed_form_example(1, 2.0)
        with pytest.raises(DomainError):
            closed_form_example(2, -1.0)
        with pytest.raises(DomainError):
            closed_form_example(3, 0.0)


class TestFamilyValidation:
    def test_axis(self):
        with pytest.raises(DomainError):
            AxisFamily(())
        with pytest.raises(DomainError):
            AxisFamily((1.0, -2.0))
        with pytest.raises(DomainError):
            AxisFamily((1.0,), origin=(0.0, 0.0))

    def test_rotated(self):
        with pytest.raises(DomainError):
            Rotated2DFamily("linear")
        with pytest.raises(DomainError):
            Rotated2DFamily("arccos_pow2", a=-1.0)
        with pytest.raises(DomainError):
            Rotated2DFamily("const", theta_value=math.nan)
        with pytest.raises(DomainError):
            Rotated2DFamily("const", exponents=(1.0,))

    def test_spec_dimension_checks(self):
        with pytest.raises(DomainError):
            TargetSpec(BetaSystem((2.0, 3.0, 5.0)),
                       Rotated2DFamily("const"))
        with pytest.raises(DomainError):
            TargetSpec(BetaSystem((2.0,)), AxisFamily((1.0, 1.0)))
        with pytest.raises(DomainError):
            ExplicitTargets(())
