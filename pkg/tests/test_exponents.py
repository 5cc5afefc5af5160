import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_channel
from ecapacity.errors import CapabilityError, RangeError, SolverError, ValidationError
from ecapacity.exponents import (ExponentCurve, SolverConfig, brute_force_exponent_oracle,
                                 capacity_blahut_arimoto, critical_reliability, default_grid_end,
                                 expurgated_exponent, exponent_curve, maximize_over_inputs,
                                 point_solver, random_coding_exponent, rr_from_sp_transform,
                                 sphere_packing_exponent, tilted_solution, zero_rate_reliability)
from ecapacity.prob_core import mutual_information

U = [0.5, 0.5]
BSC = [[0.9, 0.1], [0.1, 0.9]]
SAME = [[0.3, 0.7], [0.3, 0.7]]


def binary_channels():
    row = st.floats(0.02, 0.98)
    return st.tuples(row, row).map(lambda t: np.array([[1 - t[0], t[0]], [1 - t[1], t[1]]]))


def expurgated_scan(E, w1=0.1, step=1e-5):
    """Uniform-input BSC: stationary Vbar is a BSC(t), I = 1 - h(t), average distance t*d."""
    d = -math.log2(2 * math.sqrt(w1 * (1 - w1)))
    t = np.arange(step, 0.5 + step / 2, step)
    h = -(t * np.log2(t) + (1 - t) * np.log2(1 - t))
    return float(np.min(np.concatenate([[1.0 + max(-E, 0.0)], 1 - h + np.maximum(t * d - E, 0.0)])))


class TestSpherePacking:
    def test_zero_reliability_is_mutual_information(self):
        assert sphere_packing_exponent(U, 0.0, BSC) == pytest.approx(0.531004, abs=1e-6)
        assert sphere_packing_exponent([0.2, 0.8], 0.0, BSC) == mutual_information([0.2, 0.8], BSC)

    def test_spot_values(self):
        assert sphere_packing_exponent(U, 0.133206, BSC) == pytest.approx(0.188722, abs=1e-5)
        assert sphere_packing_exponent(U, 0.736966, BSC) == pytest.approx(0.0, abs=1e-6)
        assert sphere_packing_exponent(U, 2.0, BSC) == 0.0

    def test_zero_rate_reliability(self):
        assert zero_rate_reliability(U, BSC) == pytest.approx(0.736966, abs=1e-6)
        assert zero_rate_reliability(U, np.eye(2)) == math.inf

    def test_identity_channel_stays_at_entropy(self):
        # absolute continuity pins V = W
        for E in (0.1, 1.0, 5.0):
            assert sphere_packing_exponent([0.25, 0.75], E, np.eye(2)) == pytest.approx(0.811278, abs=1e-6)

    def test_zero_mass_letters(self):
        w = [[0.9, 0.1], [0.1, 0.9], [0.5, 0.5]]
        assert sphere_packing_exponent([0.5, 0.5, 0.0], 0.1, w) == pytest.approx(
            sphere_packing_exponent(U, 0.1, BSC), abs=1e-12)

    def test_tilted_half_is_critical_point(self):
        v, E, R = tilted_solution(U, BSC, 0.5)
        assert np.allclose(v, [[0.75, 0.25], [0.25, 0.75]], atol=1e-9)
        assert E == pytest.approx(0.133206, abs=1e-6)
        assert R == pytest.approx(0.188722, abs=1e-6)

    def test_rejects_negative_reliability(self):
        with pytest.raises(ValidationError):
            sphere_packing_exponent(U, -0.1, BSC)

    def test_nonconvergence_carries_best_iterate(self):
        cfg = SolverConfig(max_iterations=1, inner_tolerance=1e-300)
        with pytest.raises(SolverError) as info:
            sphere_packing_exponent([0.3, 0.7], 0.05, [[0.8, 0.2], [0.35, 0.65]], cfg)
        assert info.value.best is not None

    @settings(max_examples=25, deadline=None)
    @given(binary_channels(), st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_nonincreasing_and_bounded(self, w, p0, e1, e2):
        P = [p0, 1 - p0]
        lo, hi = sorted((e1, e2))
        r_lo, r_hi = sphere_packing_exponent(P, lo, w), sphere_packing_exponent(P, hi, w)
        assert r_hi <= r_lo + 1e-9
        assert 0.0 <= r_lo <= mutual_information(P, w) + 1e-9


class TestRandomCoding:
    def test_equals_sphere_packing_below_critical(self):
        assert random_coding_exponent(U, 0.1, BSC) == pytest.approx(
            sphere_packing_exponent(U, 0.1, BSC), abs=1e-9)

    def test_zero_and_large(self):
        assert random_coding_exponent(U, 0.0, BSC) == pytest.approx(0.531004, abs=1e-6)
        assert random_coding_exponent(U, 2.0, BSC) == 0.0

    def test_tangent_line_beyond_critical(self):
        for E in (0.2, 0.25, 0.3):
            assert random_coding_exponent(U, E, BSC) == pytest.approx(
                max(0.188722 + 0.133206 - E, 0.0), abs=2e-6)

    def test_methods_agree(self):
        w = [[0.7, 0.2, 0.1], [0.1, 0.6, 0.3], [0.25, 0.25, 0.5]]
        P = [0.2, 0.5, 0.3]
        for E in (0.01, 0.05, 0.15, 0.3):
            a = random_coding_exponent(P, E, w, method="direct")
            b = random_coding_exponent(P, E, w, method="transform")
            assert a == pytest.approx(b, abs=1e-7)

    def test_unknown_method(self):
        with pytest.raises(ValidationError):
            random_coding_exponent(U, 0.1, BSC, method="nope")

    @settings(max_examples=25, deadline=None)
    @given(binary_channels(), st.floats(0.05, 0.95), st.floats(0.0, 1.0))
    def test_not_above_sphere_packing(self, w, p0, E):
        P = [p0, 1 - p0]
        assert random_coding_exponent(P, E, w) <= sphere_packing_exponent(P, E, w) + 1e-9


class TestExpurgated:
    def test_identical_rows(self):
        for E in (0.0, 0.3):
            assert expurgated_exponent(U, E, SAME) == pytest.approx(0.0, abs=1e-12)

    def test_zero_beyond_average_distance(self):
        assert expurgated_exponent(U, 0.368483, BSC) == pytest.approx(0.0, abs=1e-6)
        assert expurgated_exponent(U, 1.0, BSC) == pytest.approx(0.0, abs=1e-12)

    def test_against_one_parameter_scan(self):
        assert expurgated_exponent(U, 0.2, BSC) == pytest.approx(expurgated_scan(0.2), abs=1e-6)
        assert expurgated_exponent(U, 0.05, BSC) == pytest.approx(expurgated_scan(0.05), abs=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(binary_channels(), st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_nonincreasing(self, w, p0, e1, e2):
        P = [p0, 1 - p0]
        lo, hi = sorted((e1, e2))
        assert expurgated_exponent(P, hi, w) <= expurgated_exponent(P, lo, w) + 1e-8


class TestCapacity:
    def test_values(self):
        c, p = capacity_blahut_arimoto(BSC)
        assert c == pytest.approx(0.531004, abs=1e-6)
        assert np.allclose(p.probs, U)
        assert capacity_blahut_arimoto(np.eye(4))[0] == pytest.approx(2.0, abs=1e-12)
        assert capacity_blahut_arimoto(SAME)[0] == pytest.approx(0.0, abs=1e-12)

    def test_rejects_bad_tol(self):
        with pytest.raises(ValidationError):
            capacity_blahut_arimoto(BSC, tol=0.0)


class TestOuterMaximization:
    def test_symmetric_channel_uniform_optimum(self):
        val, P = maximize_over_inputs(point_solver("sp", BSC), 0.1, BSC)
        assert np.allclose(P.probs, U, atol=1e-4)
        assert val == pytest.approx(sphere_packing_exponent(U, 0.1, BSC), abs=1e-9)

    def test_single_input(self):
        val, P = maximize_over_inputs(point_solver("sp", [[0.5, 0.5]]), 0.1, [[0.5, 0.5]])
        assert np.array_equal(P.probs, [1.0]) and val == 0.0

    def test_ternary_zero_reliability_is_capacity(self):
        w = random_channel(np.random.default_rng(3), 3, 3)
        val, _ = maximize_over_inputs(point_solver("sp", w), 0.0, w)
        assert val == pytest.approx(capacity_blahut_arimoto(w)[0], abs=1e-6)

    def test_alphabet_ceiling(self):
        w = np.eye(17)
        with pytest.raises(CapabilityError):
            maximize_over_inputs(point_solver("sp", w), 0.1, w)


class TestCriticalReliability:
    def test_bsc(self):
        e = critical_reliability(U, BSC)
        assert e == pytest.approx(0.133206, abs=1e-6)
        assert sphere_packing_exponent(U, e, BSC) == pytest.approx(0.188722, abs=1e-6)

    def test_degenerate(self):
        assert critical_reliability(U, SAME) == 0.0

    def test_identity_boundary(self):
        # constant curve never reaches slope -1
        assert critical_reliability(U, np.eye(2)) == 0.0


class TestTransform:
    def test_branches(self):
        grid = sorted(set(np.linspace(0.0, 0.5, 51)) | {0.133206219346})
        sp = exponent_curve("sp", BSC, grid, P=U)
        for E in (0.0, 0.05, 0.1):
            assert rr_from_sp_transform(sp, E) == pytest.approx(sphere_packing_exponent(U, E, BSC), abs=1e-9)
        for E in (0.2, 0.3):
            assert rr_from_sp_transform(sp, E) == pytest.approx(random_coding_exponent(U, E, BSC), abs=1e-6)
        assert rr_from_sp_transform(sp, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_range(self):
        sp = exponent_curve("sp", BSC, [0.0, 0.1], P=U)
        with pytest.raises(RangeError):
            rr_from_sp_transform(sp, 0.2)
        late = exponent_curve("sp", BSC, [0.05, 0.1], P=U)
        with pytest.raises(RangeError):
            rr_from_sp_transform(late, 0.07)


class TestCurves:
    def test_single_zero_point(self):
        c = exponent_curve("sp", BSC, [0.0])
        assert c.points[0] == (0.0, pytest.approx(0.531004, abs=1e-6))

    def test_identical_rows(self):
        c = exponent_curve("sp", SAME, [0.0, 0.1, 0.2])
        assert np.all(c.R == 0.0)

    def test_default_grid_end(self):
        assert default_grid_end(BSC) == pytest.approx(0.736966, abs=1e-6)
        # infinite zero-rate point falls back to the largest divergence
        assert math.isfinite(default_grid_end(np.eye(2)))

    def test_metadata_and_digest(self):
        c = exponent_curve("ex", BSC, [0.0, 0.2, 0.4])
        assert len(c.channel_digest) == 64 and len(c.per_point_optimal_P) == 3
        assert c.interpolate(0.1) == pytest.approx((c.R[0] + c.R[1]) / 2)
        with pytest.raises(RangeError):
            c.interpolate(0.5)

    def test_bad_grid(self):
        with pytest.raises(ValidationError):
            exponent_curve("sp", BSC, [0.2, 0.1])
        with pytest.raises(ValidationError):
            exponent_curve("sp", BSC, [])

    def test_curve_invariants(self):
        with pytest.raises(ValidationError):
            ExponentCurve("sp", ((0.0, 0.1), (0.1, 0.2)))
        with pytest.raises(ValidationError):
            ExponentCurve("sp", ((0.1, 0.1), (0.0, 0.0)))

    def test_threads_give_identical_results(self, monkeypatch):
        grid = [0.0, 0.1, 0.2, 0.3]
        one = exponent_curve("sp", BSC, grid)
        monkeypatch.setenv("ECAPACITY_THREADS", "3")
        many = exponent_curve("sp", BSC, grid)
        assert one.points == many.points


class TestBruteForceOracle:
    def test_zero_reliability_exact(self):
        w = [[0.8, 0.2], [0.35, 0.65]]
        P = [0.4, 0.6]
        assert brute_force_exponent_oracle("sp", P, 0.0, w, 1e-2) == pytest.approx(
            mutual_information(P, w), abs=1e-12)

    def test_bsc_critical_point(self):
        assert brute_force_exponent_oracle("sp", U, 0.133206, BSC, 1e-3) == pytest.approx(0.188722, abs=1e-3)

    def test_capability(self):
        w = np.full((3, 3), 1 / 3)
        with pytest.raises(CapabilityError):
            brute_force_exponent_oracle("sp", [1 / 3] * 3, 0.1, w, 1e-2)
        with pytest.raises(CapabilityError):
            brute_force_exponent_oracle("ex", [1 / 3] * 3, 0.1, w, 1e-2)
