import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from warpcurv.frame import BracketTable, CurvatureComponents, curvature_components, expand_full_tensor
from warpcurv.model import (
    J,
    MODEL_CONSTANTS,
    ZERO_COEFFICIENT_PATTERNS,
    alpha_system,
    belegradek_consistency,
    kahler_curvature,
    kahler_tensor,
    model_state,
    nijenhuis_residual,
    solve_alpha,
)

E = np.eye(4)
radii = st.floats(0.05, 8.0)


class TestComplexStructure:
    def test_square_is_minus_identity(self):
        np.testing.assert_array_equal(J @ J, -E)

    def test_orthogonal(self):
        np.testing.assert_array_equal(J.T @ J, E)


class TestModelState:
    def test_v_at_one(self):
        assert model_state(1.0).v == pytest.approx(0.521095305493747, abs=1e-15)

    def test_small_radius_limits(self):
        s = model_state(1e-9)
        assert s.v < 1e-9
        assert s.h_theta == pytest.approx(1.0) and s.h_r == pytest.approx(1.0)

    def test_h_r_derivative(self):
        s = model_state(2.0)
        assert s.h_r == np.cosh(2.0) and s.dh_r == np.sinh(2.0)

    @pytest.mark.parametrize("r", [0.0, -1.0])
    def test_rejects_nonpositive(self, r):
        with pytest.raises(ValueError):
            model_state(r)


class TestKahler:
    def test_holomorphic_plane(self):
        assert kahler_curvature(E[0], E[1], E[0], E[1]) == pytest.approx(-1.0)

    def test_antisymmetric_slot(self):
        rng = np.random.default_rng(1)
        Z, W = rng.normal(size=4), rng.normal(size=4)
        assert kahler_curvature(E[0], E[0], Z, W) == 0

    def test_mixed_value(self):
        assert kahler_curvature(E[0], E[1], E[2], E[3]) == pytest.approx(0.5)

    def test_tensor_matches_frame_constants(self):
        # frame-free construction against the nine closed-form constants
        full = expand_full_tensor(CurvatureComponents.from_array(MODEL_CONSTANTS))
        np.testing.assert_allclose(kahler_tensor(), full, atol=1e-15)

    def test_j_invariance(self):
        R = kahler_tensor()
        JR = np.einsum("ai,bj,ck,dl,ijkl->abcd", J.T, J.T, E, E, R)
        np.testing.assert_allclose(JR, R, atol=1e-15)

    @given(radii)
    def test_closed_form_agrees(self, r):
        c = curvature_components(model_state(r))
        np.testing.assert_allclose(expand_full_tensor(c), kahler_tensor(), atol=1e-10)


class TestAlpha:
    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 3.0])
    def test_canonical_solution(self, r):
        alpha, cond = solve_alpha(r)
        np.testing.assert_allclose(alpha, (0.5, 0.5, -0.5), atol=1e-10)
        assert cond < 1e6

    def test_third_equation_residual(self):
        sys_ = alpha_system(1.0)
        assert abs(sys_.residual((0.5, 0.5, -0.5))[2]) < 1e-12

    @given(radii)
    def test_residual_vanishes(self, r):
        np.testing.assert_allclose(alpha_system(r).residual((0.5, 0.5, -0.5)), 0, atol=1e-9)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            alpha_system(0.0)


class TestNijenhuis:
    @pytest.mark.parametrize("r", [1.0, 2.0])
    def test_canonical_integrable(self, r):
        for X, Y in itertools.combinations(E, 2):
            np.testing.assert_allclose(nijenhuis_residual(r, X=X, Y=Y), 0, atol=1e-12)

    def test_zero_table_fails(self):
        res = nijenhuis_residual(1.0, BracketTable(0.0, 0.0, 0.0))
        expected = -0.5 / np.tanh(0.5) + 0.5 * np.tanh(0.5)
        assert res[1] == pytest.approx(expected, rel=1e-14)
        assert expected != 0


class TestBracketIdentity:
    @pytest.mark.parametrize("r", [1.0, 2.0])
    @pytest.mark.parametrize("ijk", list(itertools.product((1, 2, 3), repeat=3)))
    def test_all_patterns(self, r, ijk):
        lhs, rhs = belegradek_consistency(r, *ijk)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_minus_half_pattern(self):
        lhs, rhs = belegradek_consistency(1.0, 2, 1, 3)
        assert lhs == pytest.approx(-0.5, abs=1e-12)
        assert rhs == pytest.approx(-0.5, abs=1e-12)

    @pytest.mark.parametrize("ijk", ZERO_COEFFICIENT_PATTERNS)
    def test_zero_patterns(self, ijk):
        assert belegradek_consistency(1.0, *ijk) == (0.0, 0.0)

    def test_wrong_table_breaks_identity(self):
        lhs, rhs = belegradek_consistency(1.0, 2, 1, 3, BracketTable(0.5, 0.25, -0.5))
        assert abs(lhs - rhs) > 1e-3

    def test_index_range(self):
        with pytest.raises(ValueError):
            belegradek_consistency(1.0, 4, 1, 2)
