import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpcurv.audit import (
    CERTIFIED,
    CERTIFIED_WITH_SLACK,
    MARGIN_NAMES,
    PLUCKER,
    SCAN_ONLY,
    PlaneFrame,
    PlaneSampler,
    audit_grid,
    audit_profile,
    aregularity_probe,
    certify_point,
    curvature_operator,
    default_slack_budget,
    dumps_json,
    inequality_margins,
    plane_extremes,
    profile_components,
    region6_alpha_star,
    region6_components,
    region6_parabola_min,
    region6_reduced_inequality_1a,
    sectional_curvature,
    sectional_curvature_equal_warp,
    sectional_curvature_full,
)
from warpcurv.frame import CurvatureComponents, WarpState, curvature_components
from warpcurv.model import MODEL_COMPONENTS, MODEL_CONSTANTS
from warpcurv.schedule import ModelProfile, compute_breakpoints

from conftest import random_states

E = np.eye(4)
FAST = dict(n_samples=1024, refine_steps=20)


def random_components(rng, n):
    return [CurvatureComponents.from_array(row) for row in curvature_components(random_states(rng, n)).as_array()]


def diagonal(d1, d2, d3, d4, d5, d6, m1=0.0, m2=0.0, m3=0.0):
    # order of arguments follows COMPONENT_NAMES
    return CurvatureComponents(R1212=d1, R1313=d2, R2323=d3, R1234=m1, R1324=m2, R1423=m3,
                               R1414=d4, R2424=d5, R3434=d6)


class TestPlaneFrame:
    def test_validate(self):
        PlaneFrame(E[0], E[1]).validate()
        with pytest.raises(ValueError):
            PlaneFrame(E[0], E[0] + E[1]).validate()

    def test_from_vectors_parallel(self):
        with pytest.raises(ValueError, match="parallel"):
            PlaneFrame.from_vectors(E[0], 2 * E[0])

    def test_random_orthonormal(self, rng):
        p = PlaneFrame.random(rng)
        p.validate()

    @settings(max_examples=50)
    @given(st.floats(-math.pi, math.pi), st.booleans())
    def test_same_plane_same_curvature(self, theta, flip):
        rng = np.random.default_rng(3)
        c = random_components(rng, 1)[0]
        p = PlaneFrame.random(rng)
        q = p.rotated(theta, flip)
        assert sectional_curvature(c, q) == pytest.approx(sectional_curvature(c, p), abs=1e-12)

    def test_b1_zero_form(self, rng):
        p = PlaneFrame.random(rng).b1_zero_form()
        assert abs(p.b[0]) < 1e-14


class TestSectionalCurvature:
    def test_coordinate_plane(self):
        assert sectional_curvature(MODEL_COMPONENTS, PlaneFrame(E[0], E[3])) == pytest.approx(-0.25)

    def test_mixed_plane(self):
        p = PlaneFrame((E[0] + E[2]) / math.sqrt(2), (E[1] + E[3]) / math.sqrt(2))
        assert sectional_curvature(MODEL_COMPONENTS, p) == pytest.approx(-0.25, abs=1e-15)

    def test_against_contraction(self, rng):
        comps = random_components(rng, 1000)
        for c in comps:
            p = PlaneFrame.random(rng)
            assert sectional_curvature(c, p) == pytest.approx(sectional_curvature_full(c, p), abs=1e-12)

    def test_operator_quadratic_form(self, rng):
        c = random_components(rng, 1)[0]
        p = PlaneFrame.random(rng)
        w = p.bivector()
        assert w @ curvature_operator(c) @ w == pytest.approx(sectional_curvature(c, p), abs=1e-12)
        assert abs(w @ PLUCKER @ w) < 1e-14  # decomposable

    def test_equal_warp_coordinate_plane(self, rng):
        c = random_components(rng, 1)[0]
        assert sectional_curvature_equal_warp(c, PlaneFrame(E[2], E[1])) == pytest.approx(c.R2323)

    def test_equal_warp_formula(self):
        # a Region-5 style state: v = sinh(r/2), h_theta = h_r = cosh(r/2)
        s = compute_breakpoints(0.01, 40)
        r = (s.d_eps + s.e_eps) / 2
        st_ = WarpState(r=r, v=np.sinh(r / 2), h_theta=np.cosh(r / 2), h_r=np.cosh(r / 2),
                        dv=np.cosh(r / 2) / 2, dh_theta=np.sinh(r / 2) / 2, dh_r=np.sinh(r / 2) / 2,
                        ddv=np.sinh(r / 2) / 4, ddh_theta=np.cosh(r / 2) / 4, ddh_r=np.cosh(r / 2) / 4)
        c = curvature_components(st_)
        rng = np.random.default_rng(9)
        for _ in range(1000):
            C = rng.normal(size=4)
            D = np.r_[rng.normal(size=2), 0.0, 0.0]
            p = PlaneFrame.from_vectors(D, C)
            p = PlaneFrame(p.b, p.a)
            assert sectional_curvature_equal_warp(c, p) == pytest.approx(sectional_curvature(c, p), abs=1e-12)

    def test_equal_warp_weights_sum_to_one(self, rng):
        ones = diagonal(1, 1, 1, 1, 1, 0)
        for _ in range(100):
            C = rng.normal(size=4)
            D = np.r_[rng.normal(size=2), 0.0, 0.0]
            q = PlaneFrame.from_vectors(D, C)
            p = PlaneFrame(q.b, q.a)
            assert sectional_curvature_equal_warp(ones, p) == pytest.approx(1.0, abs=1e-12)

    def test_equal_warp_rejects_general_basis(self, rng):
        with pytest.raises(ValueError):
            sectional_curvature_equal_warp(MODEL_COMPONENTS, PlaneFrame(E[0], E[3]))


class TestPlaneExtremes:
    def test_model_quarter_pinched(self):
        ext = plane_extremes(MODEL_COMPONENTS)
        assert ext.k_min == pytest.approx(-1.0, abs=1e-6)
        assert ext.k_max == pytest.approx(-0.25, abs=1e-6)
        # the dual values bracket the sampled extremes from outside
        assert ext.k_max <= ext.k_max_bound < -0.25 + 1e-6
        assert -1.0 - 1e-6 < ext.k_min_bound <= ext.k_min

    def test_constant_curvature(self):
        ext = plane_extremes(diagonal(*[-0.7] * 6), **FAST)
        assert ext.k_min == pytest.approx(-0.7, abs=1e-12)
        assert ext.k_max == pytest.approx(-0.7, abs=1e-12)

    def test_argmax_realises_value(self, rng):
        c = random_components(rng, 1)[0]
        ext = plane_extremes(c, **FAST)
        assert sectional_curvature(c, ext.argmax) == pytest.approx(ext.k_max, abs=1e-10)
        assert sectional_curvature(c, ext.argmin) == pytest.approx(ext.k_min, abs=1e-10)

    def test_sampled_within_bounds(self, rng):
        for c in random_components(rng, 20):
            ext = plane_extremes(c, **FAST)
            K = [sectional_curvature(c, PlaneFrame.random(rng)) for _ in range(200)]
            assert max(K) <= ext.k_max_bound + 1e-9
            assert min(K) >= ext.k_min_bound - 1e-9
            assert ext.k_max == pytest.approx(ext.k_max_bound, abs=1e-6 * max(1, abs(ext.k_max)))

    def test_collapsed_end(self):
        eps, r = 0.01, -1.0
        v, h = eps * np.exp(r), np.exp(r / 2)
        st_ = WarpState(r=r, v=v, h_theta=h, h_r=h, dv=v, dh_theta=h / 2, dh_r=h / 2,
                        ddv=v, ddh_theta=h / 4, ddh_r=h / 4)
        assert plane_extremes(curvature_components(st_), **FAST).k_max < 0

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            plane_extremes(MODEL_COMPONENTS, n_samples=10)

    def test_sampler_deterministic(self):
        a = PlaneSampler._build(1024, 5)
        b = PlaneSampler._build(1024, 5)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_allclose(np.sum(a * a, axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(np.einsum("ni,ij,nj->n", a, PLUCKER, a), 0.0, atol=1e-12)


class TestMargins:
    def test_model(self):
        m = inequality_margins(MODEL_COMPONENTS)
        assert m.m_1a == 0.5
        np.testing.assert_array_equal(m.as_array(), [0.5, 0.5, 0.0, 0.0, 0.0, 0.0])

    def test_zero_mixed(self):
        m = inequality_margins(diagonal(-1, -2, -3, -4, -5, -6))
        np.testing.assert_array_equal(m.as_array(), [1, 6, 2, 5, 4, 3])

    def test_slack_budget(self):
        m = inequality_margins(diagonal(-1, -2, -3, -4, -5, -6))
        assert default_slack_budget(m) == 1e-2
        m = inequality_margins(diagonal(-0.01, -2, -3, -4, -5, -6))
        assert default_slack_budget(m) == pytest.approx(1e-3)
        assert default_slack_budget(inequality_margins(diagonal(*[1.0] * 6))) == 0.0


class TestCertificate:
    def test_model_certified(self):
        cert = certify_point(MODEL_COMPONENTS, **FAST)
        assert cert.status == CERTIFIED
        assert cert.negative

    def test_positive_curvature_flagged(self):
        cert = certify_point(diagonal(0.5, 0.3, -1, -1, -1, -1), **FAST)
        assert cert.status == SCAN_ONLY
        assert cert.k_max >= 0.5 - 1e-9
        assert set(cert.violated) == {"m_1a", "m_2a"}

    def test_single_small_violation_with_slack(self):
        c = diagonal(-1, -1, -1, -1, -1, -1, m1=1.001)
        cert = certify_point(c, slack_budget=0.01, **FAST)
        assert cert.violated == ("m_1a", "m_1b")
        assert cert.status == SCAN_ONLY  # two violations never earn slack
        c = diagonal(-1, -1, -1, -1, -1, -1.2, m1=1.001)
        cert = certify_point(c, slack_budget=0.01, **FAST)
        assert cert.violated == ("m_1a",)
        assert cert.status == CERTIFIED_WITH_SLACK and cert.negative

    def test_region6_near_alpha_star(self):
        s = compute_breakpoints(1e-3, 40)
        r = np.array([s.e_eps * (1 + region6_alpha_star(s))])
        c = region6_components(s, r)
        m = inequality_margins(c).as_array()[0]
        assert -0.02 < m[0] < 0
        assert np.all(m[1:] > -1e-12)
        cert = certify_point(CurvatureComponents.from_array(c.as_array()[0]), slack_budget=0.02)
        assert cert.status == CERTIFIED_WITH_SLACK
        assert cert.k_max < 0

    def test_region6_default_eps_is_certified(self):
        s = compute_breakpoints(0.01, 40)
        r = np.array([s.e_eps * (1 + region6_alpha_star(s))])
        c = CurvatureComponents.from_array(region6_components(s, r).as_array()[0])
        assert certify_point(c, **FAST).status == CERTIFIED

    def test_soundness(self, rng):
        # every certified point must have negative curvature on every sampled plane
        hits = 0
        for c in random_components(rng, 1000):
            m = inequality_margins(c)
            if np.all(m.as_array() >= 0):
                hits += 1
                ext = plane_extremes(c, n_samples=1024, refine_steps=0)
                assert ext.k_max_bound < 0
        assert hits > 0


@pytest.fixture(scope="module")
def s():
    return compute_breakpoints(0.01, 40)


class TestRegion6:
    def test_matches_general_formula(self, s):
        from warpcurv.schedule import phi_cubic

        r = np.linspace(s.e_eps, s.f_eps, 500)
        p, dp, ddp = phi_cubic(s)(r)
        st_ = WarpState(r=r, v=np.sinh(r / 2), h_theta=np.cosh(r / 2), h_r=p,
                        dv=np.cosh(r / 2) / 2, dh_theta=np.sinh(r / 2) / 2, dh_r=dp,
                        ddv=np.sinh(r / 2) / 4, ddh_theta=np.cosh(r / 2) / 4, ddh_r=ddp)
        diff = region6_components(s, r).as_array() - curvature_components(st_).as_array()
        assert np.max(np.abs(diff)) < 1e-9

    def test_model_limit(self, s):
        r = np.geomspace(0.05, 6, 64)
        c = region6_components(s, r, phi=lambda x: (np.cosh(x), np.sinh(x), np.cosh(x)))
        np.testing.assert_allclose(c.as_array(), np.broadcast_to(MODEL_CONSTANTS, (64, 9)), atol=1e-10)

    def test_equal_warp_limit(self, s):
        r = np.array([s.e_eps])
        half = lambda x: (np.cosh(x / 2), np.sinh(x / 2) / 2, np.cosh(x / 2) / 4)
        c = region6_components(s, r, phi=half)
        st_ = WarpState(r=r, v=np.sinh(r / 2), h_theta=np.cosh(r / 2), h_r=np.cosh(r / 2),
                        dv=np.cosh(r / 2) / 2, dh_theta=np.sinh(r / 2) / 2, dh_r=np.sinh(r / 2) / 2,
                        ddv=np.sinh(r / 2) / 4, ddh_theta=np.cosh(r / 2) / 4, ddh_r=np.cosh(r / 2) / 4)
        np.testing.assert_allclose(c.as_array(), curvature_components(st_).as_array(), atol=1e-9)

    def test_domain(self, s):
        with pytest.raises(ValueError):
            region6_components(s, np.array([s.f_eps * 2]))

    def test_margin_2b_gap_is_order_one_over_k(self):
        # |R1324| exceeds 1/4 over Region 6 by an amount that scales like 1/k
        worst = {}
        for k in (40, 100):
            for eps in (1e-3, 5e-4):
                s = compute_breakpoints(eps, k)
                r = np.linspace(s.e_eps, s.f_eps, 2001)
                w = float(np.min(inequality_margins(region6_components(s, r)).m_2b))
                assert -1.5 / k < w < 0
                worst[k, eps] = w
        for eps in (1e-3, 5e-4):
            assert abs(worst[100, eps]) < abs(worst[40, eps])

    def test_cubic_degenerates_when_e_large(self):
        # with e k^2 of order 10^2 the cubic leaves the positive range
        from warpcurv.schedule import ScheduleError, build_profile, phi_cubic

        s = compute_breakpoints(0.01, 100)
        assert np.min(phi_cubic(s)(np.linspace(s.e_eps, s.f_eps, 2001))[0]) < 0
        with pytest.raises(ScheduleError):
            build_profile(0.01, 100)

    def test_margin_1a_limit_shrinks_with_k(self):
        def m1a(eps, k):
            s = compute_breakpoints(eps, k)
            r = np.array([s.e_eps * 1.5])
            return float(inequality_margins(region6_components(s, r)).m_1a[0])

        for k in (40, 100):
            seq = [m1a(eps, k) for eps in (4e-3, 2e-3, 1e-3, 5e-4)]
            steps = np.abs(np.diff(seq))
            assert steps[1] < steps[0] and steps[2] < steps[1]
        limit = {k: abs(m1a(5e-4, k) - region6_reduced_inequality_1a(k, 0.5) / (2 * 1.5**2)) for k in (40, 100)}
        assert limit[100] < limit[40]


class TestParabola:
    @pytest.mark.parametrize("k", [10, 100])
    def test_closed_form(self, k):
        from fractions import Fraction

        a_star = Fraction(k * k, 2 * k * k + 9)
        p_star = Fraction(1, 4) - a_star + (1 + Fraction(9, 2 * k * k)) * a_star**2
        assert p_star == Fraction(9, 4 * (2 * k * k + 9))
        assert region6_alpha_star(k) == pytest.approx(float(a_star), abs=1e-15)
        assert region6_parabola_min(k) == pytest.approx(float(p_star), abs=1e-15)
        assert float(region6_reduced_inequality_1a(k, region6_alpha_star(k))) == pytest.approx(
            float(p_star), abs=1e-15)

    def test_k10_value(self):
        assert region6_parabola_min(10) == pytest.approx(9 / 836, abs=1e-15)

    def test_alpha_zero(self):
        assert region6_reduced_inequality_1a(40, 0.0) == 0.25

    def test_large_k(self):
        assert region6_alpha_star(1e6) == pytest.approx(0.5, abs=1e-11)


class TestAuditProfile:
    def test_model_profile(self):
        rep = audit_profile(ModelProfile(0.1, 5.0, schedule=compute_breakpoints(0.01, 40)),
                            grid=np.linspace(0.1, 5, 12), **FAST)
        assert rep.global_sup_k == pytest.approx(-0.25, abs=1e-9)
        assert not rep.failed
        assert set(rep.status) == {CERTIFIED}
        assert rep.region_summary()["7"]["status"] == CERTIFIED

    def test_grid(self, profile):
        g = audit_grid(profile, 2000)
        assert g.size >= 2000
        assert np.all(np.diff(g) > 0)
        ids = profile.region_id(g)
        assert set(np.unique(ids)) == set(range(1, 8))
        for _, lo, hi in profile.windows():
            assert np.sum((g >= lo) & (g <= hi)) >= 30

    def test_small_audit(self, profile):
        s = profile.schedule
        grid = np.linspace(-3.0, 2 * s.f_eps, 60)
        rep = audit_profile(profile, grid=grid, **FAST)
        assert rep.components.shape == (60, 9)
        assert rep.margins.shape == (60, 6)
        assert rep.global_sup_k < 0
        summary = rep.summary()
        assert summary["n_points"] == 60
        assert max(v["sup_k"] for v in summary["regions"].values()) == rep.global_sup_k

    def test_json_and_csv(self, profile, tmp_path):
        rep = audit_profile(profile, grid=np.linspace(-1.0, 1.0, 25), **FAST)
        rep.write_json(tmp_path / "a.json")
        rep.write_csv(tmp_path / "a.csv")
        doc = json.loads((tmp_path / "a.json").read_text())
        assert doc["global_sup_k"] == rep.global_sup_k
        header = (tmp_path / "a.csv").read_text().splitlines()[0].split(",")
        assert header[:2] == ["r", "region_id"] and header[-1] == "status"
        assert [h for h in header if h.startswith("m_")] == list(MARGIN_NAMES)

    def test_deterministic_across_threads(self, profile, monkeypatch):
        grid = np.linspace(-1.0, 0.5, 16)
        monkeypatch.setenv("WARPCURV_THREADS", "1")
        a = dumps_json(audit_profile(profile, grid=grid, **FAST).summary())
        monkeypatch.setenv("WARPCURV_THREADS", "3")
        b = dumps_json(audit_profile(profile, grid=grid, **FAST).summary())
        assert a == b

    def test_dumps_json_sorted_and_nonfinite(self):
        out = dumps_json({"b": 1.0, "a": float("-inf")})
        assert out.index('"a"') < out.index('"b"')
        assert '"-inf"' in out


class TestProbe:
    def test_model_derivatives_vanish(self):
        mp = ModelProfile(0.5, 5.0, schedule=compute_breakpoints(0.01, 40))
        probe = aregularity_probe(mp, max_order=2, grid=np.linspace(1, 4, 20))
        assert probe.finite()
        for order in (1, 2):
            assert max(probe.log10_sup[order].values()) < -6

    def test_tail_scan_negative(self, tail_profile):
        s = tail_profile.schedule
        grid = np.linspace(s.p_eps - 10, s.o_eps, 40)
        rep = audit_profile(tail_profile, grid=grid, **FAST)
        assert np.all(rep.k_max_effective < 0)

    def test_tail_limits(self, tail_profile):
        s = tail_profile.schedule
        r = s.p_eps - np.array([10.0, 20.0, 30.0, 40.0])
        c = profile_components(tail_profile, r).as_array()
        bounded = [i for i in range(9) if i != 2]
        d = np.max(np.abs(np.diff(c[:, bounded], axis=0)), axis=1)
        assert d[1] < 1e-3
        # the bounded components converge like e^{(r - p)/2}
        np.testing.assert_allclose(d[1:] / d[:-1], math.exp(-5), rtol=0.05)
        # R2323 ~ -1/(4 h^2) saturates the exp cap here, so compare log h directly:
        # with h = tau (1 + e^{(r - p)/2}) the relative gap is about 2 e^{-5}
        log_h = tail_profile.log_eval(r[:2])["log_h_theta"]
        rel = math.expm1(2 * (log_h[0] - log_h[1]))
        assert rel == pytest.approx(2 * (math.exp(-5) - math.exp(-10)), rel=0.05)

    def test_probe_table(self, tail_profile):
        s = tail_profile.schedule
        probe = aregularity_probe(tail_profile, max_order=3,
                                  windows={"deep": (s.p_eps - 10, s.p_eps - 5), "near": (s.p_eps - 5, s.p_eps)})
        assert probe.finite()
        assert set(probe.table()) == {0, 1, 2, 3}
        # the scale of R2323 is 1/(4 tau^2), i.e. about 10^1660
        assert probe.table()[0] == pytest.approx(-2 * s.log_tau_eps / math.log(10) - math.log10(4), abs=0.1)
        d = probe.to_dict()
        assert set(d["windows"]) == {"deep", "near"}

    def test_bad_order(self, tail_profile):
        with pytest.raises(ValueError):
            aregularity_probe(tail_profile, max_order=5)
