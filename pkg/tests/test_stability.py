import math

import numpy as np
import pytest

from hlsverify import core, potential, spectral, stability
from hlsverify.errors import InputError
from hlsverify.verdicts import NOT_APPLICABLE


def unit_mode(basis, k):
    coeffs = np.zeros(basis.K + 1)
    coeffs[k] = 1.0
    return spectral.SpectralCoeffs(coeffs)


class TestAdmissiblePerturbation:
    def test_saturates_bound_and_orthogonality(self, basis3):
        pert = stability.make_admissible_perturbation(unit_mode(basis3, 2),
                                                      0.1, basis3)
        assert pert.sup_ratio == pytest.approx(1.0, abs=1e-14)
        assert pert.overlap < 1e-12
        # (1-eps) u* <= u_eps <= (1+eps) u*
        us = core.u_star(3, basis3.grid)
        assert np.all(pert.u_eps.values >= (1 - 0.1) * us.values - 1e-15)
        assert np.all(pert.u_eps.values <= (1 + 0.1) * us.values + 1e-15)

    def test_mode0_rejected(self, basis3):
        with pytest.raises(InputError):
            stability.make_admissible_perturbation(unit_mode(basis3, 0),
                                                   0.1, basis3)

    def test_eps_range_rejected(self, basis3):
        for eps in (0.0, 1.0, 1.5, -0.2):
            with pytest.raises(InputError):
                stability.make_admissible_perturbation(unit_mode(basis3, 2),
                                                       eps, basis3)

    def test_all_zero_rejected(self, basis3):
        with pytest.raises(InputError):
            stability.make_admissible_perturbation(
                spectral.SpectralCoeffs(np.zeros(basis3.K + 1)), 0.1, basis3)


class TestTheoremRuc:
    def test_mode2_eps_half(self, basis3):
        pert = stability.make_admissible_perturbation(unit_mode(basis3, 2),
                                                      0.5, basis3)
        v = stability.verify_theorem_ruc(pert)
        assert v.passed
        assert v.margin > 0

    @pytest.mark.parametrize("eps", [1e-2, 1e-3])
    def test_small_eps_ratio_above_one(self, basis3, eps):
        pert = stability.make_admissible_perturbation(unit_mode(basis3, 2),
                                                      eps, basis3)
        v = stability.verify_theorem_ruc(pert)
        assert v.lhs / v.rhs >= 1.0

    def test_zero_direction_rejected(self, basis3):
        us = core.u_star(3, basis3.grid)
        pert = stability.Perturbation(g=core.zero_fn(basis3.grid), epsilon=0.5,
                                      u_eps=us, sup_ratio=0.0, overlap=0.0)
        with pytest.raises(InputError):
            stability.verify_theorem_ruc(pert)

    def test_proof_side_factor_positive_and_monotone(self):
        # the lower-bound factor 1/(n+4) - eps/(3(n+2)) stays positive on
        # (0,1) and decreases in eps
        for n in (3, 4, 5):
            eps = np.linspace(1e-6, 1 - 1e-6, 101)
            factor = 1.0 / (n + 4) - eps / (3.0 * (n + 2))
            assert np.all(factor > 0)
            assert np.all(np.diff(factor) < 0)

    def test_measured_ratio_recorded(self, basis3):
        ratios = []
        for eps in (0.1, 0.5, 0.9):
            pert = stability.make_admissible_perturbation(
                unit_mode(basis3, 2), eps, basis3)
            v = stability.verify_theorem_ruc(pert)
            ratios.append(v.params["ratio"])
        assert all(r >= 1.0 for r in ratios)


class TestTheoremStar:
    def test_measured_eta_star_then_pass(self, basis3):
        pert = stability.make_admissible_perturbation(unit_mode(basis3, 2),
                                                      0.05, basis3)
        f = pert.u_eps
        _, X, _, eta_star = stability.condition_k_threshold(f)
        # the weighted norm of the normalized difference dominates mu_2
        assert X >= (3 + 2) * (3 + 4) - 1e-6
        v = stability.verify_theorem_star(f, eta_star / 2.0, basis3)
        assert v.passed
        assert v.lhs >= v.rhs - v.quad_error

    def test_optimizer_rejected(self, basis3):
        with pytest.raises(InputError):
            stability.verify_theorem_star(core.u_star(3, basis3.grid), 1.0,
                                          basis3)

    def test_eta_zero_rejected(self, basis3):
        pert = stability.make_admissible_perturbation(unit_mode(basis3, 2),
                                                      0.05, basis3)
        with pytest.raises(InputError):
            stability.verify_theorem_star(pert.u_eps, 0.0, basis3)

    def test_oversized_eta_not_applicable(self, basis3):
        pert = stability.make_admissible_perturbation(unit_mode(basis3, 2),
                                                      0.05, basis3)
        _, _, _, eta_star = stability.condition_k_threshold(pert.u_eps)
        v = stability.verify_theorem_star(pert.u_eps, 4.0 * eta_star, basis3)
        assert v.status == NOT_APPLICABLE
        assert "eta_star" in v.params


class TestProposition:
    def test_ustar_with_small_K(self, grid3):
        us = core.u_star(3, grid3)
        v = stability.verify_proposition(us, 0.5)
        assert v.passed
        # X = Y = int u*^p = pi^2/4 at n = 3
        assert v.params["X"] == pytest.approx(math.pi ** 2 / 4, rel=1e-10)
        assert v.params["Y"] == pytest.approx(math.pi ** 2 / 4, rel=1e-10)

    def test_zero_degenerate(self, grid3):
        v = stability.verify_proposition(core.zero_fn(grid3), 0.5)
        assert v.passed

    def test_weighted_mode_with_margin(self, grid3, basis3):
        w = stability.weight_profile(grid3)
        h = core.RadialFn(grid3, w * basis3.functions[2].values, 5.0)
        r = grid3.radii
        X = grid3.integrate(h.values ** 2 * (1 + r * r) ** 2)
        Y = grid3.integrate(np.abs(h.values) ** 3 * (1 + r * r) ** 4.5)
        v = stability.verify_proposition(h, 0.9 * X / Y)
        assert v.passed
        assert min(v.params["margin_X"], v.params["margin_Y"],
                   v.params["margin_norm"]) >= -v.quad_error

    def test_hypothesis_violation_not_applicable(self, grid3, basis3):
        w = stability.weight_profile(grid3)
        h = core.RadialFn(grid3, w * basis3.functions[2].values, 5.0)
        r = grid3.radii
        X = grid3.integrate(h.values ** 2 * (1 + r * r) ** 2)
        Y = grid3.integrate(np.abs(h.values) ** 3 * (1 + r * r) ** 4.5)
        v = stability.verify_proposition(h, 1.5 * X / Y)
        assert v.status == NOT_APPLICABLE

    def test_slow_tail_rejected(self, grid3):
        us = core.u_star(3, grid3)
        slow = core.RadialFn(grid3, us.values, 3.5)   # 3*beta < 2n+6
        with pytest.raises(InputError):
            stability.verify_proposition(slow, 1.0)


class TestProjection:
    def test_member_of_manifold(self, grid3):
        point, dist = stability.project_to_manifold(core.u_star(3, grid3))
        assert point.mu == pytest.approx(1.0, abs=1e-6)
        assert point.sigma == pytest.approx(1.0, abs=1e-6)
        assert dist < 1e-8

    def test_scaled_member(self, grid3):
        f = core.from_callable(
            grid3, lambda r: 3.0 * (1 + (2 * r) ** 2) ** (-2.5), 5.0)
        point, dist = stability.project_to_manifold(f)
        assert point.mu == pytest.approx(3.0, rel=1e-6)
        assert point.sigma == pytest.approx(2.0, rel=1e-6)
        assert dist < 1e-6

    def test_perturbation_no_worse_than_base_point(self, grid3, basis3):
        w = stability.weight_profile(grid3)
        f = core.RadialFn(
            grid3, core.u_star(3, grid3).values
            + 0.1 * w * basis3.functions[2].values, 5.0)
        point, dist = stability.project_to_manifold(f)
        naive = potential.h_minus1_norm(f - core.u_star(3, grid3))
        assert dist > 0
        assert dist <= naive * (1 + 1e-10)

    def test_local_minimum_certificate(self, grid3, basis3):
        w = stability.weight_profile(grid3)
        f = core.RadialFn(
            grid3, core.u_star(3, grid3).values
            + 0.1 * w * basis3.functions[3].values, 5.0)
        point, dist = stability.project_to_manifold(f)
        qf_f = potential.hls_quadratic_form(f)
        qf_star = potential.hls_quadratic_form(core.u_star(3, grid3))
        for bump in (0.99, 1.01):
            val, _ = stability._projection_distance_sq(
                f, qf_f, point.sigma * bump, qf_star)
            assert val >= dist ** 2 - 1e-12

    def test_zero_rejected(self, grid3):
        with pytest.raises(InputError):
            stability.project_to_manifold(core.zero_fn(grid3))
