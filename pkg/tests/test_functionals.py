import math

import numpy as np
import pytest

from hlsverify import core, functionals, spectral, stability
from hlsverify.errors import InputError
from hlsverify.verdicts import NOT_APPLICABLE


def weighted_direction(grid, basis, mode=2, amp=1.0):
    """amp * u*^{4/(n+2)} * g_mode, tail n+2."""
    w = stability.weight_profile(grid)
    return core.RadialFn(grid, amp * w * basis.functions[mode].values,
                         float(grid.n + 2))


class TestHlsDeficit:
    def test_zero_at_optimizer(self, grid3):
        us = core.u_star(3, grid3)
        rep = functionals.hls_deficit(us)
        lp = core.lp_norm(us, core.lp_exponent(3))
        assert abs(rep.value) < 1e-8 * lp ** 2
        assert rep.value == rep.lhs - rep.rhs

    def test_scaling_of_raw_deficit(self, grid3):
        us = core.u_star(3, grid3)
        rep1 = functionals.hls_deficit(us)
        rep2 = functionals.hls_deficit(2.0 * us)
        scale = core.lp_norm(us, core.lp_exponent(3)) ** 2
        assert abs(rep2.norms_used["raw_deficit"]
                   - 4.0 * rep1.norms_used["raw_deficit"]) < 1e-8 * scale
        assert abs(rep2.norms_used["raw_deficit"]) < 1e-8 * scale

    def test_perturbed_lower_and_upper(self, grid3, basis3):
        eps = 0.1
        g2 = basis3.functions[2]
        direction = weighted_direction(grid3, basis3, 2)
        u = core.u_star(3, grid3) + eps * direction
        rep = functionals.hls_deficit(u)
        assert rep.value >= -rep.quad_error
        ratio = rep.value / (eps ** 2 * core.weighted_norm(g2) ** 2)
        sc = core.sharp_constants(3)
        assert ratio >= sc.kappa_n
        # bounded above by the second-variation scale C_n M[g] normalization
        assert ratio <= 1.0 / (3 * (3 + 2))   # C_n M[g]/||g||_w^2 = 1/(n(n+2))

    def test_agrees_with_raw_form(self, grid3, basis3):
        u = core.u_star(3, grid3) + 0.3 * weighted_direction(grid3, basis3, 3)
        rep = functionals.hls_deficit(u)
        assert rep.value == pytest.approx(rep.norms_used["raw_deficit"],
                                          abs=2e-10)


class TestSobolevDeficit:
    def test_zero_at_optimizer(self, grid3):
        f0 = core.basis_function(3, grid3, 0)
        rep = functionals.sobolev_deficit(f0)
        assert abs(rep.value) < 1e-6 * rep.lhs

    def test_zero_function(self, grid3):
        rep = functionals.sobolev_deficit(core.zero_fn(grid3))
        assert rep.value == 0.0

    def test_scaling_invariance_at_optimizer(self, grid3):
        scaled = core.from_callable(
            grid3, lambda r: (1 + (r / 2.0) ** 2) ** (-0.5), 1.0)
        rep = functionals.sobolev_deficit(scaled)
        assert abs(rep.value) < 1e-6 * rep.lhs

    def test_positive_off_optimizer(self, grid3):
        g = core.from_callable(grid3, lambda r: np.exp(-r * r), math.inf)
        rep = functionals.sobolev_deficit(g)
        assert rep.value > 0


class TestCclDeficit:
    def test_n3_formula(self, grid3):
        # at n=3 the exponent pair is p=2: C_3 (3/4) ||grad g||_2^2 ||g||_3^2
        # minus ||g||_4^4
        g = core.from_callable(grid3, lambda r: np.exp(-r * r), math.inf)
        rep = functionals.ccl_gns_deficit(g)
        sc = core.sharp_constants(3)
        grad2, _ = core.gradient_norm_squared_reported(g)
        expected = (sc.C_n * 0.75 * grad2 * core.lp_norm(g, 3.0) ** 2
                    - core.lp_norm(g, 4.0) ** 4)
        assert rep.value == pytest.approx(expected, rel=1e-12)
        assert rep.value >= -rep.quad_error

    def test_zero_function(self, grid3):
        assert functionals.ccl_gns_deficit(core.zero_fn(grid3)).value == 0.0

    @pytest.mark.parametrize("n", [3, 4])
    def test_zero_at_optimizer(self, n, grid3, grid4):
        # equality profile (1+r^2)^{-1/(p-1)}, p = (n+1)/(n-1); the positive
        # exponent form sometimes quoted is not even integrable
        grid = grid3 if n == 3 else grid4
        p = (n + 1.0) / (n - 1.0)
        opt = core.from_callable(
            grid, lambda r: (1 + r * r) ** (-1.0 / (p - 1.0)), 2.0 / (p - 1.0))
        rep = functionals.ccl_gns_deficit(opt)
        assert abs(rep.value) < 1e-6 * rep.lhs

    def test_scale_invariance_and_zero_of_family(self, grid3):
        # the deficit is invariant under dilations, so all rescalings of the
        # equality profile also vanish
        n, p = 3, 2.0
        for sigma in (0.5, 1.0, 2.0):
            g = core.from_callable(
                grid3, lambda r: (1 + (sigma * r) ** 2) ** (-1.0 / (p - 1.0)),
                2.0 / (p - 1.0))
            rep = functionals.ccl_gns_deficit(g)
            assert abs(rep.value) < 1e-6 * rep.lhs

    def test_minimum_over_exponent_family(self, grid3):
        # scanning the tail exponent confirms the zero sits at 1/(p-1)
        n, p = 3, 2.0
        vals = []
        scan = (0.7, 0.85, 1.0, 1.2, 1.5)
        for a in scan:
            g = core.from_callable(
                grid3, lambda r: (1 + r * r) ** (-a / (p - 1.0)),
                2.0 * a / (p - 1.0))
            rep = functionals.ccl_gns_deficit(g)
            assert rep.value >= -rep.quad_error
            vals.append(rep.value)
        assert np.argmin(vals) == 2
        assert vals[2] < 1e-6 * max(vals)


class TestStabilityQuotient:
    def test_perturbed_above_kappa(self, grid3, basis3):
        us = core.u_star(3, grid3)
        f = us + 0.1 * weighted_direction(grid3, basis3, 2)
        q = functionals.stability_quotient(f, us)
        sc = core.sharp_constants(3)
        assert q >= (3 + 2) * (3 + 4) * sc.kappa_n
        assert (3 + 2) * (3 + 4) * sc.kappa_n == pytest.approx(0.7111111111,
                                                               rel=1e-9)

    def test_scaled_optimizer_quotient_vanishes(self, grid3):
        us = core.u_star(3, grid3)
        q = functionals.stability_quotient(2.0 * us, us)
        assert abs(q) < 1e-6

    def test_small_eps_trend(self, grid3, basis3):
        us = core.u_star(3, grid3)
        direction = weighted_direction(grid3, basis3, 2)
        qs = [functionals.stability_quotient(us + eps * direction, us)
              for eps in (0.1, 0.01, 0.001)]
        # monotone trend converging to the second-variation limit
        assert qs[0] < qs[1] < qs[2]
        assert all(q > 0 for q in qs)
        assert abs(qs[2] - qs[1]) < abs(qs[1] - qs[0])

    def test_identical_inputs_rejected(self, grid3):
        us = core.u_star(3, grid3)
        with pytest.raises(InputError):
            functionals.stability_quotient(us, us)


class TestHolder:
    def test_equality_at_optimizer(self, grid3):
        v = functionals.holder_upper_bound(core.u_star(3, grid3))
        assert v.passed
        assert abs(v.params["relative_gap"]) < 1e-8

    def test_zero(self, grid3):
        v = functionals.holder_upper_bound(core.zero_fn(grid3))
        assert v.passed

    def test_strict_on_perturbation(self, grid3, basis3):
        f = core.u_star(3, grid3) + 0.3 * weighted_direction(grid3, basis3, 2)
        v = functionals.holder_upper_bound(f)
        assert v.passed
        assert v.margin > 10 * v.quad_error


class TestPck:
    def test_optimizer_all_zero(self, grid3):
        v = functionals.pck_lower_bound(core.u_star(3, grid3))
        assert v.passed
        assert abs(v.lhs) < 1e-10 and abs(v.rhs) < 1e-10

    def test_scaled_optimizer(self, grid3):
        v = functionals.pck_lower_bound(1.2 * core.u_star(3, grid3))
        assert v.passed
        assert v.params["margin_first"] > 0
        assert v.params["margin_second"] > 0

    def test_perturbation(self, grid3, basis3):
        f = core.u_star(3, grid3) + 0.2 * weighted_direction(grid3, basis3, 2)
        v = functionals.pck_lower_bound(f)
        assert v.status in ("pass", NOT_APPLICABLE)
        if v.status == "pass":
            assert v.margin >= -v.quad_error

    def test_smaller_norm_not_applicable(self, grid3):
        v = functionals.pck_lower_bound(0.5 * core.u_star(3, grid3))
        assert v.status == NOT_APPLICABLE


class TestDuality:
    def test_both_sides_vanish_at_optimizer(self, grid3):
        us = core.u_star(3, grid3)
        v = functionals.duality_square_bound(us)
        scale = core.lp_norm(us, core.lp_exponent(3)) ** 2
        assert abs(v.lhs) < 1e-8 * scale and abs(v.rhs) < 1e-8 * scale
        assert v.passed

    def test_scaled_optimizer(self, grid3):
        v = functionals.duality_square_bound(1.5 * core.u_star(3, grid3))
        assert v.passed

    def test_perturbation_margin_equals_square(self, grid3, basis3):
        g = core.u_star(3, grid3) + 0.3 * weighted_direction(grid3, basis3, 2)
        assert np.all(g.values > 0)
        v = functionals.duality_square_bound(g)
        assert v.passed
        assert v.params["square_agreement"] < 1e-6
        assert v.margin == pytest.approx(v.params["square_value"], rel=1e-6)

    def test_nonpositive_rejected(self, grid3, basis3):
        g = core.u_star(3, grid3) + 2.0 * weighted_direction(grid3, basis3, 2)
        assert np.any(g.values < 0)
        with pytest.raises(InputError):
            functionals.duality_square_bound(g)


class TestScalingInvarianceOfVerdicts:
    @pytest.mark.parametrize("c", [0.3, 2.0, 7.5])
    def test_holder_ratio_scale_invariant(self, grid3, basis3, c):
        f = core.u_star(3, grid3) + 0.2 * weighted_direction(grid3, basis3, 3)
        v1 = functionals.holder_upper_bound(f)
        v2 = functionals.holder_upper_bound(c * f)
        assert v1.passed == v2.passed
        assert v1.lhs / v1.rhs == pytest.approx(v2.lhs / v2.rhs, rel=1e-8)

    @pytest.mark.parametrize("c", [0.5, 3.0])
    def test_duality_ratio_scale_invariant(self, grid3, basis3, c):
        g = core.u_star(3, grid3) + 0.2 * weighted_direction(grid3, basis3, 2)
        v1 = functionals.duality_square_bound(g)
        v2 = functionals.duality_square_bound(c * g)
        assert v1.passed == v2.passed
        assert v1.rhs / v1.lhs == pytest.approx(v2.rhs / v2.lhs, rel=1e-6)


class TestNonnegativityRandomized:
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_deficits_nonnegative(self, n, request):
        grid = request.getfixturevalue(f"grid{n}")
        basis = request.getfixturevalue(f"basis{n}")
        rng = np.random.default_rng(100 + n)
        us = core.u_star(n, grid)
        w = stability.weight_profile(grid)
        for _ in range(200):
            coeffs = np.zeros(basis.K + 1)
            coeffs[2:] = rng.normal(size=basis.K - 1)
            gmix = spectral.synthesize(spectral.SpectralCoeffs(coeffs), basis)
            eps = rng.uniform(0.05, 0.8)
            f0 = core.basis_function(n, grid, 0)
            scale = np.max(np.abs(gmix.values) / f0.values)
            u = core.RadialFn(grid, us.values
                              + eps * w * gmix.values / scale, float(n + 2))
            rep = functionals.hls_deficit(u)
            assert rep.value >= -rep.quad_error
            vm = (n - 2.0) / (n + 2.0)
            v = core.RadialFn(grid, u.values ** vm, u.tail_exponent * vm)
            rep2 = functionals.sobolev_deficit(v)
            assert rep2.value >= -rep2.quad_error
            wm = (n - 1.0) / (n + 2.0)
            h = core.RadialFn(grid, u.values ** wm, u.tail_exponent * wm)
            rep3 = functionals.ccl_gns_deficit(h)
            assert rep3.value >= -rep3.quad_error
