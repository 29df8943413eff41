import math

import numpy as np
import pytest

from hlsverify import core, flow, spectral, stability
from hlsverify.errors import InputError
from hlsverify.verdicts import EXPLORATORY


def perturbed_datum(basis, eps=0.1, mode=2):
    coeffs = np.zeros(basis.K + 1)
    coeffs[mode] = 1.0
    return stability.make_admissible_perturbation(
        spectral.SpectralCoeffs(coeffs), eps, basis).u_eps


class TestStep:
    def test_zero_fixed_point(self, grid3):
        state = flow.make_flow_state(core.zero_fn(grid3), 0.2, cells=400)
        state = flow.step(state, 0.1)
        assert np.all(state.values == 0.0)
        assert state.t == pytest.approx(0.1)

    def test_constant_profile_unchanged(self, grid3):
        ones = core.RadialFn(grid3, np.ones_like(grid3.radii), math.inf)
        state = flow.make_flow_state(ones, 0.2, cells=400)
        new = flow.step(state, 0.01)
        interior = new.domain.r < new.domain.r_max / 10
        assert np.max(np.abs(new.values[interior] - 1.0)) < 1e-8

    def test_separable_solution(self, grid3):
        # multiples of u* evolve as a(t) u* with a'(t) = -n(n-2) a^m
        us = core.u_star(3, grid3)
        m = 0.2
        state = flow.make_flow_state(us, m, cells=1600)
        state = flow.evolve_to(state, 0.05, 5e-4)
        a = (1.0 - (1 - m) * 3.0 * 0.05) ** (1 / (1 - m))
        core_region = state.domain.r < 50
        ratio = state.values[core_region] \
            / (1 + state.domain.r[core_region] ** 2) ** (-2.5)
        assert np.max(np.abs(ratio - a)) < 2e-4

    def test_richardson_ratio_first_order(self, grid3, basis3):
        u0 = perturbed_datum(basis3)
        runs = {}
        for div in (1, 2, 4):
            state = flow.make_flow_state(u0, 0.2, cells=800)
            state = flow.evolve_to(state, 0.02, 2e-3 / div)
            runs[div] = state.values
        num = np.max(np.abs(runs[1] - runs[2]))
        den = np.max(np.abs(runs[2] - runs[4]))
        assert num / den == pytest.approx(2.0, rel=0.2)

    def test_dt_must_be_positive(self, grid3):
        state = flow.make_flow_state(core.u_star(3, grid3), 0.2, cells=400)
        with pytest.raises(InputError):
            flow.step(state, 0.0)

    def test_exponent_flagging(self, grid3):
        us = core.u_star(3, grid3)
        assert flow.make_flow_state(us, 0.2, cells=400).standard_exponent
        assert flow.make_flow_state(us, 0.6, cells=400).standard_exponent
        assert not flow.make_flow_state(us, 0.5, cells=400).standard_exponent
        with pytest.raises(InputError):
            flow.make_flow_state(us, 1.2, cells=400)


class TestInvariants:
    def test_mass_and_lp_norm_decrease(self, grid3, basis3):
        u0 = perturbed_datum(basis3)
        state = flow.make_flow_state(u0, 0.2, cells=800)
        p = core.lp_exponent(3)
        masses, norms = [state.mass], []
        u = flow.state_to_radial_fn(state, grid3)
        norms.append(core.lp_norm(u, p))
        for _ in range(5):
            state = flow.evolve_to(state, state.t + 0.01, 1e-3)
            masses.append(state.mass)
            norms.append(core.lp_norm(flow.state_to_radial_fn(state, grid3), p))
            assert np.all(state.values >= 0.0)
        assert all(a > b for a, b in zip(norms, norms[1:]))

    def test_comparison_principle(self, grid3, basis3):
        lo = flow.make_flow_state(core.u_star(3, grid3), 0.2, cells=800)
        hi = flow.make_flow_state(1.3 * core.u_star(3, grid3), 0.2, cells=800)
        for _ in range(10):
            lo = flow.step(lo, 1e-3)
            hi = flow.step(hi, 1e-3)
            assert np.all(hi.values - lo.values >= -1e-8)

    def test_extinction_estimate_stable_under_dt(self, grid3):
        # concentrated datum: run toward extinction at two resolutions
        u0 = core.from_callable(grid3, lambda r: np.exp(-r * r), math.inf)
        estimates = []
        for dt in (2e-3, 1e-3):
            state = flow.make_flow_state(u0, 0.2, cells=800)
            t_end = 0.6 * flow.estimate_extinction_time(state)
            state = flow.evolve_to(state, t_end, dt)
            estimates.append(flow.estimate_extinction_time(state))
        assert abs(estimates[0] - estimates[1]) < 0.05 * estimates[1]
        # the sup norm is heading to zero
        assert float(np.max(state.values)) < 0.8


class TestIdentity:
    def test_equality_case_degenerate(self, grid3):
        v = flow.deficit_identity_check_critical(core.u_star(3, grid3),
                                                 horizon=0.05, samples=5)
        assert v.passed
        assert v.params.get("degenerate")

    def test_zero_datum(self, grid3):
        v = flow.deficit_identity_check_critical(core.zero_fn(grid3),
                                                 horizon=0.05)
        assert v.passed

    def test_perturbed_datum_matches(self, grid3, basis3):
        u0 = perturbed_datum(basis3)
        v = flow.deficit_identity_check_critical(u0, horizon=0.06, samples=13)
        assert v.passed
        assert v.params["rel_derivative"] < 0.01
        assert v.params["rel_integral"] < 0.02

    def test_richardson_extrapolation_second_order(self, grid3, basis3):
        # extrapolated fixed-time deficits converge at second order in dt
        # (plain implicit Euler is first order); spatial error cancels since
        # all runs share one mesh
        from hlsverify import functionals
        u0 = perturbed_datum(basis3)
        T = 0.04

        def deficit_at(dt):
            state = flow.make_flow_state(u0, 0.2, cells=1600)
            state = flow.evolve_to(state, T, dt)
            u = flow.state_to_radial_fn(state, grid3)
            return functionals.hls_deficit(u).norms_used["raw_deficit"]

        vals = [deficit_at(4e-4 / 2 ** k) for k in range(4)]
        extr = [2 * b - a for a, b in zip(vals, vals[1:])]
        ratio = (extr[1] - extr[0]) / (extr[2] - extr[1])
        assert ratio == pytest.approx(4.0, rel=0.25)

    def test_horizon_past_extinction_partial(self, grid3, basis3):
        u0 = perturbed_datum(basis3, eps=0.05)
        v = flow.deficit_identity_check_critical(u0, horizon=10.0, samples=9,
                                                 cells=800)
        assert v.params["partial"]
        assert v.params["T_est"] < 10.0


class TestMonotonicity:
    def test_perturbed_strictly_decreasing(self, grid3, basis3):
        u0 = perturbed_datum(basis3)
        v = flow.deficit_monotonicity_check(u0, horizon=0.3, samples=17)
        assert v.passed
        ds = [s["deficit"] for s in v.params["samples"]]
        assert all(a > b for a, b in zip(ds, ds[1:]))
        assert v.params["trend_ratio"] < 0.1

    def test_equality_case_constant_zero(self, grid3):
        v = flow.deficit_monotonicity_check(core.u_star(3, grid3),
                                            horizon=0.2, samples=5)
        assert v.passed
        ds = [abs(s["deficit"]) for s in v.params["samples"]]
        assert max(ds) < 1e-4

    def test_single_sample_trivial(self, grid3):
        v = flow.deficit_monotonicity_check(core.u_star(3, grid3),
                                            horizon=0.0, samples=1)
        assert v.passed


class TestCclProbe:
    def test_equality_case(self, grid3):
        v = flow.ccl_identity_probe(core.u_star(3, grid3), beta=1.0,
                                    horizon=0.5, samples=9, cells=600)
        assert v.status == EXPLORATORY
        scale = core.sharp_constants(3).C_n \
            * core.lp_norm(core.u_star(3, grid3), core.lp_exponent(3)) ** 2
        assert abs(v.lhs) < 1e-8 * scale
        assert abs(v.rhs) < 1e-3 * scale

    def test_zero_datum(self, grid3):
        v = flow.ccl_identity_probe(core.zero_fn(grid3), beta=1.0, horizon=0.5)
        assert v.lhs == 0.0 and v.rhs == 0.0

    def test_beta_sweep_reports_residuals(self, grid3, basis3):
        u0 = perturbed_datum(basis3)
        residuals = {}
        for beta in (0.5, 1.0):
            v = flow.ccl_identity_probe(u0, beta=beta, horizon=0.5,
                                        samples=9, cells=600)
            assert v.status == EXPLORATORY
            residuals[beta] = v.params["residual"]
        assert all(math.isfinite(r) for r in residuals.values())

    def test_beta_must_be_positive(self, grid3):
        with pytest.raises(InputError):
            flow.ccl_identity_probe(core.u_star(3, grid3), beta=0.0,
                                    horizon=0.5)
