"""Radial fast-diffusion solver u_t = Delta u^m and flow-based deficit checks.

The solver uses its own cell-centered finite-volume discretization, uniform
in the same stretched coordinate as the main grids (smooth grading, so the
conservative 3-point Laplacian is second order), implicit Euler in time with
a damped Newton iteration whose line search preserves positivity without
clipping.  Functionals along the flow are always evaluated back on a
spectral RadialGrid via spline transfer in the stretched coordinate.

For m = (n-2)/(n+2) the sharp-constant deficit obeys (verified here)

    d/dt ( C_n ||u||_p^2 - int u (-Delta)^{-1} u )
        = -2 C_n ||u||_p^{4/(n+2)} * D[u^m],
    D[g] = ||grad g||_2^2 - S_n ||g||_q^2,

so the deficit is non-increasing and its decrement over [0, T] (extinction)
integrates the right side.  Multiples of u* evolve separably,
a(t) = (a_0^{1-m} - (1-m) n (n-2) t)^{1/(1-m)}, which pins the extinction
time estimate.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import ConvergenceError, InputError
from .core import (RadialFn, RadialGrid, lp_exponent, lp_norm_reported,
                   sharp_constants, surface_area)
from .functionals import ccl_gns_deficit, hls_deficit, sobolev_deficit
from .verdicts import EXPLORATORY, StabilityVerdict, make_verdict

_MAX_HALVINGS = 8
_NEWTON_MAX = 40


class FlowDomain:
    """Cell-centered finite-volume mesh, uniform in s with r = c s/(1-s)."""

    def __init__(self, n: int, cells: int = 1600, r_max: float = 1.0e4,
                 core_scale: float = 2.0):
        self.n = n
        self.cells = cells
        self.r_max = r_max
        self.core_scale = core_scale
        s_max = r_max / (core_scale + r_max)
        # faces uniform in s over the core, geometric in 1-s outside, so the
        # relative cell width Delta r / r stays small at every radius
        s_core = 0.8
        if s_max <= s_core or cells < 8:
            s_faces = np.linspace(0.0, s_max, cells + 1)
        else:
            half = cells // 2
            core_faces = np.linspace(0.0, s_core, half + 1)
            ratio = ((1.0 - s_max) / (1.0 - s_core)) ** (1.0 / (cells - half))
            tail_faces = 1.0 - (1.0 - s_core) * ratio ** np.arange(
                1, cells - half + 1)
            s_faces = np.concatenate([core_faces, tail_faces])
            s_faces[-1] = s_max
        s_centers = (s_faces[:-1] + s_faces[1:]) / 2.0
        self.s_centers = s_centers
        self.r = core_scale * s_centers / (1.0 - s_centers)
        self.r_faces = core_scale * s_faces / (1.0 - s_faces)
        dr_cell = np.diff(self.r_faces)
        self.cell_volume = (surface_area(n) * self.r ** (n - 1) * dr_cell)
        # conservative Laplacian L(v)_j = A_j (v_{j+1}-v_j) - B_j (v_j-v_{j-1})
        area = self.r_faces ** (n - 1)
        dr_face = np.diff(self.r)
        geo = self.r ** (n - 1) * dr_cell
        self.A = np.zeros(cells)
        self.B = np.zeros(cells)
        self.A[:-1] = area[1:-1] / (geo[:-1] * dr_face)
        self.B[1:] = area[1:-1] / (geo[1:] * dr_face)
        # inner face (r=0): zero flux by symmetry; outer face: matched tail

    def laplacian_tridiag(self, tail_ratio: float):
        """Sub/diag/super coefficient arrays of L with the outer ghost value
        set to tail_ratio * v_last (power-law matched Dirichlet)."""
        sub = self.B.copy()
        sup = self.A.copy()
        diag = -(self.A + self.B)
        area_out = self.r_faces[-1] ** (self.n - 1)
        geo_last = (self.r[-1] ** (self.n - 1)
                    * (self.r_faces[-1] - self.r_faces[-2]))
        dr_ghost = self.r_faces[-1] - self.r[-1]
        diag[-1] += (tail_ratio - 1.0) * area_out / (geo_last * 2.0 * dr_ghost)
        return sub, diag, sup

    def apply(self, tri, v):
        sub, diag, sup = tri
        out = diag * v
        out[:-1] += sup[:-1] * v[1:]
        out[1:] += sub[1:] * v[:-1]
        return out


@dataclass(frozen=True)
class FlowState:
    t: float
    values: np.ndarray        # cell averages, nonnegative
    m: float                  # diffusion exponent
    dt: float                 # last accepted step
    domain: FlowDomain
    standard_exponent: bool = True

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
            raise InputError("flow state must be nonnegative and finite")
        if vals.flags.writeable:
            vals = vals.copy()
            vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def mass(self) -> float:
        return float(self.domain.cell_volume @ self.values)


def standard_exponents(n: int):
    return (n / (n + 2.0), (n - 2.0) / (n + 2.0))


def make_flow_state(u0: RadialFn, m: float, cells: int = 1600) -> FlowState:
    """Transfer an initial datum onto the solver mesh."""
    if np.any(u0.values < 0.0):
        raise InputError("initial datum must be nonnegative")
    if not 0.0 < m < 1.0:
        raise InputError(f"fast-diffusion exponent must lie in (0,1), got {m}")
    domain = FlowDomain(u0.grid.n, cells=cells, r_max=u0.grid.r_max,
                        core_scale=u0.grid.core_scale)
    spline = CubicSpline(u0.grid.s_nodes, u0.values)
    vals = np.maximum(spline(domain.s_centers), 0.0)
    std = any(abs(m - me) < 1.0e-12 for me in standard_exponents(u0.grid.n))
    return FlowState(t=0.0, values=vals, m=m, dt=0.0, domain=domain,
                     standard_exponent=std)


def state_to_radial_fn(state: FlowState, grid: RadialGrid) -> RadialFn:
    """Spline transfer of a flow state back onto a spectral grid; outside the
    outermost cell center the measured power-law tail is continued."""
    dom = state.domain
    spline = CubicSpline(dom.s_centers, state.values, extrapolate=True)
    vals = np.maximum(spline(grid.s_nodes), 0.0)
    tail = _measured_tail(dom, state.values, fallback=float(grid.n + 2))
    outer = grid.s_nodes > dom.s_centers[-1]
    if np.any(outer):
        u_last = state.values[-1]
        if u_last > 0.0:
            vals[outer] = u_last * (dom.r[-1] / grid.radii[outer]) ** tail
        else:
            vals[outer] = 0.0
    return RadialFn(grid, vals, tail)


def _measured_tail(dom: FlowDomain, vals, fallback: float) -> float:
    j2 = len(vals) - 1
    j1 = int(np.searchsorted(dom.r, dom.r[j2] / 8.0))
    if vals[j1] > 0.0 and vals[j2] > 0.0 and j1 < j2:
        slope = (math.log(vals[j1]) - math.log(vals[j2])) \
            / (math.log(dom.r[j2]) - math.log(dom.r[j1]))
        if 0.5 < slope < 4.0 * fallback:
            return slope
    return fallback


def _tail_ratio(dom: FlowDomain, v: np.ndarray) -> float:
    """Ghost/last ratio of u^m from the measured power-law tail."""
    if v[-1] <= 0.0 or v[-2] <= 0.0:
        return 1.0
    slope = (math.log(v[-2]) - math.log(v[-1])) \
        / (math.log(dom.r[-1]) - math.log(dom.r[-2]))
    r_ghost = 2.0 * dom.r_faces[-1] - dom.r[-1]
    return (dom.r[-1] / r_ghost) ** slope


def step(state: FlowState, dt: float) -> FlowState:
    """One implicit Euler step; on Newton failure the step is rejected and
    retried with dt/2 (bounded), so the returned state may advance less."""
    if not dt > 0.0:
        raise InputError(f"dt must be positive, got {dt}")
    if float(np.max(state.values)) == 0.0:
        return replace(state, t=state.t + dt, dt=dt)

    attempt = dt
    for _ in range(_MAX_HALVINGS + 1):
        new_vals = _implicit_step(state, attempt)
        if new_vals is not None:
            return replace(state, t=state.t + attempt, values=new_vals,
                           dt=attempt)
        attempt /= 2.0
    raise ConvergenceError(
        f"Newton failed at t={state.t:.6g} even after {_MAX_HALVINGS} "
        f"halvings of dt={dt:.3g}")


def _implicit_step(state: FlowState, dt: float):
    """Backward Euler in the pressure-like variable v = u^m, in which the
    diffusion term is linear and d(v^{1/m})/dv vanishes (rather than blowing
    up) where the solution is tiny."""
    dom = state.domain
    m = state.m
    u_old = state.values
    v = np.maximum(u_old, 1e-300) ** m
    tri = dom.laplacian_tridiag(_tail_ratio(dom, v))
    sub, diag, sup = tri
    scale = float(np.max(u_old))

    def residual(vv):
        return vv ** (1.0 / m) - u_old - dt * dom.apply(tri, vv)

    res = residual(v)
    res_norm = float(np.max(np.abs(res)))
    for _ in range(_NEWTON_MAX):
        if res_norm <= 1.0e-12 * scale:
            return v ** (1.0 / m)
        deriv = (1.0 / m) * v ** (1.0 / m - 1.0)
        band = np.zeros((3, dom.cells))
        band[0, 1:] = -dt * sup[:-1]
        band[1, :] = deriv - dt * diag
        band[2, :-1] = -dt * sub[1:]
        try:
            delta = solve_banded((1, 1), band, -res)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        for _ in range(40):
            trial = v + lam * delta
            if np.all(trial > 0.0):
                trial_res = residual(trial)
                trial_norm = float(np.max(np.abs(trial_res)))
                if trial_norm <= (1.0 - 0.25 * lam) * res_norm \
                        or trial_norm <= 1.0e-12 * scale:
                    v, res, res_norm = trial, trial_res, trial_norm
                    break
            lam /= 2.0
        else:
            return None
    return None


def evolve_to(state: FlowState, t_target: float, dt: float) -> FlowState:
    """Advance with steps of at most dt, landing exactly on t_target."""
    while state.t < t_target - 1.0e-14:
        state = step(state, min(dt, t_target - state.t))
    return state


def estimate_extinction_time(state: FlowState) -> float:
    """Extinction estimate anchored on the separable solution a(t) u*."""
    n = state.domain.n
    m = state.m
    amp = float(np.max(state.values))
    if amp == 0.0:
        return state.t
    return state.t + amp ** (1.0 - m) / ((1.0 - m) * n * (n - 2))


# -- deficit functionals along the flow ---------------------------------------

def _raw_deficit(u: RadialFn, sc) -> float:
    report = hls_deficit(u)
    return report.norms_used["raw_deficit"]


def _identity_rhs(u: RadialFn, m: float, sc) -> float:
    """2 C_n ||u||_p^{4/(n+2)} D[u^m] (the exact dissipation rate)."""
    n = u.grid.n
    p = lp_exponent(n)
    lp_u, _ = lp_norm_reported(u, p)
    v = RadialFn(u.grid, np.maximum(u.values, 0.0) ** m, u.tail_exponent * m)
    dv = sobolev_deficit(v)
    return 2.0 * sc.C_n * lp_u ** (2.0 - p) * dv.value


def _flow_observables(u0: RadialFn, m: float, horizon: float, dt: float,
                      samples: int, cells: int):
    """Run the flow, returning raw deficits at sample times and the running
    integral of the dissipation rate (per-step trapezoid)."""
    grid = u0.grid
    sc = sharp_constants(grid.n)
    state = make_flow_state(u0, m, cells=cells)
    t_samples = np.linspace(0.0, horizon, samples)
    deficits = np.empty(samples)
    rates = np.empty(samples)

    u_now = state_to_radial_fn(state, grid)
    deficits[0] = _raw_deficit(u_now, sc)
    rates[0] = _identity_rhs(u_now, m, sc)
    integral = 0.0
    rate_prev = rates[0]
    t_prev = 0.0
    for j in range(1, samples):
        while state.t < t_samples[j] - 1.0e-14:
            state = step(state, min(dt, t_samples[j] - state.t))
            u_now = state_to_radial_fn(state, grid)
            rate = _identity_rhs(u_now, m, sc)
            integral += 0.5 * (rate + rate_prev) * (state.t - t_prev)
            rate_prev, t_prev = rate, state.t
        deficits[j] = _raw_deficit(u_now, sc)
        rates[j] = rate_prev
    return t_samples, deficits, rates, integral, state


def deficit_identity_check_critical(u0: RadialFn, horizon: float,
                                    dt: float | None = None,
                                    samples: int = 17, cells: int = 1600,
                                    richardson: bool = True,
                                    tol_derivative: float = 0.01,
                                    tol_integral: float = 0.02
                                    ) -> StabilityVerdict:
    """Verify along the m=(n-2)/(n+2) flow that (a) the time derivative of
    the raw sharp-constant deficit matches -2 C_n ||u||_p^{4/(n+2)} D[u^m]
    (Richardson-extrapolated in dt) and (b) the deficit decrement over
    [0, horizon] balances the time integral of the same rate."""
    n = u0.grid.n
    m = (n - 2.0) / (n + 2.0)
    if float(np.max(u0.values)) == 0.0:
        return make_verdict(lhs=0.0, rhs=0.0, margin=0.0, quad_error=1e-15,
                            note="zero datum: both sides vanish")
    T_est = estimate_extinction_time(make_flow_state(u0, m, cells=min(cells, 400)))
    partial = False
    if horizon >= 0.9 * T_est:
        horizon = 0.8 * T_est
        partial = True
    if dt is None:
        dt = horizon / (16.0 * (samples - 1))

    runs = []
    for factor in ((1, 2) if richardson else (1,)):
        runs.append(_flow_observables(u0, m, horizon, dt / factor, samples,
                                      cells))
    t_s = runs[0][0]
    if richardson:
        deficits = 2.0 * runs[1][1] - runs[0][1]
        rates = 2.0 * runs[1][2] - runs[0][2]
        integral = 2.0 * runs[1][3] - runs[0][3]
    else:
        _, deficits, rates, integral, _ = runs[0]

    h = t_s[1] - t_s[0]
    ddt = (deficits[2:] - deficits[:-2]) / (2.0 * h)
    rate_mid = rates[1:-1]
    scale = float(np.max(np.abs(rate_mid)))
    # equality-case data: both sides vanish; the relative identity is 0/0
    sc = sharp_constants(n)
    lp_u0, _ = lp_norm_reported(u0, lp_exponent(n))
    vanish_floor = 1.0e-4 * sc.C_n * lp_u0 ** 2 / max(T_est, 1e-300)
    if scale <= vanish_floor and float(np.max(np.abs(ddt))) <= vanish_floor:
        return make_verdict(lhs=scale, rhs=vanish_floor, margin=0.0,
                            quad_error=1e-15, degenerate=True, T_est=T_est,
                            note="both sides vanish (equality-case datum)")
    rel_derivative = (float(np.max(np.abs(ddt + rate_mid))) / scale
                      if scale > 0 else 0.0)

    decrement = deficits[0] - deficits[-1]
    rel_integral = abs(decrement - integral) / max(abs(decrement),
                                                   abs(integral), 1e-300)
    margin = min(tol_derivative - rel_derivative, tol_integral - rel_integral)
    return make_verdict(lhs=rel_derivative, rhs=tol_derivative, margin=margin,
                        quad_error=0.0, rel_derivative=rel_derivative,
                        rel_integral=rel_integral, tol_integral=tol_integral,
                        partial=partial, T_est=T_est, horizon=horizon,
                        samples=[{"t": float(t), "deficit": float(d),
                                  "rate": float(rr)}
                                 for t, d, rr in zip(t_s, deficits, rates)])


def deficit_monotonicity_check(u0: RadialFn, horizon: float,
                               dt: float | None = None, samples: int = 33,
                               cells: int = 1600) -> StabilityVerdict:
    """Check that D[u^m(t_j)] is non-increasing (within per-sample error)
    along the m=(n-2)/(n+2) flow, trending to zero near extinction."""
    grid = u0.grid
    n = grid.n
    m = (n - 2.0) / (n + 2.0)
    if samples < 2 or horizon == 0.0:
        return make_verdict(lhs=0.0, rhs=0.0, margin=0.0, quad_error=1e-15,
                            note="single sample: trivially monotone")
    state = make_flow_state(u0, m, cells=cells)
    T_est = estimate_extinction_time(state)
    partial = False
    if horizon >= 0.9 * T_est:
        horizon = 0.8 * T_est
        partial = True
    if dt is None:
        dt = horizon / (8.0 * (samples - 1))
    t_samples = np.linspace(0.0, horizon, samples)
    values = []
    errors = []
    for j, tj in enumerate(t_samples):
        if j > 0:
            state = evolve_to(state, tj, dt)
        u_now = state_to_radial_fn(state, grid)
        v = RadialFn(grid, np.maximum(u_now.values, 0.0) ** m,
                     u_now.tail_exponent * m)
        rep = sobolev_deficit(v)
        values.append(rep.value)
        errors.append(rep.quad_error)
    values = np.array(values)
    errors = np.array(errors)
    tol = errors[1:] + errors[:-1] + 1.0e-9 * max(values[0], 0.0)
    increments = values[1:] - values[:-1]
    worst = float(np.max(increments - tol)) if len(increments) else 0.0
    trend = values[-1] / values[0] if values[0] > 0 else 0.0
    return make_verdict(lhs=float(np.max(increments)) if len(increments) else 0.0,
                        rhs=0.0, margin=-worst, quad_error=0.0,
                        trend_ratio=trend, partial=partial, T_est=T_est,
                        samples=[{"t": float(t), "deficit": float(d),
                                  "error": float(e)}
                                 for t, d, e in zip(t_samples, values, errors)])


def ccl_identity_probe(u0: RadialFn, beta: float, horizon: float,
                       dt: float | None = None, samples: int = 33,
                       cells: int = 1200) -> StabilityVerdict:
    """EXPLORATORY: compare the raw sharp-constant deficit of the datum with

        (8/(n+2)) int_0^{horizon} e^{beta t}
                   Dgns[u^{(n-1)/(n+2)}(., e^{beta t})] dt

    along the m = n/(n+2) flow (Dgns is the product-form deficit).  The time
    rescaling exponent beta is caller-supplied; only the residual is
    reported, no pass/fail is asserted."""
    grid = u0.grid
    n = grid.n
    if not beta > 0.0:
        raise InputError(f"beta must be positive, got {beta}")
    m = n / (n + 2.0)
    sc = sharp_constants(n)
    lhs = _raw_deficit(u0, sc)
    if float(np.max(u0.values)) == 0.0:
        return StabilityVerdict(lhs=0.0, rhs=0.0, margin=0.0, passed=True,
                                status=EXPLORATORY,
                                params={"residual": 0.0, "beta": beta})

    s_end = math.exp(beta * horizon)
    if dt is None:
        dt = s_end / (8.0 * (samples - 1) * max(1.0, beta))
    state = make_flow_state(u0, m, cells=cells)
    flow_times = [0.0]
    gns_vals = []

    def gns_at(state):
        u_now = state_to_radial_fn(state, grid)
        w = RadialFn(grid, np.maximum(u_now.values, 0.0) ** ((n - 1.0) / (n + 2.0)),
                     u_now.tail_exponent * (n - 1.0) / (n + 2.0))
        return ccl_gns_deficit(w).value

    gns_vals.append(gns_at(state))
    while state.t < s_end - 1.0e-14:
        state = step(state, min(dt, s_end - state.t))
        flow_times.append(state.t)
        gns_vals.append(gns_at(state))

    t_grid = np.linspace(0.0, horizon, samples)
    interp = np.interp(np.exp(beta * t_grid), flow_times, gns_vals)
    integrand = np.exp(beta * t_grid) * interp
    rhs = 8.0 / (n + 2.0) * float(np.trapezoid(integrand, t_grid))
    tail_est = abs(integrand[-1]) * horizon * 0.5
    residual = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    return StabilityVerdict(lhs=lhs, rhs=rhs, margin=lhs - rhs, passed=True,
                            status=EXPLORATORY,
                            params={"residual": residual, "beta": beta,
                                    "truncation_estimate": tail_est,
                                    "quad_error": 0.0})
