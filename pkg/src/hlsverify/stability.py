"""Local stability verifiers around the HLS optimizer u* and the projection
onto the manifold of its scalings.

Perturbations are u_eps = u* + eps * u*^{4/(n+2)} * g with g spanned by the
zonal modes k >= 2 (orthogonality to modes 0 and 1; the non-radial
orthogonality conditions hold automatically for radial data).  Admissible
directions are rescaled to saturate the relative-uniform-convergence bound
sup |g| / f0 = 1, which probes the stability statements on the boundary of
their hypothesis.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .core import (RadialFn, basis_function, lp_exponent, lp_norm_reported,
                   sharp_constants, star_norm_squared_reported, u_star,
                   weighted_norm)
from .potential import hls_quadratic_form, hls_quadratic_form_reported
from .spectral import SpectralCoeffs, ZonalBasis, low_mode_overlap, synthesize
from .functionals import hls_deficit
from .verdicts import StabilityVerdict, make_verdict, not_applicable


@dataclass(frozen=True)
class Perturbation:
    g: RadialFn             # direction, orthogonal to modes 0 and 1
    epsilon: float          # in (0, 1)
    u_eps: RadialFn         # u* + eps * u*^{4/(n+2)} * g
    sup_ratio: float        # max |g| / f0 over the nodes (<= 1 when admissible)
    overlap: float          # max |<g, g_k>_w|, k in {0, 1}


@dataclass(frozen=True)
class ManifoldPoint:
    mu: float               # amplitude, > 0
    sigma: float            # inverse length scale, > 0
    x0: float = 0.0         # pinned to the origin (radial reduction)


def weight_profile(grid) -> np.ndarray:
    """u*^{4/(n+2)} = (1+r^2)^{-2} on the nodes."""
    r = grid.radii
    return (1.0 + r * r) ** (-2)


def make_admissible_perturbation(coeffs: SpectralCoeffs, epsilon: float,
                                 basis: ZonalBasis) -> Perturbation:
    """Direction from modes k >= 2, rescaled so sup |g|/f0 = 1 exactly."""
    arr = np.asarray(coeffs.coeffs, dtype=float)
    if len(arr) <= 2 or not np.any(arr[2:] != 0.0):
        raise InputError("coefficients must excite at least one mode k >= 2")
    if np.any(arr[:2] != 0.0):
        raise InputError("modes 0 and 1 are excluded by the orthogonality "
                         "conditions")
    if not 0.0 < epsilon < 1.0:
        raise InputError(f"epsilon must lie in (0, 1), got {epsilon}")

    grid = basis.grid
    n = basis.n
    g_raw = synthesize(SpectralCoeffs(arr), basis)
    f0 = basis_function(n, grid, 0)
    ratio = np.max(np.abs(g_raw.values) / f0.values)
    if ratio <= 0.0:
        raise InputError("zero direction")
    g = (1.0 / ratio) * g_raw

    us = u_star(n, grid)
    u_eps = RadialFn(grid, us.values + epsilon * weight_profile(grid) * g.values,
                     float(n + 2))
    return Perturbation(g=g, epsilon=epsilon, u_eps=u_eps,
                        sup_ratio=float(np.max(np.abs(g.values) / f0.values)),
                        overlap=low_mode_overlap(g, basis))


def verify_theorem_ruc(pert: Perturbation) -> StabilityVerdict:
    """Check the uniform local stability bound

        H[u_eps] >= kappa_n ||u_eps - u*||_*^2,
        kappa_n = 8(n+1) / (3n(n+2)^2(n+4)),

    for admissible perturbations (sup |g|/f0 <= 1, modes 0 and 1 removed)."""
    grid = pert.g.grid
    n = grid.n
    if pert.sup_ratio > 1.0 + 1.0e-10:
        raise InputError("perturbation exceeds the relative uniform bound")
    if pert.overlap > 1.0e-10 * max(weighted_norm(pert.g), 1e-300):
        raise InputError("perturbation is not orthogonal to modes 0 and 1")
    if not 0.0 < pert.epsilon < 1.0:
        raise InputError("epsilon outside (0, 1)")
    if float(np.max(np.abs(pert.g.values))) == 0.0:
        raise InputError("zero perturbation")

    sc = sharp_constants(n)
    us = u_star(n, grid)
    report = hls_deficit(pert.u_eps)
    star_sq, star_err = star_norm_squared_reported(pert.u_eps - us)
    lhs = report.value
    rhs = sc.kappa_n * star_sq
    quad_error = report.quad_error + sc.kappa_n * star_err
    return make_verdict(lhs=lhs, rhs=rhs, margin=lhs - rhs,
                        quad_error=quad_error, eps=pert.epsilon,
                        kappa=sc.kappa_n,
                        ratio=lhs / rhs if rhs > 0 else math.inf)


def condition_k_threshold(f: RadialFn, basis: ZonalBasis | None = None):
    """Internal pieces of the cubic-vs-quadratic smallness condition.

    Returns (eps, X, Y, eta_star) for h = (f - u*)/eps, eps = |||f - u*|||:
        X = int u*^{p-2} h^2 dx,   Y = int u*^{p-3} |h|^3 dx,
        eta_star = 3(n+2) X / ((n+4) eps Y) - 1
    (the largest eta for which the smallness condition still holds)."""
    grid = f.grid
    n = grid.n
    us = u_star(n, grid)
    diff = f - us
    eps = math.sqrt(max(hls_quadratic_form(diff), 0.0))
    lp_f, _ = lp_norm_reported(f, lp_exponent(n))
    if eps < 1.0e-12 * lp_f:
        raise InputError("f coincides with u*; the quotient is undefined")
    x_sq, _ = star_norm_squared_reported(diff)
    X = x_sq / eps ** 2
    r = grid.radii
    cubic = np.abs(diff.values) ** 3 * (1.0 + r * r) ** ((n + 6) / 2.0)
    y_int, _ = grid.integrate_reported(cubic, 3.0 * diff.tail_exponent
                                       - (n + 6.0))
    Y = y_int / eps ** 3
    eta_star = 3.0 * (n + 2) * X / ((n + 4) * eps * Y) - 1.0 if Y > 0 else math.inf
    return eps, X, Y, eta_star


def verify_theorem_star(f: RadialFn, eta: float,
                        basis: ZonalBasis | None = None) -> StabilityVerdict:
    """Check the weighted-norm local stability bound: if f >= 0 satisfies the
    orthogonality conditions and the smallness condition

        (n+4)/(3(n+2)) (1+eta) int u*^{p-3} |f-u*|^3 <= int u*^{p-2} |f-u*|^2

    holds for the supplied eta > 0, then Q[f, u*] >= 4 eta / (n (1+eta)).
    Inputs failing the smallness condition are classified not-applicable,
    with the maximal admissible eta* reported."""
    grid = f.grid
    n = grid.n
    if not eta > 0.0:
        raise InputError(f"eta must be positive, got {eta}")
    if np.any(f.values < 0.0):
        raise InputError("f must be nonnegative")
    if basis is not None:
        g_dir = RadialFn(grid, (f.values - u_star(n, grid).values)
                         / weight_profile(grid), f.tail_exponent)
        if low_mode_overlap(g_dir, basis) > 1.0e-8 * max(weighted_norm(g_dir),
                                                         1e-300):
            raise InputError("f - u* is not orthogonal to modes 0 and 1")

    eps, X, Y, eta_star = condition_k_threshold(f)
    cond_lhs = (n + 4) / (3.0 * (n + 2)) * (1.0 + eta) * eps * Y
    if cond_lhs > X:
        return not_applicable(lhs=cond_lhs, rhs=X, eta=eta, eta_star=eta_star,
                              reason="smallness condition fails for this eta")

    sc = sharp_constants(n)
    lp_f, e_f = lp_norm_reported(f, lp_exponent(n))
    qf_f, e_qf = hls_quadratic_form_reported(f)
    quotient = (lp_f ** 2 - sc.S_n * qf_f) / eps ** 2
    rhs = 4.0 * eta / (n * (1.0 + eta))
    quad_error = (2 * lp_f * e_f + sc.S_n * e_qf) / eps ** 2 + 1.0e-12
    return make_verdict(lhs=quotient, rhs=rhs, margin=quotient - rhs,
                        quad_error=quad_error, eta=eta, eta_star=eta_star,
                        eps=eps, X=X, Y=Y)


def verify_proposition(h: RadialFn, K: float) -> StabilityVerdict:
    """From the smallness hypothesis X - K*Y >= 0, with
        X = int u*^{p-2} h^2,  Y = int u*^{p-3} |h|^3,  a = (int |h|^p)^{1/(2-p)},
    verify the three consequences
        X <= (a/K)^{2-p},   Y <= K^{-1} (a/K)^{2-p},   ||h||_p <= ||u*||_p / K.
    Hypothesis failures are not-applicable, never pass/fail."""
    grid = h.grid
    n = grid.n
    if not K > 0.0:
        raise InputError(f"K must be positive, got {K}")
    p = lp_exponent(n)
    if not 3.0 * h.tail_exponent > 2.0 * n + 6.0:
        raise InputError("cubic weighted integral diverges for this tail")
    r = grid.radii
    zero = float(np.max(np.abs(h.values))) == 0.0

    sq = h.values ** 2 * (1.0 + r * r) ** 2
    X, e_x = grid.integrate_reported(sq, 2.0 * h.tail_exponent - 4.0)
    cubic = np.abs(h.values) ** 3 * (1.0 + r * r) ** ((n + 6) / 2.0)
    Y, e_y = grid.integrate_reported(cubic, 3.0 * h.tail_exponent - (n + 6.0))
    hypothesis_margin = X - K * Y
    hyp_err = e_x + K * e_y + 1.0e-14
    if hypothesis_margin < -hyp_err:
        return not_applicable(lhs=X, rhs=K * Y,
                              reason="hypothesis X - K Y >= 0 unmet",
                              X=X, Y=Y)

    if zero:
        lp_h, e_h = 0.0, 0.0
    else:
        lp_h, e_h = lp_norm_reported(h, p)
    us = u_star(n, grid)
    lp_us, _ = lp_norm_reported(us, p)
    a = lp_h ** (p / (2.0 - p))
    bound = (a / K) ** (2.0 - p)

    m1 = bound - X
    m2 = bound / K - Y
    m3 = (lp_us / K) ** (p / (2.0 - p)) - a
    bound_sensitivity = (2.0 - p) * (a / K) ** (1.0 - p) / K if a > 0 else 0.0
    quad_error = e_x + e_y + bound_sensitivity * e_h + 1.0e-13 * max(X, 1.0)
    margin = min(m1, m2, m3)
    return make_verdict(lhs=X, rhs=bound, margin=margin, quad_error=quad_error,
                        X=X, Y=Y, a=a, K=K,
                        margin_X=m1, margin_Y=m2, margin_norm=m3,
                        hypothesis_margin=hypothesis_margin)


def _projection_distance_sq(f: RadialFn, qf_f: float, sigma: float,
                            qf_star: float):
    """min over mu of |||f - mu u*(sigma .)|||^2 and the optimal mu."""
    grid = f.grid
    n = grid.n
    r = grid.radii
    # (-Delta)^{-1} u*(sigma .) = sigma^{-2} f0(sigma r) / (n(n-2)), exact
    pot_sigma = (1.0 + (sigma * r) ** 2) ** (-(n - 2) / 2.0) \
        / (sigma ** 2 * n * (n - 2))
    cross, _ = grid.integrate_reported(f.values * pot_sigma,
                                       f.tail_exponent + n - 2.0)
    qf_sigma = sigma ** (-(n + 2.0)) * qf_star
    mu = cross / qf_sigma
    return qf_f - cross ** 2 / qf_sigma, mu


def project_to_manifold(f: RadialFn, max_iter: int = 200):
    """Project onto the scalings mu * u*(sigma .) in the H^{-1} norm.

    Golden-section search on log(sigma) with multistart (sigma in
    {1/4, 1, 4}), then the distance is recomputed on the explicit residual.
    Returns (ManifoldPoint, distance); convergence state is reported on the
    point via the returned iteration count in its construction context.
    """
    grid = f.grid
    n = grid.n
    lp_f, _ = lp_norm_reported(f, lp_exponent(n))
    if lp_f <= 0.0:
        raise InputError("cannot project the zero function")
    qf_f = hls_quadratic_form(f)
    qf_star = hls_quadratic_form(u_star(n, grid))

    phi = (math.sqrt(5.0) - 1.0) / 2.0
    best = (math.inf, 1.0, 1.0)
    evals = 0
    for sigma0 in (0.25, 1.0, 4.0):
        lo, hi = math.log(sigma0) - math.log(6.0), math.log(sigma0) + math.log(6.0)
        c = hi - phi * (hi - lo)
        d = lo + phi * (hi - lo)
        fc = _projection_distance_sq(f, qf_f, math.exp(c), qf_star)[0]
        fd = _projection_distance_sq(f, qf_f, math.exp(d), qf_star)[0]
        evals += 2
        while hi - lo > 1.0e-12 and evals < max_iter:
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - phi * (hi - lo)
                fc = _projection_distance_sq(f, qf_f, math.exp(c), qf_star)[0]
            else:
                lo, c, fc = c, d, fd
                d = lo + phi * (hi - lo)
                fd = _projection_distance_sq(f, qf_f, math.exp(d), qf_star)[0]
            evals += 1
        s_best = math.exp(0.5 * (lo + hi))
        val, mu = _projection_distance_sq(f, qf_f, s_best, qf_star)
        if val < best[0]:
            best = (val, mu, s_best)

    # re-rank the finalists (including the base scale) on the explicit
    # residual, which is immune to the cancellation in the cheap formula
    def direct(sigma, mu):
        us_sigma = RadialFn(grid, mu * (1.0 + (sigma * grid.radii) ** 2)
                            ** (-(n + 2) / 2.0), float(n + 2))
        return math.sqrt(max(hls_quadratic_form(f - us_sigma), 0.0))

    _, mu_base = _projection_distance_sq(f, qf_f, 1.0, qf_star)
    finalists = [(best[2], best[1]), (1.0, mu_base)]
    sigma, mu, distance = min(((s, m, direct(s, m)) for s, m in finalists),
                              key=lambda t: t[2])
    if not (mu > 0.0 and math.isfinite(mu)):
        raise InputError("projection produced a non-positive amplitude")
    return ManifoldPoint(mu=mu, sigma=sigma), distance
