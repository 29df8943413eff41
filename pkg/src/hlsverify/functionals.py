"""Deficit functionals and auxiliary inequalities.

All deficits are written as lhs - rhs with the sharp constant inside, so
they are nonnegative and vanish exactly on the corresponding optimizers.
Every report carries a certified quadrature error: the nonnegativity claims
are tested as value >= -quad_error.
"""

import numpy as np

from .errors import InputError
from .core import (RadialFn, critical_exponent, gradient_norm_squared_reported,
                   lp_exponent, lp_norm_reported, sharp_constants,
                   star_norm_squared_reported, u_star, basis_function)
from .potential import hls_quadratic_form_reported, h_minus1_norm
from .verdicts import (DeficitReport, StabilityVerdict, make_verdict,
                       not_applicable)


def hls_deficit(u: RadialFn) -> DeficitReport:
    """Deficit of the sharp HLS inequality, centered at the optimizer:

        C_n (||u||_p^2 - ||u*||_p^2 - 2 ||u*||_p^{4/(n+2)} int f0 (u-u*) dx)
          - int (u-u*) (-Delta)^{-1} (u-u*) dx,   p = 2n/(n+2).

    Algebraically identical to the raw deficit C_n ||u||_p^2 - (u,(-D)^{-1}u)
    (the centering terms cancel); both are reported.
    """
    grid = u.grid
    n = grid.n
    sc = sharp_constants(n)
    p = lp_exponent(n)
    us = u_star(n, grid)
    f0 = basis_function(n, grid, 0)
    w = u - us

    lp_u, e_u = lp_norm_reported(u, p)
    lp_us, e_us = lp_norm_reported(us, p)
    cross, e_cross = grid.integrate_reported(
        f0.values * w.values, f0.tail_exponent + w.tail_exponent)
    qf_w, e_qf = hls_quadratic_form_reported(w)
    us_factor = lp_us ** (4.0 / (n + 2))

    lhs = sc.C_n * (lp_u ** 2 - lp_us ** 2 - 2.0 * us_factor * cross)
    rhs = qf_w
    quad_error = (sc.C_n * (2.0 * lp_u * e_u + 2.0 * lp_us * e_us
                            + 2.0 * us_factor * e_cross)
                  + e_qf + 1.0e-14 * lp_us ** 2)

    qf_u, e_qfu = hls_quadratic_form_reported(u)
    raw = sc.C_n * lp_u ** 2 - qf_u
    norms = {"lp_norm_u": lp_u, "lp_norm_ustar": lp_us, "cross_term": cross,
             "qf_difference": qf_w, "raw_deficit": raw,
             "raw_deficit_error": sc.C_n * 2.0 * lp_u * e_u + e_qfu}
    return DeficitReport(value=lhs - rhs, lhs=lhs, rhs=rhs, norms_used=norms,
                         quad_error=quad_error)


def sobolev_deficit(g: RadialFn) -> DeficitReport:
    """||grad g||_2^2 - S_n ||g||_{2n/(n-2)}^2 (nonnegative, zero exactly on
    the profiles mu (1 + sigma r^2)^{-(n-2)/2})."""
    n = g.grid.n
    sc = sharp_constants(n)
    q = critical_exponent(n)
    grad2, e_grad = gradient_norm_squared_reported(g)
    lq, e_lq = lp_norm_reported(g, q)
    lhs = grad2
    rhs = sc.S_n * lq ** 2
    quad_error = e_grad + sc.S_n * 2.0 * lq * e_lq + 1.0e-14 * max(lhs, rhs, 1.0)
    return DeficitReport(value=lhs - rhs, lhs=lhs, rhs=rhs,
                         norms_used={"grad_norm_sq": grad2, "lq_norm": lq},
                         quad_error=quad_error)


def ccl_gns_deficit(g: RadialFn) -> DeficitReport:
    """Sharp product-form interpolation deficit with p = (n+1)/(n-1):

        C_n (n(n-2)/(n-1)^2) ||grad g||_2^2 ||g||_{p+1}^{2(p-1)} - ||g||_{2p}^{2p}.

    Zero exactly on (1+r^2)^{-1/(p-1)} and its scalings (the positive
    exponent sometimes quoted for the equality profile is a sign slip: it is
    not even integrable; the constant is verified to make this profile the
    equality case).  The first factor is the gradient norm; only that choice
    is scale invariant.
    """
    n = g.grid.n
    sc = sharp_constants(n)
    p = (n + 1) / (n - 1)
    grad2, e_grad = gradient_norm_squared_reported(g)
    lp1, e_lp1 = lp_norm_reported(g, p + 1.0)
    l2p, e_l2p = lp_norm_reported(g, 2.0 * p)
    const = sc.C_n * n * (n - 2) / (n - 1) ** 2
    lhs = const * grad2 * lp1 ** (2.0 * (p - 1.0))
    rhs = l2p ** (2.0 * p)
    quad_error = (const * (e_grad * lp1 ** (2 * (p - 1))
                           + grad2 * 2 * (p - 1) * lp1 ** (2 * p - 3) * e_lp1)
                  + 2 * p * l2p ** (2 * p - 1) * e_l2p
                  + 1.0e-14 * max(lhs, rhs, 1.0))
    return DeficitReport(value=lhs - rhs, lhs=lhs, rhs=rhs,
                         norms_used={"grad_norm_sq": grad2,
                                     "lp_plus_one": lp1, "l2p": l2p},
                         quad_error=quad_error)


def stability_quotient(f: RadialFn, h: RadialFn) -> float:
    """Q[f,h] = (||f||_p^2 - S_n ||(-Delta)^{-1/2} f||_2^2) / |||f-h|||^2,
    the middle term computed as S_n * (f, (-Delta)^{-1} f)."""
    n = f.grid.n
    sc = sharp_constants(n)
    p = lp_exponent(n)
    lp_f, _ = lp_norm_reported(f, p)
    denom = h_minus1_norm(f - h)
    if denom < 1.0e-12 * lp_f:
        raise InputError("f and h coincide up to quadrature noise; the "
                         "quotient is undefined")
    qf_f, _ = hls_quadratic_form_reported(f)
    return (lp_f ** 2 - sc.S_n * qf_f) / denom ** 2


def holder_upper_bound(f: RadialFn) -> StabilityVerdict:
    """Check ||f||_p^2 <= ||u*||_p^{4/(n+2)} ||f||_*^2 (equality iff f is a
    multiple of u*)."""
    n = f.grid.n
    p = lp_exponent(n)
    us = u_star(n, f.grid)
    lp_f, e_f = lp_norm_reported(f, p)
    lp_us, _ = lp_norm_reported(us, p)
    star_sq, e_star = star_norm_squared_reported(f)
    lhs = lp_f ** 2
    rhs = lp_us ** (4.0 / (n + 2)) * star_sq
    quad_error = 2 * lp_f * e_f + lp_us ** (4.0 / (n + 2)) * e_star + 1e-14
    rel_gap = (rhs - lhs) / rhs if rhs > 0 else 0.0
    return make_verdict(lhs=lhs, rhs=rhs, margin=rhs - lhs,
                        quad_error=quad_error, relative_gap=rel_gap)


def pck_lower_bound(f: RadialFn) -> StabilityVerdict:
    """Chained lower bounds on the p-norm excess over the optimizer:

        ||f||_p^2 - ||u*||_p^2
            >= (2/p) ||u*||_p^{2-p} (int |f|^p - int u*^p)
            >= 2^{1-2/p} (p-1) || |f| - u* ||_p^2.

    Applicable when ||f||_p >= ||u*||_p (otherwise not-applicable)."""
    grid = f.grid
    n = grid.n
    p = lp_exponent(n)
    us = u_star(n, grid)
    lp_f, e_f = lp_norm_reported(f, p)
    lp_us, e_us = lp_norm_reported(us, p)
    if lp_f < lp_us - (e_f + e_us):
        return not_applicable(lhs=lp_f ** 2 - lp_us ** 2,
                              reason="requires ||f||_p >= ||u*||_p")
    diff = RadialFn(grid, np.abs(f.values) - us.values,
                    min(f.tail_exponent, us.tail_exponent))
    lp_diff, e_diff = lp_norm_reported(diff, p)

    first = lp_f ** 2 - lp_us ** 2
    mid = (2.0 / p) * lp_us ** (2.0 - p) * (lp_f ** p - lp_us ** p)
    last = 2.0 ** (1.0 - 2.0 / p) * (p - 1.0) * lp_diff ** 2
    quad_error = (2 * lp_f * e_f + 2 * lp_us * e_us
                  + 2 * lp_diff * e_diff + 1.0e-13 * lp_us ** 2)
    margin = min(first - mid, mid - last)
    return make_verdict(lhs=first, rhs=last, margin=margin,
                        quad_error=quad_error,
                        mid=mid, margin_first=first - mid,
                        margin_second=mid - last)


def duality_square_bound(g: RadialFn) -> StabilityVerdict:
    """Duality transfer of the Sobolev deficit to the HLS deficit:

        S_n (||g||_p^2 - S_n ||(-Delta)^{-1/2} g||_2^2)
            <= ||f||_q^{8/(n-2)} (||grad f||_2^2 - S_n ||f||_q^2),

    with f = g^{(n-2)/(n+2)}, q = 2n/(n-2).  The margin equals the expanded
    square int | ||f||_q^{4/(n-2)} grad f - S_n grad (-Delta)^{-1} g |^2 dx,
    which is recomputed directly as a cross-check (params['square_value'])."""
    grid = g.grid
    n = grid.n
    if np.any(g.values <= 0.0):
        raise InputError("the fractional power needs strictly positive input")
    sc = sharp_constants(n)
    p = lp_exponent(n)
    q = critical_exponent(n)
    r_exp = (n - 2.0) / (n + 2.0)
    f = g.power(r_exp)

    lp_g, e_g = lp_norm_reported(g, p)
    qf_g, e_qf = hls_quadratic_form_reported(g)
    lq_f, e_lqf = lp_norm_reported(f, q)
    grad2_f, e_grad = gradient_norm_squared_reported(f)

    lhs = sc.S_n * (lp_g ** 2 - sc.S_n * qf_g)
    f_factor = lq_f ** (8.0 / (n - 2))
    rhs = f_factor * (grad2_f - sc.S_n * lq_f ** 2)
    quad_error = (sc.S_n * (2 * lp_g * e_g + sc.S_n * e_qf)
                  + f_factor * (e_grad + sc.S_n * 2 * lq_f * e_lqf)
                  + 1.0e-13 * max(abs(lhs), abs(rhs), 1.0))

    # direct route: expand the square with the exact potential gradient
    r = grid.radii
    mass = grid.cumulative(g.values * r ** (n - 1))
    dpot = -mass / r ** (n - 1)          # (d/dr) (-Delta)^{-1} g, exact shell form
    df = grid.derivative(f.values)
    integrand = (lq_f ** (4.0 / (n - 2)) * df - sc.S_n * dpot) ** 2
    square, sq_err = grid.integrate_reported(integrand,
                                             2.0 * min(f.tail_exponent + 1.0,
                                                       n - 1.0))
    agree = abs((rhs - lhs) - square) / max(abs(square), quad_error, 1e-300)
    return make_verdict(lhs=lhs, rhs=rhs, margin=rhs - lhs,
                        quad_error=quad_error,
                        square_value=square, square_error=sq_err,
                        square_agreement=agree)
