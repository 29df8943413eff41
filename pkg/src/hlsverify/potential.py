"""Inverse Laplacian on radial functions and the HLS bilinear form.

Two independent routes are provided:

* the shell decomposition: for radial f,
      Phi(r) = (1/(n-2)) * [ r^{-(n-2)} * int_0^r f(s) s^{n-1} ds
                             + int_r^inf f(s) s ds ],
  evaluated with running panel integrals (O(N)), plus analytic power-law
  extensions of both integrals beyond r_max;

* a direct double integral iint f(x) |x-y|^{-lambda} g(y) dx dy, reduced to a
  two-dimensional radial quadrature against the exact angular kernel
      int_{-1}^{1} (r^2+s^2-2rst)^{-lam/2} (1-t^2)^{(n-3)/2} dt
        = 2^{n-2} (r+s)^{-lam} B((n-1)/2,(n-1)/2)
          * 2F1(lam/2, (n-1)/2; n-1; 4rs/(r+s)^2),
  with near-diagonal panel pairs re-integrated on refined subpanels (the
  kernel has a |r-s|-type crease across the diagonal).

The double-integral route never uses the shell formula, so agreement of the
two is a genuine cross-check of the potential evaluation.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import gamma as gamma_fn
from scipy.special import hyp2f1

from .errors import InputError
from .core import RadialFn, RadialGrid, same_grid, surface_area

_BAND_REFINE = 6
_BAND_SUBORDER = 8


@dataclass(frozen=True)
class PotentialResult:
    phi: RadialFn        # (-Delta)^{-1} applied to the input
    quad_error: float    # estimated relative quadrature error


def inverse_laplacian(f: RadialFn) -> PotentialResult:
    """Solve -Delta phi = f for radial f vanishing at infinity."""
    grid = f.grid
    n = grid.n
    if not f.tail_exponent > 2.0:
        raise InputError(
            f"tail exponent {f.tail_exponent} too slow for the potential "
            "(need beta > 2)")
    r = grid.radii
    mass_running = grid.cumulative(f.values * r ** (n - 1))
    inner_running = grid.cumulative(f.values * r)
    inner_total = float(grid.w1d @ (f.values * r))

    # analytic extensions of both integrals over [r_max, inf)
    amp = RadialGrid._tail_amplitude(f.values[-1], r[-1], f.tail_exponent)
    beta = f.tail_exponent
    mass_tail = amp * grid.r_max ** (n - beta) / (beta - n) if beta > n else 0.0
    outer_tail = amp * grid.r_max ** (2.0 - beta) / (beta - 2.0)

    outer = inner_total - inner_running + outer_tail
    phi_vals = (mass_running / r ** (n - 2) + outer) / (n - 2)
    phi = RadialFn(grid, phi_vals, float(n - 2))

    scale = float(np.max(np.abs(phi_vals))) or 1.0
    quad_error = (0.1 * (abs(outer_tail) + abs(mass_tail) / grid.r_max ** (n - 2))
                  / scale
                  + 4.0 * grid.calibration_residual + 1.0e-13)
    return PotentialResult(phi=phi, quad_error=quad_error)


def hls_quadratic_form_reported(f: RadialFn):
    """(int f (-Delta)^{-1} f dx, quad_error)."""
    pot = inverse_laplacian(f)
    integrand = f.values * pot.phi.values
    value, err = f.grid.integrate_reported(
        integrand, f.tail_exponent + f.grid.n - 2.0)
    return value, err + abs(value) * pot.quad_error


def hls_quadratic_form(f: RadialFn) -> float:
    return hls_quadratic_form_reported(f)[0]


def hls_bilinear_form(f: RadialFn, g: RadialFn) -> float:
    """Symmetric bilinear extension (f, (-Delta)^{-1} g), symmetrised."""
    if not same_grid(f, g):
        raise InputError("operands must share a grid")
    phi_g = inverse_laplacian(g).phi
    phi_f = inverse_laplacian(f).phi
    a = f.grid.integrate(f.values * phi_g.values)
    b = f.grid.integrate(g.values * phi_f.values)
    return 0.5 * (a + b)


def h_minus1_norm(f: RadialFn) -> float:
    """The H^{-1} norm: sqrt of the HLS quadratic form."""
    return math.sqrt(max(hls_quadratic_form(f), 0.0))


def riesz_kernel_constant(n: int) -> float:
    """Constant c with (-Delta)^{-1} f = c * |x|^{-(n-2)} * f, i.e.
    c = Gamma(n/2-1) / (4 pi^{n/2}) = 1 / ((n-2) |S^{n-1}|)."""
    return gamma_fn(n / 2.0 - 1.0) / (4.0 * math.pi ** (n / 2.0))


_cheb_cache: dict = {}


def _hyp_factor_cheb(n: int, lam: float):
    """Chebyshev interpolant of 2F1(lam/2,(n-1)/2;n-1; 1-xi^2) on xi in [0,1].

    For lam = n-2 the connection formula at z=1 makes this function analytic
    in xi = |r-s|/(r+s) (the branch exponent (n-1-lam)/2 equals 1/2, so the
    sqrt(1-z) branch is linear in xi), hence geometric convergence.
    """
    key = (n, lam)
    if key not in _cheb_cache:
        from numpy.polynomial.chebyshev import Chebyshev
        fn = lambda xi: hyp2f1(lam / 2.0, (n - 1) / 2.0, n - 1.0,
                               np.maximum(1.0 - xi * xi, 0.0))
        _cheb_cache[key] = Chebyshev.interpolate(fn, 48, domain=[0.0, 1.0])
    return _cheb_cache[key]


def _angular_kernel(r, s, lam: float, n: int):
    """Exact angular reduction of |x-y|^{-lam} for radial integrands."""
    pref = (2.0 ** (n - 2) * beta_fn((n - 1) / 2.0, (n - 1) / 2.0)
            * (r + s) ** (-lam))
    if abs(lam - (n - 2)) < 1.0e-12:
        xi = np.abs(r - s) / (r + s)
        return pref * _hyp_factor_cheb(n, float(lam))(xi)
    z = 4.0 * r * s / (r + s) ** 2
    z = np.minimum(z, 1.0)
    if lam >= n - 1:
        # kernel diverges on the diagonal; regularise by a half-node offset
        z = np.minimum(z, 1.0 - 1.0e-10)
    return pref * hyp2f1(lam / 2.0, (n - 1) / 2.0, n - 1.0, z)


_kernel_cache: dict = {}


def _weighted_kernel(grid: RadialGrid, lam: float) -> np.ndarray:
    """Full weighted kernel W with  iint f g |x-y|^{-lam} ~ f @ W @ g.

    Near-diagonal panel pairs are re-integrated on refined subpanels and
    folded back through the panel interpolation operators, so W still acts
    on plain node values.
    """
    key = (grid.key(), lam)
    cached = _kernel_cache.get(key)
    if cached is not None:
        return cached

    n = grid.n
    r = grid.radii
    wt = grid.w1d * r ** (n - 1)
    iu, ju = np.triu_indices(len(r))
    vals = _angular_kernel(r[iu], r[ju], lam, n)
    base = np.empty((len(r), len(r)))
    base[iu, ju] = vals
    base[ju, iu] = vals
    W = wt[:, None] * base * wt[None, :]

    # refined band correction
    from ._legendre import panel_operators
    ops = panel_operators(grid.panel_order)
    sub = panel_operators(_BAND_SUBORDER)
    subedges = -1.0 + 2.0 * np.arange(_BAND_REFINE) / _BAND_REFINE
    pts = (subedges[:, None] + (sub.nodes[None, :] + 1.0) / _BAND_REFINE).ravel()
    E = ops.interp_matrix(pts)

    rref, w1dref, _ = grid.panel_refined(np.zeros_like(r), _BAND_REFINE,
                                         _BAND_SUBORDER)
    wtref = w1dref * rref ** (n - 1)
    K = grid.panel_order
    Kr = _BAND_REFINE * _BAND_SUBORDER
    P = grid.panel_count
    for q in range(P):
        for q2 in (q, q + 1):
            if q2 >= P:
                continue
            ra = rref[q * Kr:(q + 1) * Kr]
            rb = rref[q2 * Kr:(q2 + 1) * Kr]
            wa = wtref[q * Kr:(q + 1) * Kr]
            wb = wtref[q2 * Kr:(q2 + 1) * Kr]
            kblock = _angular_kernel(ra[:, None], rb[None, :], lam, n)
            eff = E.T @ (wa[:, None] * kblock * wb[None, :]) @ E
            W[q * K:(q + 1) * K, q2 * K:(q2 + 1) * K] = eff
            if q2 != q:
                W[q2 * K:(q2 + 1) * K, q * K:(q + 1) * K] = eff.T

    W *= surface_area(n) * surface_area(n - 1)
    W.flags.writeable = False
    if len(_kernel_cache) > 8:
        _kernel_cache.clear()
    _kernel_cache[key] = W
    return W


def hls_double_integral_oracle(f: RadialFn, g: RadialFn, lam: float) -> float:
    """iint f(x) |x-y|^{-lam} g(y) dx dy by direct 2-D radial quadrature.

    Exact angular reduction, no shell formula anywhere.  Accuracy degrades
    for lam in (n-1, n) where the angular kernel itself diverges on the
    diagonal (regularised); intended use is lam <= n-1.
    """
    if not same_grid(f, g):
        raise InputError("operands must share a grid")
    n = f.grid.n
    if not 0.0 < lam < n:
        raise InputError(f"lambda must lie in (0, n), got {lam}")
    if not (f.tail_exponent + lam > n and g.tail_exponent + lam > n):
        raise InputError("tails too slow for the double integral")
    W = _weighted_kernel(f.grid, lam)
    return float(f.values @ W @ g.values)
