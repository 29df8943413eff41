"""Radial grids, quadrature, reference profiles, sharp constants and norms.

Everything lives on R^n (n >= 3) restricted to radial functions, so every
integral is one-dimensional.  A grid is a composite Gauss-Legendre rule in a
stretched coordinate s with the algebraic map r = c*s/(1-s): uniform panels
in s are dense on the unit-scale core and stretch algebraically out to r_max.
Integrals of functions with known power-law tails get an analytic correction
for the truncated range [r_max, inf) plus an error estimate, so that deficit
values (small differences of large numbers) carry a certified quadrature
error.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import InputError
from ._legendre import panel_operators

DEFAULT_NODE_COUNT = 2048
DEFAULT_R_MAX = 1.0e4
PANEL_ORDER = 16

# relative floor attached to every reported integral error
_ROUNDOFF = 5.0e-15


def check_dim(n: int) -> int:
    """Validate a spatial dimension (integer, n >= 3)."""
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise InputError(f"dimension must be an integer, got {n!r}")
    if n < 3:
        raise InputError(f"dimension must satisfy n >= 3, got {n}")
    return int(n)


def surface_area(n: int) -> float:
    """|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / gamma_fn(n / 2.0)


def unit_ball_integral(n: int) -> float:
    """Closed form of int_{R^n} (1+|x|^2)^{-n} dx = pi^{n/2} Gamma(n/2)/Gamma(n)."""
    return math.pi ** (n / 2.0) * gamma_fn(n / 2.0) / gamma_fn(n)


class RadialGrid:
    """Quadrature nodes/weights for radial integrals over R^n.

    Attributes
    ----------
    n : dimension
    radii : strictly increasing positive nodes (never exactly 0 or r_max)
    weights : full R^n weights, sum(weights * phi(radii)) ~ int phi(|x|) dx
    r_max : truncation radius
    calibration_residual : relative error of the self-test integral
        int (1+r^2)^{-n} dx against its closed form.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, n: int, node_count: int, r_max: float,
                 core_scale: float = 2.0, panel_order: int = PANEL_ORDER,
                 calibration_tol: float = 1.0e-8):
        n = check_dim(n)
        if node_count < 16:
            raise InputError(f"node_count must be >= 16, got {node_count}")
        if not r_max > 1.0:
            raise InputError(f"r_max must exceed 1, got {r_max}")

        self.n = n
        self.r_max = float(r_max)
        self.core_scale = float(core_scale)
        self.panel_order = int(panel_order)
        self.panel_count = max(1, -(-int(node_count) // panel_order))
        self.node_count = self.panel_count * self.panel_order

        ops = panel_operators(self.panel_order)
        self._ops = ops
        self.s_max = r_max / (core_scale + r_max)

        # Panel edges in s: uniform over the core (r <= 4*core_scale), then
        # geometric in 1-s so every tail panel spans a bounded radial ratio.
        s_core = min(0.8, 4.0 * core_scale / (core_scale + 4.0 * core_scale))
        if self.panel_count < 4 or self.s_max <= s_core:
            edges = np.linspace(0.0, self.s_max, self.panel_count + 1)
        else:
            p_core = self.panel_count // 2
            p_tail = self.panel_count - p_core
            core_edges = np.linspace(0.0, s_core, p_core + 1)
            ratio = ((1.0 - self.s_max) / (1.0 - s_core)) ** (1.0 / p_tail)
            tail_edges = 1.0 - (1.0 - s_core) * ratio ** np.arange(1, p_tail + 1)
            edges = np.concatenate([core_edges, tail_edges])
        edges[-1] = self.s_max
        self._edges = edges
        widths = np.diff(edges)
        self._halfwidth = np.repeat(widths / 2.0, self.panel_order)

        s = (edges[:-1, None]
             + (ops.nodes[None, :] + 1.0) * (widths[:, None] / 2.0)).ravel()
        self.s_nodes = s
        self.radii = core_scale * s / (1.0 - s)
        self._drds = core_scale / (1.0 - s) ** 2
        # 1-D weights: sum(w1d * y(radii)) ~ int_0^{r_max} y(r) dr
        self.w1d = (np.tile(ops.weights, self.panel_count)
                    * self._halfwidth * self._drds)
        self.weights = self.w1d * surface_area(n) * self.radii ** (n - 1)

        for arr in (self.s_nodes, self.radii, self.w1d, self.weights, self._drds):
            arr.flags.writeable = False

        exact = unit_ball_integral(n)
        cal = (1.0 + self.radii ** 2) ** (-float(n))
        approx = float(self.weights @ cal) \
            + self._tail_correction(cal, 2.0 * n)[0]
        self.calibration_residual = abs(approx - exact) / exact
        if self.calibration_residual > calibration_tol:
            raise InputError(
                f"grid calibration failed: residual {self.calibration_residual:.3e} "
                f"exceeds {calibration_tol:.1e} (node_count={self.node_count}, "
                f"r_max={r_max})")

    # -- quadrature ---------------------------------------------------------

    def integrate(self, values: np.ndarray) -> float:
        """Plain int phi dx over the truncated domain, no tail correction."""
        return float(self.weights @ values)

    def integrate_reported(self, values: np.ndarray, decay: float | None):
        """int phi dx with analytic tail correction and an error estimate.

        `decay` is gamma such that phi = O(r^{-gamma}); amplitude is anchored
        at the outermost node and cross-checked at an interior probe.  Returns
        (value, quad_error).
        """
        raw = float(self.weights @ values)
        absmass = float(np.abs(self.weights) @ np.abs(values))
        err = absmass * _ROUNDOFF + abs(raw) * max(4.0 * self.calibration_residual,
                                                   1.0e-15)
        if decay is None or not np.isfinite(decay):
            return raw, err
        if decay <= self.n:
            raise InputError(
                f"integrand with decay exponent {decay} is not integrable on "
                f"R^{self.n}")
        tail, tail_err = self._tail_correction(values, decay)
        return raw + tail, err + tail_err

    def _tail_correction(self, values, decay):
        r = self.radii
        amp = self._tail_amplitude(values[-1], r[-1], decay)
        # consistency probe around r_max^{0.8}
        j = int(np.searchsorted(r, self.r_max ** 0.8))
        j = min(max(j, 0), len(r) - 1)
        amp2 = self._tail_amplitude(values[j], r[j], decay)
        tail = surface_area(self.n) * amp * self.r_max ** (self.n - decay) / (decay - self.n)
        denom = abs(amp) + abs(amp2)
        mismatch = 1.0 if denom == 0.0 and (amp != amp2) else (
            abs(amp - amp2) / denom if denom > 0.0 else 0.0)
        tail_err = abs(tail) * min(1.0, mismatch + 0.02)
        return tail, tail_err

    @staticmethod
    def _tail_amplitude(value, radius, decay):
        if value == 0.0:
            return 0.0
        # log-domain to dodge overflow of radius**decay for steep tails
        mag = math.log(abs(value)) + decay * math.log(radius)
        if mag > 700.0:
            return math.copysign(math.inf, value)
        return math.copysign(math.exp(mag), value)

    # -- per-panel spectral operators ----------------------------------------

    def _per_panel(self, matrix, values):
        panels = np.asarray(values).reshape(self.panel_count, self.panel_order)
        return (panels @ matrix.T).ravel()

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """Running integral int_0^{r_i} y(r) dr of a 1-D integrand y."""
        ytrans = values * self._drds * self._halfwidth
        within = self._per_panel(self._ops.running, ytrans)
        totals = (ytrans.reshape(self.panel_count, self.panel_order)
                  @ self._ops.weights)
        prefix = np.concatenate(([0.0], np.cumsum(totals)[:-1]))
        return within + np.repeat(prefix, self.panel_order)

    def derivative(self, values: np.ndarray) -> np.ndarray:
        """d/dr of grid data via the per-panel polynomial interpolant."""
        dsig = self._per_panel(self._ops.diff, values)
        return dsig / (self._drds * self._halfwidth)

    def second_derivative(self, values: np.ndarray) -> np.ndarray:
        return self.derivative(self.derivative(values))

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        """Radial Laplacian u'' + (n-1) u'/r of grid data."""
        du = self.derivative(values)
        return self.derivative(du) + (self.n - 1) * du / self.radii

    def panel_refined(self, values: np.ndarray, refine: int, suborder: int):
        """Interpolate panel data onto `refine` Gauss-Legendre subpanels.

        Returns (radii, w1d, values) of the refined rule; used for
        near-diagonal refinement in double integrals.
        """
        ops = self._ops
        sub = panel_operators(suborder)
        # reference locations of all subpanel nodes inside [-1, 1]
        subedges = -1.0 + 2.0 * np.arange(refine) / refine
        pts = (subedges[:, None] + (sub.nodes[None, :] + 1.0) / refine).ravel()
        interp = ops.interp_matrix(pts)
        vals = (np.asarray(values).reshape(self.panel_count, self.panel_order)
                @ interp.T).ravel()
        widths = np.diff(self._edges)
        s = (self._edges[:-1, None]
             + (pts[None, :] + 1.0) * (widths[:, None] / 2.0)).ravel()
        radii = self.core_scale * s / (1.0 - s)
        drds = self.core_scale / (1.0 - s) ** 2
        halfwidth = np.repeat(widths / 2.0, refine * suborder)
        w1d = (np.tile(np.tile(sub.weights, refine) / refine, self.panel_count)
               * halfwidth * drds)
        return radii, w1d, vals

    def key(self):
        return (self.n, self.node_count, self.r_max, self.core_scale,
                self.panel_order)

    def __repr__(self):
        return (f"RadialGrid(n={self.n}, nodes={self.node_count}, "
                f"r_max={self.r_max:g})")


def make_grid(n: int, node_count: int = DEFAULT_NODE_COUNT,
              r_max: float = DEFAULT_R_MAX, **kwargs) -> RadialGrid:
    """Build a graded radial grid; see RadialGrid."""
    return RadialGrid(n, node_count, r_max, **kwargs)


def same_grid(a: "RadialFn", b: "RadialFn") -> bool:
    return a.grid is b.grid or a.grid.key() == b.grid.key()


@dataclass(frozen=True)
class RadialFn:
    """A radial function sampled on a grid.

    tail_exponent is beta with |f| = O(r^{-beta}) as r -> inf; it drives the
    truncation corrections.  Use math.inf for faster-than-power decay.
    """

    grid: RadialGrid
    values: np.ndarray
    tail_exponent: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.radii.shape:
            raise InputError("values do not match the grid")
        if not np.all(np.isfinite(vals)):
            raise InputError("values must be finite at every node")
        if vals.flags.writeable:
            vals = vals.copy()
            vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __add__(self, other):
        self._check(other)
        return RadialFn(self.grid, self.values + other.values,
                        min(self.tail_exponent, other.tail_exponent))

    def __sub__(self, other):
        self._check(other)
        return RadialFn(self.grid, self.values - other.values,
                        min(self.tail_exponent, other.tail_exponent))

    def __mul__(self, other):
        if isinstance(other, RadialFn):
            self._check(other)
            return RadialFn(self.grid, self.values * other.values,
                            self.tail_exponent + other.tail_exponent)
        return RadialFn(self.grid, self.values * float(other), self.tail_exponent)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def power(self, expon: float) -> "RadialFn":
        """Pointwise power; requires strictly positive values unless expon
        is a nonnegative integer."""
        if not (float(expon).is_integer() and expon >= 0):
            if np.any(self.values <= 0.0):
                raise InputError("fractional power of a non-positive function")
        return RadialFn(self.grid, self.values ** expon,
                        self.tail_exponent * expon)

    def _check(self, other):
        if not isinstance(other, RadialFn) or not same_grid(self, other):
            raise InputError("operands must share a grid")


def from_callable(grid: RadialGrid, fn, tail_exponent: float) -> RadialFn:
    return RadialFn(grid, fn(grid.radii), tail_exponent)


def zero_fn(grid: RadialGrid) -> RadialFn:
    return RadialFn(grid, np.zeros_like(grid.radii), math.inf)


# -- reference profiles -------------------------------------------------------

def u_star(n: int, grid: RadialGrid) -> RadialFn:
    """Extremal profile (1+r^2)^{-(n+2)/2} of the sharp HLS inequality."""
    check_dim(n)
    if grid.n != n:
        raise InputError("grid dimension mismatch")
    return from_callable(grid, lambda r: (1.0 + r * r) ** (-(n + 2) / 2.0), n + 2.0)


def basis_function(n: int, grid: RadialGrid, index: int) -> RadialFn:
    """Low-order conformal profiles entering the orthogonality constraints.

    index 0:   (1+r^2)^{-(n-2)/2}
    index n+1: ((1-r^2)/(1+r^2)) * (1+r^2)^{-(n-2)/2}
    Indices 1..n are the non-radial components; they vanish identically
    against radial data, so they are not represented here.
    """
    check_dim(n)
    if grid.n != n:
        raise InputError("grid dimension mismatch")
    if index == 0:
        return from_callable(grid, lambda r: (1.0 + r * r) ** (-(n - 2) / 2.0),
                             n - 2.0)
    if index == n + 1:
        return from_callable(
            grid,
            lambda r: (1.0 - r * r) / (1.0 + r * r)
            * (1.0 + r * r) ** (-(n - 2) / 2.0),
            n - 2.0)
    if 1 <= index <= n:
        raise InputError(
            f"index {index} is a non-radial component: for radial data these "
            "orthogonality conditions hold automatically (odd symmetry); use "
            "indices 0 or n+1")
    raise InputError(f"index must be 0 or {n + 1}, got {index}")


def gns_optimizer(n: int, grid: RadialGrid, q: float) -> RadialFn:
    """Profile (1+r^2)^{-1/(q-1)} extremizing the product-form interpolation
    inequalities with exponent pair (q, 2(q-1))."""
    check_dim(n)
    if not q > 1.0:
        raise InputError(f"q must exceed 1, got {q}")
    return from_callable(grid, lambda r: (1.0 + r * r) ** (-1.0 / (q - 1.0)),
                         2.0 / (q - 1.0))


# -- sharp constants ----------------------------------------------------------

@dataclass(frozen=True)
class SharpConstants:
    n: int
    S_n: float             # sharp Sobolev constant
    C_n: float             # sharp HLS constant, C_n = 1/S_n
    kappa_n: float         # local stability constant 8(n+1)/(3n(n+2)^2(n+4))
    ustar_p_norm_p: float  # ||u_star||_p^p at p = 2n/(n+2)
    surface_area: float    # |S^{n-1}|


def sharp_constants(n: int) -> SharpConstants:
    n = check_dim(n)
    S_n = math.pi * n * (n - 2) * (gamma_fn(n / 2.0) / gamma_fn(float(n))) ** (2.0 / n)
    kappa = 8 * (n + 1) / (3 * n * (n + 2) ** 2 * (n + 4))
    upp = (2.0 ** (1 - n) * math.pi ** ((n + 1) / 2.0)
           / gamma_fn((n + 1) / 2.0))
    return SharpConstants(n=n, S_n=S_n, C_n=1.0 / S_n, kappa_n=kappa,
                          ustar_p_norm_p=upp, surface_area=surface_area(n))


def lp_exponent(n: int) -> float:
    """The dual-pair exponent p = 2n/(n+2)."""
    return 2.0 * n / (n + 2.0)


def critical_exponent(n: int) -> float:
    """The Sobolev exponent 2* = 2n/(n-2)."""
    return 2.0 * n / (n - 2.0)


# -- norms --------------------------------------------------------------------

def lp_norm_reported(f: RadialFn, p: float):
    """(||f||_p, quad_error), with the truncation estimate from the tail."""
    if p < 1.0:
        raise InputError(f"p must be >= 1, got {p}")
    n = f.grid.n
    if not p * f.tail_exponent > n:
        raise InputError(
            f"tail exponent {f.tail_exponent} gives a non-integrable |f|^p "
            f"(need p*beta > n = {n})")
    integral, err = f.grid.integrate_reported(np.abs(f.values) ** p,
                                              p * f.tail_exponent)
    integral = max(integral, 0.0)
    norm = integral ** (1.0 / p)
    norm_err = err / (p * integral ** (1.0 - 1.0 / p)) if integral > 0 else err ** (1.0 / p)
    return norm, norm_err


def lp_norm(f: RadialFn, p: float) -> float:
    return lp_norm_reported(f, p)[0]


def star_norm_reported(v: RadialFn):
    """(star norm, quad_error): ||v||_*^2 = int v^2 (1+|x|^2)^2 dx."""
    n = v.grid.n
    if not v.tail_exponent > (n + 4) / 2.0:
        raise InputError(
            f"tail exponent {v.tail_exponent} too slow for the weighted norm "
            f"(need beta > (n+4)/2 = {(n + 4) / 2})")
    r = v.grid.radii
    integrand = v.values ** 2 * (1.0 + r * r) ** 2
    sq, err = v.grid.integrate_reported(integrand, 2.0 * v.tail_exponent - 4.0)
    sq = max(sq, 0.0)
    norm = math.sqrt(sq)
    return norm, (err / (2.0 * norm) if norm > 0 else math.sqrt(err))


def star_norm(v: RadialFn) -> float:
    return star_norm_reported(v)[0]


def star_norm_squared_reported(v: RadialFn):
    norm, err = star_norm_reported(v)
    return norm * norm, 2.0 * norm * err if norm > 0 else err * err


def weighted_inner(u: RadialFn, v: RadialFn) -> float:
    """<u, v>_w = int u v (1+|x|^2)^{-2} dx."""
    if not same_grid(u, v):
        raise InputError("operands must share a grid")
    r = u.grid.radii
    integrand = u.values * v.values * (1.0 + r * r) ** (-2)
    value, _ = u.grid.integrate_reported(
        integrand, u.tail_exponent + v.tail_exponent + 4.0)
    return value


def weighted_norm(u: RadialFn) -> float:
    return math.sqrt(max(weighted_inner(u, u), 0.0))


def gradient_norm_squared_reported(f: RadialFn):
    """(||grad f||_2^2, quad_error) via the panel-polynomial derivative."""
    n = f.grid.n
    if not f.tail_exponent > (n - 2) / 2.0:
        raise InputError("gradient integrand not integrable for this tail")
    df = f.grid.derivative(f.values)
    return f.grid.integrate_reported(df * df, 2.0 * f.tail_exponent + 2.0)


# -- interpolation-inequality exponent ----------------------------------------

def gns_theta(n: int, p: float, q: float) -> float:
    """Interpolation exponent theta = 2n(q-p) / (q(2n - p(n-2))) for
    ||u||_q <= C ||u||_p^{1-theta} ||grad u||_2^theta, 2 <= p < q < 2n/(n-2)."""
    check_dim(n)
    two_star = critical_exponent(n)
    if not (2.0 <= p < q < two_star):
        raise InputError(
            f"need 2 <= p < q < 2n/(n-2) = {two_star:g}, got p={p}, q={q}")
    return 2.0 * n * (q - p) / (q * (2.0 * n - p * (n - 2)))
