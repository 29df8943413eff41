"""Conformal zonal modes on R^n and the spectral-gap inequality.

The modes are g_k(r) = f0(r) * P_k(t) with t = (1-r^2)/(1+r^2) and P_k the
degree-k ultraspherical polynomial orthogonal on [-1,1] with weight
(1-t^2)^{(n-2)/2}; they solve -Delta g_k = mu_k g_k (1+r^2)^{-2} with
mu_k = 4k(k+n-1) + n(n-2).  The basis is orthonormalised in the weighted
inner product <u,v>_w = int u v (1+|x|^2)^{-2} dx directly on the grid
(three-term recurrence plus re-orthogonalisation, which naive recurrences
need on graded grids), and the eigen-equation is verified a posteriori by a
discrete-Laplacian residual.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .core import (RadialFn, RadialGrid, basis_function, check_dim,
                   weighted_inner, weighted_norm)
from .potential import hls_quadratic_form_reported
from .verdicts import StabilityVerdict, make_verdict


def eigenvalue(n: int, k: int) -> int:
    """mu_k = 4k(k+n-1) + n(n-2), strictly increasing in k."""
    return 4 * k * (k + n - 1) + n * (n - 2)


def gap_bound(n: int) -> float:
    """Upper bound 1/mu_2 = 1/((n+2)(n+4)) of the spectral quotient."""
    return 1.0 / ((n + 2) * (n + 4))


@dataclass(frozen=True)
class ZonalBasis:
    n: int
    K: int
    grid: RadialGrid
    functions: list          # g_0 .. g_K, weighted-L2 orthonormal
    eigenvalues: list        # mu_0 .. mu_K (exact integers)
    gram_residual: float     # max |<g_j, g_k>_w - delta_jk|
    eigen_residuals: list    # discrete-Laplacian residual per mode


@dataclass(frozen=True)
class SpectralCoeffs:
    coeffs: np.ndarray       # a_0 .. a_K
    residual: float = 0.0    # weighted-norm reconstruction residual

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)


def build_zonal_basis(n: int, grid: RadialGrid, K: int,
                      eigen_tol: float = 1.0e-4) -> ZonalBasis:
    """Orthonormal zonal modes g_0..g_K with verified eigen-residuals."""
    check_dim(n)
    if grid.n != n:
        raise InputError("grid dimension mismatch")
    if K < 2:
        raise InputError(f"need K >= 2 (stability checks use modes k >= 2), got {K}")

    r = grid.radii
    t = (1.0 - r * r) / (1.0 + r * r)
    f0 = basis_function(n, grid, 0)

    # ultraspherical recurrence, index nu = (n-1)/2
    nu = (n - 1) / 2.0
    polys = [np.ones_like(t), 2.0 * nu * t]
    for k in range(2, K + 1):
        polys.append((2.0 * (k + nu - 1) * t * polys[k - 1]
                      - (k + 2 * nu - 2) * polys[k - 2]) / k)

    functions = []
    for k in range(K + 1):
        raw = RadialFn(grid, f0.values * polys[k], float(n - 2))
        # two-pass Gram-Schmidt against the accumulated modes
        for _ in range(2):
            for h in functions:
                raw = raw - weighted_inner(raw, h) * h
        norm = weighted_norm(raw)
        if norm <= 0.0:
            raise InputError(f"mode {k} degenerated on this grid")
        functions.append((1.0 / norm) * raw)

    gram = np.array([[weighted_inner(a, b) for b in functions]
                     for a in functions])
    gram_residual = float(np.max(np.abs(gram - np.eye(K + 1))))

    eigenvalues = [eigenvalue(n, k) for k in range(K + 1)]
    weight = (1.0 + r * r) ** (-2)
    eigen_residuals = []
    for k, gk in enumerate(functions):
        resid = grid.laplacian(gk.values) + eigenvalues[k] * gk.values * weight
        res_norm = weighted_norm(RadialFn(grid, resid, float(n)))
        eigen_residuals.append(res_norm)   # ||g_k||_w = 1
        if res_norm > eigen_tol:
            raise InputError(
                f"eigen-residual {res_norm:.2e} of mode {k} exceeds "
                f"{eigen_tol:.1e}; refine the grid")
    return ZonalBasis(n=n, K=K, grid=grid, functions=functions,
                      eigenvalues=eigenvalues, gram_residual=gram_residual,
                      eigen_residuals=eigen_residuals)


def project(g: RadialFn, basis: ZonalBasis) -> SpectralCoeffs:
    """Coefficients a_k = <g, g_k>_w plus the reconstruction residual."""
    coeffs = np.array([weighted_inner(g, gk) for gk in basis.functions])
    recon = synthesize(SpectralCoeffs(coeffs), basis)
    diff = g - recon
    gnorm = weighted_norm(g)
    residual = weighted_norm(diff) / gnorm if gnorm > 0 else 0.0
    return SpectralCoeffs(coeffs=coeffs, residual=residual)


def synthesize(coeffs: SpectralCoeffs, basis: ZonalBasis) -> RadialFn:
    arr = np.asarray(coeffs.coeffs, dtype=float)
    if len(arr) > len(basis.functions):
        raise InputError("more coefficients than basis modes")
    values = np.zeros_like(basis.grid.radii)
    for a, gk in zip(arr, basis.functions):
        values = values + a * gk.values
    return RadialFn(basis.grid, values, float(basis.n - 2))


def enforce_orthogonality(g: RadialFn, basis: ZonalBasis) -> RadialFn:
    """Remove the g_0 and g_1 components (modes 0 and n+1 of the constraint
    family; the remaining components vanish identically on radial data)."""
    out = g
    for _ in range(2):
        for gk in basis.functions[:2]:
            out = out - weighted_inner(out, gk) * gk
    return out


def low_mode_overlap(g: RadialFn, basis: ZonalBasis) -> float:
    """max |<g, g_k>_w| over the removed modes k = 0, 1."""
    return max(abs(weighted_inner(g, basis.functions[0])),
               abs(weighted_inner(g, basis.functions[1])))


def conformal_deficit_reported(g: RadialFn):
    """(D[g], quad_error) with D[g] = int phi (-Delta)^{-1} phi dx for
    phi = g (1+|x|^2)^{-2}."""
    r = g.grid.radii
    phi = RadialFn(g.grid, g.values * (1.0 + r * r) ** (-2),
                   g.tail_exponent + 4.0)
    return hls_quadratic_form_reported(phi)


def spectral_gap_check(g: RadialFn, basis: ZonalBasis,
                       ortho_tol: float = 1.0e-6) -> StabilityVerdict:
    """Check D[g] / ||g||_w^2 <= 1/((n+2)(n+4)) for g orthogonal to modes
    0 and 1.  Inputs violating the orthogonality are rejected."""
    gnorm = weighted_norm(g)
    if gnorm <= 0.0:
        raise InputError("zero input")
    if low_mode_overlap(g, basis) > ortho_tol * gnorm:
        raise InputError(
            "input is not orthogonal to modes 0 and 1; call "
            "enforce_orthogonality first")
    dval, derr = conformal_deficit_reported(g)
    quotient = dval / gnorm ** 2
    bound = gap_bound(basis.n)
    quad_error = derr / gnorm ** 2 + 1.0e-14
    return make_verdict(lhs=quotient, rhs=bound, margin=bound - quotient,
                        quad_error=quad_error, quotient=quotient)
