"""Collocation operators on a Gauss-Legendre reference panel.

The radial grids are built from uniform panels in a stretched coordinate,
each carrying the same K Gauss-Legendre nodes.  All per-panel operations
(integration, running integrals, differentiation, interpolation) reduce to
fixed K x K matrices acting on the sampled values, built here once.
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import roots_legendre


class PanelOperators:
    """Dense operators acting on values at the K reference nodes in [-1, 1].

    analysis:    values -> Legendre coefficients (exact for degree < K)
    diff:        values -> d/dx values at the nodes
    running:     values -> integral from -1 to each node
    weights:     plain quadrature weights (integral over the whole panel)
    """

    def __init__(self, order: int):
        if order < 2:
            raise ValueError("panel order must be >= 2")
        nodes, weights = roots_legendre(order)
        self.order = order
        self.nodes = nodes
        self.weights = weights

        eye = np.eye(order)
        basis_vals = np.empty((order, order))     # P_m at nodes
        basis_der = np.empty((order, order))      # P_m' at nodes
        basis_run = np.empty((order, order))      # int_{-1}^{x} P_m
        for m in range(order):
            coef = eye[m]
            basis_vals[m] = npleg.legval(nodes, coef)
            basis_der[m] = npleg.legval(nodes, npleg.legder(coef))
            anti = npleg.legint(coef)
            basis_run[m] = npleg.legval(nodes, anti) - npleg.legval(-1.0, anti)

        scale = (2.0 * np.arange(order) + 1.0) / 2.0
        self.analysis = scale[:, None] * (basis_vals * weights[None, :])
        self.diff = basis_der.T @ self.analysis
        self.running = basis_run.T @ self.analysis

    def interp_matrix(self, points: np.ndarray) -> np.ndarray:
        """values at nodes -> values of the interpolant at `points`."""
        points = np.asarray(points, dtype=float)
        basis = np.empty((self.order, points.size))
        eye = np.eye(self.order)
        for m in range(self.order):
            basis[m] = npleg.legval(points, eye[m])
        return basis.T @ self.analysis


@lru_cache(maxsize=8)
def panel_operators(order: int) -> PanelOperators:
    return PanelOperators(order)
