"""hlsverify: numerical verification of sharp Hardy-Littlewood-Sobolev and
Sobolev inequalities on radial data: deficits, spectral gaps, fast-diffusion
flow identities and constructive local stability bounds."""

__version__ = "0.1.0"

from .errors import ConvergenceError, InputError
from .core import (RadialFn, RadialGrid, SharpConstants, basis_function,
                   check_dim, critical_exponent, from_callable, gns_optimizer,
                   gns_theta, lp_exponent, lp_norm, lp_norm_reported,
                   make_grid, sharp_constants, star_norm, star_norm_reported,
                   u_star, weighted_inner, weighted_norm, zero_fn)
from .potential import (PotentialResult, hls_bilinear_form,
                        hls_double_integral_oracle, hls_quadratic_form,
                        hls_quadratic_form_reported, h_minus1_norm,
                        inverse_laplacian, riesz_kernel_constant)
from .spectral import (SpectralCoeffs, ZonalBasis, build_zonal_basis,
                       eigenvalue, enforce_orthogonality, gap_bound, project,
                       spectral_gap_check, synthesize)
from .functionals import (ccl_gns_deficit, duality_square_bound, hls_deficit,
                          holder_upper_bound, pck_lower_bound, sobolev_deficit,
                          stability_quotient)
from .stability import (ManifoldPoint, Perturbation,
                        make_admissible_perturbation, project_to_manifold,
                        verify_proposition, verify_theorem_ruc,
                        verify_theorem_star)
from .flow import (FlowState, ccl_identity_probe,
                   deficit_identity_check_critical, deficit_monotonicity_check,
                   estimate_extinction_time, make_flow_state, step,
                   state_to_radial_fn)
from .verdicts import DeficitReport, StabilityVerdict
