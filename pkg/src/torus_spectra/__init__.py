"""Spectral invariants of discrete tori and their real-torus limits."""

from .discrete_torus import (
    DiscreteTorus,
    EigenvalueStream,
    epstein_hurwitz_log_product,
    heat_kernel_cycle,
    log_det_star,
    spanning_trees_exact,
    spectral_zeta_discrete,
    spectrum,
    theta_bessel,
    theta_spectral,
)
from .real_torus import (
    RealTorusDiag,
    dedekind_eta,
    epstein_derivative_at_zero,
    epstein_zeta_diag,
    kronecker_limit_d2,
    kronecker_limit_diag,
    log_det_star_real,
    theta_real,
    zeta_real,
    zeta_real_ct_at_pole,
)
from .special_functions import bessel_i, bessel_i_e, bessel_i_scaled, catalan, mellin_bessel_closed
from .transforms import h_n, i_d, lead_term_riemann, verify_log_product_split

__version__ = "0.1.0"
