"""Eigenvalue splitting at double semi-simple eigenvalues of gyroscopic systems.

Exact spectra and first-order perturbation formulas for a two-degree-of-freedom
gyroscopic system near the node ``(Omega, lambda) = (0, i beta)``, stability
boundaries in the space of damping, circulatory and gyroscopic parameters,
and the same analysis for a rotating string with a spring, a damper and
a frictional follower load.
"""
from .core import (
    GyroSystem2D,
    InvalidSystem,
    NonConvergence,
    ParamPoint,
    QuarticPoly,
    QuarticSpectrum,
    StabilityKind,
    StabilityVerdict,
    char_poly,
    classify,
    exact_spectrum,
    routh_hurwitz,
    solve_quartic,
)
from .perturb import asymptotic_eigs, dissipative_bubble, split_c
from .atlas import (
    boundary_nu,
    boundary_section,
    critical_set,
    find_flutter_boundary,
    freq_band,
    max_re_at_zero,
    omega_cr_mixed,
    scan_map,
)
from .rotating_string import (
    StringParams,
    char_det,
    damper_bubble,
    friction_split,
    mesh_nodes,
    node_split,
    perturbation_coeffs,
    spring_split,
    string_exact_eigs,
    unperturbed_string_eigs,
)

