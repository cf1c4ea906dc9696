"""Numerical laboratory for free-boundary phase interfaces.

The package solves the heat equation on a moving band {|u| < 1} whose free
boundaries carry the gradient condition |grad u| = 1/eps, measures the
curvature quantities of the level surfaces (normal, second fundamental
form, mean curvature, and the forcing potential phi = log(1/|grad u|)),
and verifies numerically that the level surfaces evolve as mean curvature
flow up to the measured forcing, with epsilon-rate experiments for how
fast that forcing vanishes.
"""

from .errors import (
    DegenerateGradientError,
    DomainError,
    ExtinctionError,
    StepRejectError,
    TopologyChangeError,
)
from .fields import (
    BandMask,
    Grid,
    ScalarField,
    band_mask,
    derivative_fields,
    derivatives,
    field_from_function,
    gradient_fields,
    interpolate,
    read_field_csv,
    write_field_csv,
)
from .curvature import (
    CurvatureSample,
    PotentialSpec,
    block_form_check,
    forced_mcf_residual,
    phi_evolution_residual,
    phi_field,
    residual_stats,
    sample,
    sample_from_grad_hess,
)
from .levelset import (
    AnalyticField,
    GridField,
    ImmersionPath,
    gradient_envelope_check,
    hmcf_residual,
    integrate_immersion,
    level_preservation_error,
)
from .radial import (
    RadialRunConfig,
    RadialState,
    SchemeParams,
    band_energy,
    init_from_sphere,
)
from .radial import run as run_radial
from .radial import step as radial_step
from .variation import (
    DeformationField,
    energy,
    div_stress_check,
    inner_gradient_flow_step,
    inner_variation_analytic,
    inner_variation_fd,
    stress_tensor,
)
from .harness import (
    RateFit,
    SweepConfig,
    SweepRecord,
    fit_rate,
    holder_seminorm,
    mcf_reference_radius,
    run_sweep,
)

__version__ = "0.1.0"
