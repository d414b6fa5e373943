"""Simulator and verification harness for the radial quasilinear wave
equation u_tt = a(u)^2 laplace(u) in three space dimensions.

The package evolves small compactly supported radial data through the
reduced 1-D form v_tt = a(v/r)^2 v_rr with v = r u, traces the bent
characteristic families of the quasilinear flow, and fits or checks the
decay, dispersion, energy-growth, and stability estimates the solution
theory predicts for this equation.
"""

from .charts import (
    Characteristic,
    CharCoords,
    ConeLocator,
    accumulation_integral,
    beta_slope,
    deviation_report,
    invert_coords,
    jacobian_factor,
    trace,
)
from .errors import (
    CoefficientDomainExceeded,
    ConfigError,
    DomainTooSmall,
    NonFinite,
    QWaveError,
)
from .evolve import (
    RunHistory,
    Snapshot,
    WaveState,
    cfl_dt,
    convergence_order,
    dalembert_reference,
    pde_residual,
    run,
    step,
)
from .functionals import (
    FieldDerivatives,
    MaximalInput,
    build_series,
    cone_sup,
    dispersion_integral,
    energy,
    lpm_fields,
    maximal_function,
    mpm_fields,
    vectorfield_energy,
    weighted_strichartz,
)
from .model import (
    CoefficientModel,
    MollifierKernel,
    RadialProfile,
    coefficient_model,
    h2h1_norm,
    make_bump,
    mollify,
)
from .verify import (
    BoundRecord,
    HomotopyFamily,
    StabilityResult,
    VerificationReport,
    fit_growth_exponent,
    linear_strichartz_check,
    local_bounds_check,
    stability_check,
    stability_gap,
    verify_decay_bounds,
)

__version__ = "0.1.0"
