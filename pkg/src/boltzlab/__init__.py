"""Deterministic simulator and estimate-verification harness for the
spatially homogeneous Boltzmann equation with long-range collision kernels."""

from .collision import (
    CollisionConfigError,
    CollisionResult,
    CollisionTable,
    QuadratureSpec,
    build_table,
    coercivity_lower_bound,
    conserve_project,
    entropy_production,
    eval_Q,
    eval_gain,
    eval_loss_rate,
    max_loss_rate,
    moment_defect,
)
from .geometry import (
    GeometryDomainError,
    deviation_angle,
    inverse_map_phi,
    perp_frame,
    post_collision,
    sigma_decompose,
    vstar_of_w_2d,
    vstar_of_w_nd,
)
from .kernel import (
    AngularKernel,
    AngularPart,
    CollisionKernel,
    KernelConfigError,
    KineticKernel,
    KineticSingularityError,
    angular_mass,
    angular_moment,
    eval_angular,
    eval_kinetic,
    from_inverse_power_law,
    kinetic_cell_average,
    split,
    symmetrize,
    symmetrized_angular,
)
from .estimates import (
    GLOBAL_REGIME,
    INITIAL_DATA,
    LOCAL_REGIME,
    PERTURBATION_SHAPES,
    EstimateConfigError,
    EstimateRunError,
    GradientReport,
    GrazingSweepReport,
    LpOdeReport,
    MomentReport,
    SimulationConfig,
    StabilityCalibration,
    StabilityReport,
    TrajectoryReport,
    calibrate_stability,
    classify_regime,
    closed_form_moments,
    compute_Cs,
    difference_norms,
    evolve,
    fit_gradient_constant,
    fit_lp_constant,
    fit_moment_constant,
    gradient_check,
    grazing_sweep,
    lp_ode_check,
    lp_ode_rhs,
    make_initial_data,
    matched_maxwellian,
    moment_check,
    perturbed_initial_data,
    riccati_blowup_time,
    run_pair,
    stability_run,
    step,
)
from .inequality_lab import (
    CHECK_NAMES,
    Calibration,
    CheckTally,
    InequalityCheck,
    InequalityCheckError,
    battery,
    calibrate,
    check_cos_expansion,
    check_povzner,
    check_weight_diff,
    csv_rows,
    draw_velocity_pairs,
    score,
    weight_probe_panel,
)
from .phase_space import (
    Distribution,
    NormSpec,
    PhaseSpaceError,
    VelocityGrid,
    clip_negative,
    entropy,
    fd_derivative,
    interpolate,
    load_checkpoint,
    lp_norm,
    maxwellian,
    moments,
    norm,
    save_checkpoint,
    sobolev_norm,
)

__version__ = "0.1.0"
