"""Alternating gradient descent-ascent for hidden convex-concave games whose
players are two-layer neural maps, with full spectral/potential auditing."""

from .certificates import (
    PlCertificate,
    active_lipschitz,
    build_pl_certificate,
    certified_radius,
    effective_smoothness,
    equivalence_probe,
    pl_moduli,
)
from .experiments import (
    ExperimentSpec,
    brute_force_gap,
    build_neural_erm,
    build_quadratic_testbed,
    build_rps,
    emit,
    project_simplex,
    rps_coupling,
)
from .objectives import (
    HiddenGame,
    LatentLoss,
    QuadraticTestbed,
    best_response_max,
    best_response_min,
    flat_params,
    game_grads,
    game_value,
    growth_bound,
    label_diameter,
    latent_grad,
    latent_grads,
    latent_value,
    make_loss,
    make_quadratic_game,
    nash_gap,
    split_params,
)
from .players import (
    Activation,
    SpectralCertificate,
    TwoLayerNet,
    certify_input_jacobian,
    empirical_spectrum,
    forward,
    init_gaussian,
    jacobian_input,
    jacobian_params,
    make_activation,
    smoothness_data,
    smoothness_input,
    spectral_bounds_input,
)
from .solver import (
    InitDiagnostics,
    SolverConfig,
    TheoryConstants,
    TrajectoryRecord,
    altgda_step,
    measure_init_diagnostics,
    p0_upper,
    potential,
    recommended_rates,
    run,
    theory_constants,
)
from .validator import (
    InitCheck,
    InitReport,
    check_input_game_init,
    check_neural_game_init,
    data_spectrum,
    experiment_init_sigmas,
    hermite_coeffs,
    hermite_tail_energy,
    neural_spectral_bounds,
)

__version__ = "0.1.0"
