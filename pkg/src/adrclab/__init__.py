"""adrclab: exact tolerable-gain margins and closed-loop simulation for
disturbance-rejection control of uncertain integrator-chain plants."""

from .controller import (
    ControllerConfig,
    compute_tu,
    control_law,
    ideal_derivative,
    validate_feedback,
)
from .errors import DivergenceError, LyapunovError, NumericError, OracleError
from .linalg import (
    companion_matrix,
    hurwitz_eig_oracle,
    rk4_step,
    solve_lyapunov,
    spectral_norm,
)
from .observer import EsoGains, EsoState, error_matrix, eso_derivative, eso_gains
from .plant import (
    PlantConfig,
    ReferenceSpec,
    UncertaintySpec,
    eval_g,
    plant_derivative,
    reference_vector,
)
from .ratpoly import (
    HurwitzVerdict,
    Polynomial,
    as_fraction,
    routh_hurwitz,
    simplest_fraction,
)
from .scenarios import ScenarioError, load_scenario, scenario_from_dict
from .simulate import (
    FalsificationEvidence,
    Scenario,
    SimResult,
    SweepRow,
    auto_step,
    combined_derivative,
    default_feedback,
    falsification_run,
    omega_sweep,
    run_closed_loop,
)
from .stability import (
    GainInterval,
    PhiVector,
    TableRow,
    bandwidth_phi,
    build_a1,
    build_a2,
    char_poly_a2,
    gain_margin,
    gain_margin_values,
    is_well_performed,
    lemma_range,
    table_report,
)

__version__ = "0.1.0"

__all__ = [
    "ControllerConfig", "compute_tu", "control_law", "ideal_derivative",
    "validate_feedback",
    "DivergenceError", "LyapunovError", "NumericError", "OracleError",
    "companion_matrix", "hurwitz_eig_oracle", "rk4_step", "solve_lyapunov",
    "spectral_norm",
    "EsoGains", "EsoState", "error_matrix", "eso_derivative", "eso_gains",
    "PlantConfig", "ReferenceSpec", "UncertaintySpec", "eval_g",
    "plant_derivative", "reference_vector",
    "HurwitzVerdict", "Polynomial", "as_fraction", "routh_hurwitz",
    "simplest_fraction",
    "ScenarioError", "load_scenario", "scenario_from_dict",
    "FalsificationEvidence", "Scenario", "SimResult", "SweepRow",
    "auto_step", "combined_derivative", "default_feedback",
    "falsification_run", "omega_sweep", "run_closed_loop",
    "GainInterval", "PhiVector", "TableRow", "bandwidth_phi", "build_a1",
    "build_a2", "char_poly_a2", "gain_margin", "gain_margin_values",
    "is_well_performed", "lemma_range", "table_report",
]
