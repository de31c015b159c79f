from . import analysis, decorators, plot, utils
from .analysis import (
    bar_S,
    gn_constant,
    instanton,
    sobolev_S,
    threshold_check,
    threshold_value,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .energymap import EnergyRow, GroundEnergyMap
from .experiments import refinement_study, run_scenario, sweep_rho
from .nonlinearity import (
    CouplingProduct,
    LogPower,
    NonGspError,
    NonlinearitySpec,
    NormPower,
    PiecewisePower,
    SeparablePower,
    SobolevCritical,
    audit_assumptions,
    check_eta2,
    eval_g,
    eval_G,
    eval_h,
    eval_H,
)
from .radial import (
    GridMismatch,
    RadialField,
    RadialGrid,
    StateVector,
    grad_norm_sq,
    integrate,
    lp_norm,
    make_grid,
    mass,
)
from .rearrange import rearrangement_descent, schwarz, schwarz_state
from .soliton import ground_state, scaled_soliton
from .solver import (
    SolutionReport,
    SolveConfig,
    beta_sweep,
    extract_multipliers,
    minimize,
)
from .variational import (
    FiberError,
    constraint_M,
    dilate,
    energy_J,
    fiber_maximizer,
    fiber_scan,
    project_to_M,
    residuals,
)

__author__ = "Mike Stringer"
__email__ = "mike.stringer.internet@gmail.com"
__version__ = "0.1.0"
