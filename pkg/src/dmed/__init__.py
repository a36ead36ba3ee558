"""DMED bandit policy and the minimum empirical divergence index for rewards
supported on (-inf, 1]."""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    InfeasibleParameterError,
    LegendrePoint,
    legendre,
    log_mgf,
    lower_dev_bound,
    optimize_bound_params,
    rate_u_I,
    regret_bound,
    upper_dev_bound,
)
from .divergence import (
    ConvergenceError,
    DomainError,
    DualSolution,
    dinf,
    dinf_batch,
    dinf_deriv_mu,
    dinf_le,
    dinf_primal_oracle,
    lagrangian,
    lagrangian_derivs,
    solve_nu_star,
    truncate_at,
)
from .empirical import EmpiricalDist
from .models import (
    ArmModel,
    Bernoulli,
    FiniteSupport,
    RngStream,
    ShiftedNegExponential,
    ShiftedNegGamma,
    TwoPoint,
    UniformInterval,
    model_from_dict,
    model_view,
    sample,
)
from .policies import DMED, UCB1, EpsilonGreedy, PolicyDecision, PolicyError, make_policy
from .simulation import (
    DeviationTrial,
    ExperimentConfig,
    RegretRecord,
    aggregate,
    run_experiment,
    run_replication,
    verify_lower_deviation,
    verify_upper_deviation,
)
