"""Gibbs measures, maximum entropy and Monte Carlo checks for Orlicz balls."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .potentials import (  # noqa: E402
    AxiomReport,
    Huber,
    Mix,
    OrliczFunction,
    Power,
    as_potential,
    parse_spec,
    verify_orlicz,
)
from .quadrature import DEFAULT_QUAD, QuadratureConfig  # noqa: E402
from .gibbs import (  # noqa: E402
    GibbsMeasure1D,
    GridDensity,
    TiltedMeasure,
    exact_lp_log_volume,
    log_partition,
    log_volume_limit,
    moment,
    rate_function,
    solve_alpha,
    variance_of_potential,
)
from .maxent import (  # noqa: E402
    MaxEntSolution,
    Regime,
    Thresholds,
    classify_regime,
    maxent_two_constraints,
    thinshell_rate,
    threshold_rbar,
    threshold_rtilde,
    thresholds,
)
from .samplers import (  # noqa: E402
    BallConstraint,
    ChainState,
    McmcSchedule,
    conditional_marginal_samples,
    mcmc_orlicz_ball,
    sample_gibbs_iid,
    sample_lp_ball_exact,
)
from .empirics import ks_distance, ks_two_sample, rare_event_rate, tv_histogram  # noqa: E402
from .experiments import ExperimentConfig, ExperimentReport, run_experiment  # noqa: E402
