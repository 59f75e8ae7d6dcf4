"""Large deviations of sparse Erdos-Renyi degree distributions and degree-based ERGMs."""

from .errors import DegenerateStatistic, DomainError, NoConfinement, NTooSmall, TooLarge
from .graphs import (
    DegreeFrequency,
    enumerate_frequencies,
    erdos_gallai_check,
    exact_log_partition,
    frequency_from_target,
    log_mckay_upper,
    log_nbar,
)
from .measures import (
    SparseMeasure,
    kl_divergence,
    level_set_lower_bound,
    metric_d,
    poisson_measure,
    poisson_rate,
    rate_I,
    rate_I_divergence_form,
    truncate_renormalize,
)
from .penalty import PenaltyModel, Regime, classify_phase, find_fixed_points, objective_H, phase_scan
from .sampler import (
    ChainConfig,
    Graph,
    SampleSummary,
    concentration_check,
    empirical_degree_distribution,
    estimate_log_partition,
    mcmc_run,
    sample_er,
)
from .tilted import (
    DegreeStatistic,
    VariationalSolution,
    log_normalizer,
    make_statistic,
    solve_J,
    stationarity_residual,
    tilted_mean,
    tilted_measure,
    variational_objective,
)

__version__ = "0.1.0"
