"""Bayesian inference for the order-constrained Extended Plackett-Luce model."""

__version__ = "0.1.0"

from .perm import (
    ReferenceOrder,
    TopBottomCode,
    applicable_swaps,
    code_to_rho,
    enumerate_constrained_space,
    is_constrained,
    ordering_to_ranking,
    ranking_to_ordering,
    rho_to_code,
    space_size,
    swap_adjacent,
)
from .model import (
    Dataset,
    complete_data_log_lik,
    delta_indicator,
    epl_log_prob,
    observed_data_log_lik,
    pl_log_prob,
    sample_epl_ordering,
    sample_epl_orderings,
)
from .sampler import (
    ChainConfig,
    ChainResult,
    ChainState,
    eval_proposal_log_density,
    gibbs_step_p,
    gibbs_step_y,
    propose_joint,
    run_chain,
    swap_step,
    tjm_step,
)
from .diagnostics import (
    GewekeReport,
    PosteriorSummary,
    export_traces,
    geweke_joint_test,
    import_traces,
    kendall_distance,
    modal_ordering,
    normalized_kendall,
    summarize_posterior,
)
from .experiments import (
    PRESETS,
    RecoveryReport,
    exact_rho_posterior_oracle,
    oracle_check,
    recovery_experiment,
    simulate_dataset,
)
from .dataio import RunManifest, load_dataset, read_summary, save_dataset, write_summary
