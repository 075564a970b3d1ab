"""Fixed-width stopping rules for Markov chain Monte Carlo.

The library decides when a simulation has run long enough: it estimates
the Monte Carlo standard error of an ergodic average with batch means or
regenerative tours, forms a confidence interval, and stops the chain the
first time the interval's half-width (plus a small-sample penalty) drops
to a user-chosen epsilon.  A convergence-diagnostic baseline, example
chains with known answers, and a replication-study harness round out the
package.
"""

__version__ = "0.1.0"

from .diagnostics import GDReport, GDTracker, GewekeConfig, gd_stopping, geweke_z
from .estimators import (
    ConsistentBatchMeans,
    FixedBatchMeans,
    Regenerative,
    VarianceEstimate,
    batch_means,
    half_width,
    rs_variance,
)
from .harness import (
    MethodSpec,
    StudyConfig,
    parse_config,
    parse_method,
    resolve_truth,
    run_study,
    summarize,
)
from .model import (
    BatchSchedule,
    FixedWidthReport,
    ScalarTrace,
    StoppingConfig,
    Tour,
    TourSet,
    cbm_schedule,
    fixed_schedule,
)
from .quantiles import normal_quantile, student_t_quantile
from .regeneration import (
    CLAMP_DIAGNOSTICS,
    GibbsRegenSpec,
    IndepMHRegenSpec,
    MinorizationSpec,
    atom_regen,
    gibbs_regen_prob,
    regen_prob_general,
    regen_prob_indep_mh,
    tours_from_run,
)
from .rng import seed_fingerprint, stream
from .samplers import (
    HierModel,
    ParetoIndepMH,
    TwoStateChain,
    TwoStateStream,
    calibrate_gibbs_regen,
    default_hier_data_path,
    gibbs_q_start,
    gibbs_sweep,
    h_peak,
    iid_posterior_draw,
    iid_posterior_sample,
    load_data_csv,
    pareto_draw,
    pareto_mh_step,
    pareto_q_start,
    run_hier_chain,
    run_pareto_chain,
    synthetic_hier_data,
    two_state_step,
)
from .stopping import (
    CheckpointPolicy,
    PenaltySpec,
    TourTracker,
    WidthTracker,
    penalty,
    run_until_width,
    should_stop,
)

__all__ = [
    "__version__",
    "BatchSchedule",
    "CLAMP_DIAGNOSTICS",
    "CheckpointPolicy",
    "ConsistentBatchMeans",
    "FixedBatchMeans",
    "FixedWidthReport",
    "GDReport",
    "GDTracker",
    "GewekeConfig",
    "GibbsRegenSpec",
    "HierModel",
    "IndepMHRegenSpec",
    "MethodSpec",
    "MinorizationSpec",
    "ParetoIndepMH",
    "PenaltySpec",
    "Regenerative",
    "ScalarTrace",
    "StoppingConfig",
    "StudyConfig",
    "Tour",
    "TourSet",
    "TourTracker",
    "TwoStateChain",
    "TwoStateStream",
    "VarianceEstimate",
    "WidthTracker",
    "atom_regen",
    "batch_means",
    "calibrate_gibbs_regen",
    "cbm_schedule",
    "default_hier_data_path",
    "fixed_schedule",
    "gd_stopping",
    "geweke_z",
    "gibbs_q_start",
    "gibbs_regen_prob",
    "gibbs_sweep",
    "h_peak",
    "half_width",
    "iid_posterior_draw",
    "iid_posterior_sample",
    "load_data_csv",
    "normal_quantile",
    "pareto_draw",
    "pareto_mh_step",
    "pareto_q_start",
    "parse_config",
    "parse_method",
    "penalty",
    "regen_prob_general",
    "regen_prob_indep_mh",
    "resolve_truth",
    "rs_variance",
    "run_hier_chain",
    "run_pareto_chain",
    "run_study",
    "run_until_width",
    "seed_fingerprint",
    "should_stop",
    "stream",
    "student_t_quantile",
    "summarize",
    "synthetic_hier_data",
    "tours_from_run",
    "two_state_step",
]
