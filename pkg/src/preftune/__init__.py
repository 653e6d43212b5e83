"""Human-in-the-loop preference-based tuning of CLF-QP controller gains."""

from .action_space import Action, ActionGrid, DimensionSpec, build_grid, load_grid
from .acquisition import CandidateSet, believed_best, next_action, refresh_candidates
from .clf_plant import (
    ClfCertificate,
    ClfGains,
    EpisodeConfig,
    EpisodeMetrics,
    PeriodicReference,
    PlantState,
    TwoLinkArm,
    clf_qp_delta,
    clf_qp_plus,
    clf_value,
    gains_from_action,
    simulate_episode,
    solve_care,
)
from .preference_gp import (
    FeedbackDataset,
    KernelConfig,
    LikelihoodConfig,
    OrdinalRecord,
    PosteriorModel,
    PreferenceRecord,
    laplace_fit,
    posterior_sample,
)
from .session import (
    ConvergenceReport,
    FeedbackEvent,
    Session,
    SessionConfig,
    plant_autorater_feedback,
    run_batch,
    write_curves_csv,
)
from .synthetic_oracle import OracleConfig, make_oracle, synthetic_ordinal, synthetic_preference

__version__ = "0.1.0"
