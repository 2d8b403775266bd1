"""Composite size-distribution toolkit.

Heavy-tailed size distributions (lognormal, double-Pareto lognormal,
generalized beta of the second kind, semi-nonparametric lognormal, and
finite mixtures of lognormal, loglogistic and log-Student components),
maximum-likelihood fitting with multi-start verification, goodness-of-fit
and information-criterion model selection, double truncation, sampling,
and Fokker-Planck drift fields for time-interpolated fits.
"""

from .distributions import (
    DPLNParams,
    GB2Params,
    LLParams,
    LNParams,
    LNSNPParams,
    LStParams,
)
from .errors import (
    DomainError,
    EmptyAfterCleaning,
    MassTooSmall,
    NonFiniteObjective,
    NotEstimable,
    OutOfWindow,
    RejectionBudget,
    SingularInformation,
    SizemixError,
    ZeroDensity,
)
from .estimation import (
    FitConfig,
    FittedModel,
    fit_mle,
    ln_closed_form_mle,
    nelder_mead,
    standard_errors,
)
from .fokker_planck import (
    DriftField,
    ParamPath,
    drift_4lst,
    drift_5lsttt,
    fp_residual,
    generic_drift,
    k_term,
    posterior_probs,
    simulate_sde,
)
from .gof import ad_stat, cm_stat, compute_gof, ks_stat, two_sample_tests
from .mixtures import MODEL_NAMES, MixtureParams, ModelSpec, canonicalize, model_spec
from .pipeline import (
    Dataset,
    DescriptiveStats,
    describe,
    emit_reports,
    ingest_csv,
    run_full_workflow,
    run_is_oos_workflow,
    run_tt_workflow,
    split_75_25,
)
from .sampling import RngStream, sample, sample_truncated
from .selection import (
    SelectionRow,
    SelectionTable,
    aic,
    bic,
    build_table,
    hqc,
    summarize_counts,
)
from .truncation import (
    TruncatedModel,
    TruncationWindow,
    empirical_window,
    truncate_mixture,
    truncate_pdf,
)

__version__ = "0.1.0"
