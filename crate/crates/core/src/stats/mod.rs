//! Security bounds, exact tails, Monte Carlo estimators and goodness-of-fit
//! tests.

mod bounds;
mod hypothesis;
mod monte_carlo;
mod roc;

pub use bounds::{exact_swap_fp, exact_swap_fp_ratio, hoeffding_bound, BoundQuery};
pub use hypothesis::{
    kolmogorov_sf, ks_normality, ks_one_sample, ks_two_sample, sign_balance_chi2,
    two_proportion_p_value, KsResult, MIN_SAMPLES,
};
pub use monte_carlo::{
    blind_search_attack, monte_carlo_swap, monte_carlo_swap_pipeline, wilson_interval, TrialSummary,
    WILSON_Z99,
};
pub use roc::{roc_curve, Roc, RocPoint};
