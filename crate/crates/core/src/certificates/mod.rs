//! Recovery certificates: the M⁺ criterion and κ, Monte Carlo small-ball
//! quantities, analytic bounds and sample-complexity thresholds.

mod mplus;
mod probe;
mod smallball;
mod threshold;

pub use mplus::{
    certificate_from_witness, certify_mplus_biased, hoeffding_probability, mplus_feasible, MPlusCertificate,
    MPlusFeasibility, MPlusStatus,
};
pub use probe::{empirical_nsp_probe, sample_cone_vector, ProbeReport};
pub use smallball::{
    analytic_w_bound, debiased_plugin_bound, debiased_w_bound, estimate_q, estimate_smallball, estimate_w,
    naive_plugin_bound, paley_zygmund_floor, sample_directions, smallball_lower_bound,
    smallball_lower_bound_debiased, tail_probabilities, DirectionPlan, QEstimate, SmallBallEstimate,
    SmallBallRequest, WidthEstimate, WidthSet,
};
pub use threshold::{sample_complexity, threshold_value, ThresholdKind};
