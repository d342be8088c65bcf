//! Stability constants, noise-region conditions, the two-cycle threshold and
//! envelope certificates.

mod constants;
mod envelope;
mod exact;
mod regions;
mod report;
mod slope_envelope;
mod two_cycle;

pub use constants::{alpha0, beta0, mathcal_v, psi, script_l, sides_bound, ControlSpec, Verdict};
pub use envelope::{
    build_envelope, check_envelope, local_descent, multi_interval_certificate, multi_interval_gain,
    refine_alpha, Certificate, EnvelopeCheck, EnvelopeSpec, MultiInterval, Refinement,
};
pub use exact::{exact_beta_star, exact_two_cycle};
pub use regions::{
    bernoulli_example_gain, bernoulli_region, cell_verdict, construct_symmetric_gain,
    uniform_condition, ExampleGain, Interval, RegionConstants, SymmetricGain, UniformCheck,
};
pub use report::{
    analyze, region_constants, side_theta, Constants, NoiseSection, SlopeEnvelopeSummary,
    StabilityReport,
};
pub use slope_envelope::{check_slope_envelope, envel, envelope_curve, EnvelCurve, CURVE_POINTS};
pub use two_cycle::{
    beta_star, beta_star_scan, beta_star_with, two_cycle_margin, two_cycle_witness, BetaStar,
    BetaStarMode, Margin, TwoCycle,
};
