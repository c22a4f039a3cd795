//! The verification harness: grid `L^p` norms and exponent fits over
//! `h`-sweeps, Gårding and a priori positivity, microlocal mass, the gradient
//! estimate, boundedness of `Op(q^N(X/√ε))` and weighted derivative bounds.

mod localization;
mod norms;
mod positivity;
mod sweep;

pub use localization::{
    derivative_bounds_check, derivative_sweep_ratios, microlocal_mass, multi_index_pairs, qn_boundedness_check, DerivativeEntry,
    DerivativeRatio,
};
pub use norms::{fit_exponent, ktz_reference, lp_norm_grid, lp_norm_weighted, theoretical_exponent, ExponentFit, MIN_FIT_POINTS};
pub use positivity::{
    apriori_check, apriori_sweep, box_samples, garding_min_eig, garding_sweep, gradient_bound_check, AprioriReport, AprioriResult,
    GardingReport, GardingRow, GradientReport,
};
pub use sweep::{
    format_p, ground_state, p_serde, parallel_map, parse_p, scaling_report, scaling_sweep, sweep_ground_states, validate_h_list, ExponentVerdict, NormOracle, OperatorFamily,
    ScalingReport, ScalingRow, SweepCell, SweepOptions, MIN_SWEEP_POINTS, MIN_SWEEP_SPAN, SCHEMA_VERSION,
};
