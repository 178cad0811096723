//! Local large deviations, stable limits and local limit diagnostics.

mod lld;
mod stable;
mod stone;

pub use lld::{
    fuk_nagaev_tail, lld_bound_ratio, lld_exponent, unconstrained_ratio, FukNagaevCell, FukNagaevReport, LldCell,
    LldMethod, LldOptions, LldReport,
};
pub use stable::{
    calibrate_scale, half_stable_cdf, half_stable_density, one_sided_density, positivity, skewness, stable_sample,
    unit_density_integral, unit_density_series, ScaleCalibration,
};
pub use stone::{stone_llt_diag, StoneCell, StoneReport};
