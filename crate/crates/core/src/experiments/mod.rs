//! Parameter sweeps and their analysis.

mod collapse;
mod report;
mod scan;
mod timing;

pub use collapse::{fit_collapse, fit_collapse_with, raw_crossings, CollapseFit, CollapseOptions, CurveCrossing};
pub use report::{
    read_threshold_csv, write_collapse_json, write_effective_rate_csv, write_loss_csv, write_threshold_csv,
    write_timing_csv, Metadata,
};
pub use scan::{decoder_kind, run_effective_rate_scan, run_threshold_scan, ThresholdPoint};
pub use timing::{find_crossing, power_law_slope, run_timing_scan, TimingPoint, MIN_WARMUP};
