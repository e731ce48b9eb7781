//! Renewal-density analysis of timestamped event streams.
//!
//! The crate estimates the renewal density of a stream two ways (sliding-window
//! partial sums, and repeated convolution of the first-order gap pdf), tests
//! the empirical estimate for periodic components with a Pearson chi-square
//! test, and measures inter-arrival memory from the cumulative difference of
//! the two estimates.
//!
//! Inner loops (per-order histograms, convolution steps, candidate bin widths,
//! sub-density tests) run on rayon when the `parallel` feature is enabled; see
//! [`Execution`].

pub mod analysis;
pub mod characterization;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod histogram;
pub mod ingest;
pub mod synth;

pub use analysis::{analyze, detect_periodic, estimate_pair, Analysis, EstimationConfig, RenewalPair, Summary};
pub use characterization::{
    characterize, classify_zone, difference, CharacterizationResult, DifferenceCurves, Zone,
    ZoneThresholds,
};
pub use detection::{chi_square_cdf, detect, DetectionConfig, DetectionReport};
pub use error::{Error, Result};
pub use estimation::{
    convolution_rd, convolve, empirical_rd, empirical_rd_from_gaps, first_order_pdf,
    partial_sums, EstimateKind, PartialSumTable, RenewalDensityEstimate,
};
pub use exec::Execution;
pub use histogram::{build_histogram, normalize, optimal_bin_width, shimazaki_cost, Density, Histogram};
pub use ingest::{downsample, inter_arrivals, parse_stream, EventStream, GroupSize, InterArrivals};
