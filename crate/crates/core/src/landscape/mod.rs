//! Critical points: a Newton-type finder, index statistics, the Morse-frame
//! quadratic model, sampling around training trajectories and eigenvalue
//! histograms.

mod finder;
mod morse;
mod sampling;
mod spectrum;
mod stats;

pub use finder::{find_critical_point, CriticalPointRecord, FinderConfig, FinderError};
pub use morse::morse_frame;
pub use sampling::{job_seed, sample_critical_points, Provenance, SamplingConfig, SampledPoint, Snapshot};
pub use spectrum::{spectrum_histogram, SpectrumHistogram};
pub use stats::{index_of, spearman, summarize, zero_threshold, EnsembleSummary, IndexSummary};
