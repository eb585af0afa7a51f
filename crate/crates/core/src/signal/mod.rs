//! Signal conditioning and delineation: baseline-wander removal, robust
//! baseline estimation, peak analysis, fiducial points and beat segments.

mod baseline;
mod fiducials;
mod filter;
mod peaks;
mod segment;

pub use baseline::{ransac_baseline, ransac_baseline_with, Baseline, RansacConfig};
pub use fiducials::{locate_fiducials, FiducialConfig, Fiducials};
pub use filter::{design_butterworth_highpass, filtfilt, Biquad, BiquadCascade};
pub use peaks::{find_peaks, peak_prominence, peak_width, Peak, Polarity};
pub use segment::{segment_beats, BeatSegment};
