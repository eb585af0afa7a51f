//! Detection metrics with PVC as the positive class, ROC operating
//! points, Wilson score intervals and per-patient breakdowns.

mod metrics;
mod report;
mod roc;

pub use metrics::{basic_metrics, confusion, wilson_interval, BasicMetrics, Confusion};
pub use report::{
    metrics_csv, per_patient_report, MetricsReport, PatientMetrics, PerPatientReport,
    DISPERSION_FLAG_STD,
};
pub use roc::{roc_operating_points, OperatingPoints};
