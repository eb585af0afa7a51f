use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{basic_metrics, confusion, Confusion};
use super::roc::{roc_operating_points, OperatingPoints};
use crate::numeric::mean;
use crate::{Error, Result};

/// Per-patient TPR spread (population standard deviation) at or above
/// which the report flags high dispersion.
pub const DISPERSION_FLAG_STD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientMetrics {
    pub n_beats: usize,
    pub n_pvc: usize,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    /// No true PVCs, so TPR is undefined.
    pub tpr_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPatientReport {
    pub patients: BTreeMap<String, PatientMetrics>,
    /// Summary over patients with a defined TPR.
    pub tpr_mean: Option<f64>,
    pub tpr_std: Option<f64>,
    pub tpr_min: Option<f64>,
    pub tpr_max: Option<f64>,
    pub high_tpr_dispersion: bool,
}

pub fn per_patient_report(
    pred: &[bool],
    truth: &[bool],
    patient_ids: &[String],
) -> Result<PerPatientReport> {
    if pred.len() != truth.len() || pred.len() != patient_ids.len() {
        return Err(Error::InvalidArgument(
            "predictions, labels and patient ids differ in length".into(),
        ));
    }
    let mut groups: BTreeMap<&str, Confusion> = BTreeMap::new();
    for i in 0..pred.len() {
        let c = confusion(&pred[i..=i], &truth[i..=i])?;
        groups.entry(patient_ids[i].as_str()).or_default().add(&c);
    }
    let patients: BTreeMap<String, PatientMetrics> = groups
        .into_iter()
        .map(|(id, c)| {
            let m = basic_metrics(&c);
            (
                id.to_string(),
                PatientMetrics {
                    n_beats: c.total(),
                    n_pvc: c.tp + c.fn_,
                    tpr: m.tpr,
                    tnr: m.tnr,
                    tpr_undefined: m.tpr.is_none(),
                },
            )
        })
        .collect();
    let tprs: Vec<f64> = patients.values().filter_map(|p| p.tpr).collect();
    let (tpr_mean, tpr_std) = if tprs.is_empty() {
        (None, None)
    } else {
        let m = mean(&tprs);
        let var = tprs.iter().map(|t| (t - m).powi(2)).sum::<f64>() / tprs.len() as f64;
        (Some(m), Some(var.sqrt()))
    };
    Ok(PerPatientReport {
        tpr_min: tprs.iter().copied().reduce(f64::min),
        tpr_max: tprs.iter().copied().reduce(f64::max),
        high_tpr_dispersion: tpr_std.is_some_and(|s| s >= DISPERSION_FLAG_STD),
        patients,
        tpr_mean,
        tpr_std,
    })
}

/// Every reported metric for one predictor, on the `[0, 1]` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub n_beats: usize,
    pub confusion: Confusion,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub ppv: Option<f64>,
    pub fpr: Option<f64>,
    pub acc: Option<f64>,
    /// `None` when the ground truth holds a single class.
    pub operating: Option<OperatingPoints>,
    pub per_patient: PerPatientReport,
}

impl MetricsReport {
    /// Hard predictions are `score > 0.5`.
    pub fn compute(
        model: &str,
        scores: &[f64],
        truth: &[bool],
        patient_ids: &[String],
    ) -> Result<Self> {
        let pred: Vec<bool> = scores.iter().map(|&s| s > 0.5).collect();
        let c = confusion(&pred, truth)?;
        let m = basic_metrics(&c);
        let operating = match roc_operating_points(scores, truth) {
            Ok(op) => Some(op),
            Err(Error::ClassAbsent(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            model: model.to_string(),
            n_beats: c.total(),
            confusion: c,
            tpr: m.tpr,
            tnr: m.tnr,
            ppv: m.ppv,
            fpr: m.fpr,
            acc: m.acc,
            operating,
            per_patient: per_patient_report(&pred, truth, patient_ids)?,
        })
    }
}

const CSV_HEADER: &str =
    "model,tpr,tnr,ppv,fpr,acc,fpr_at_50tpr,fnr_at_50tnr,tpr_at_1fpr,tnr_at_1fnr";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

/// One row per report in the column order of `CSV_HEADER`; undefined values are
/// written as `undefined`.
pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        let op = r.operating;
        let cells = [
            r.tpr,
            r.tnr,
            r.ppv,
            r.fpr,
            r.acc,
            op.map(|o| o.fpr_at_50tpr),
            op.map(|o| o.fnr_at_50tnr),
            op.map(|o| o.tpr_at_1fpr),
            op.map(|o| o.tnr_at_1fnr),
        ];
        let row: Vec<String> = cells.into_iter().map(cell).collect();
        out.push_str(&format!("{},{}\n", r.model, row.join(",")));
    }
    out
}
