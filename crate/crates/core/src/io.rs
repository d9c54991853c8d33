//! JSON document schemas for every object that crosses the tool boundary.
//!
//! Matrices are row-major nested arrays; row and column vectors are flat
//! arrays. Model parameters serialize as
//! `{"n", "a", "b", "c", "alpha", "beta", "eta", "family"}`, series as
//! `{"r0", "lags"}`, realizations as `{"n", "H", "F", "N"}` (with an
//! optional `"r0"` for feasibility inputs).

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expressivity::{
    ClassificationReport, DgumVerdict, HmcVerdict, RnnCurve, RnnVerdict,
};
use crate::model::{GumParameters, ModelFamily, Trajectory};
use crate::realization::HoKalmanOutput;
use crate::series::CovarianceSeries;
use crate::srt::SolutionSetSummary;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid document: {0}")]
    Invalid(String),
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, IoError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(IoError::Invalid(format!("{what} rows have unequal lengths")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

/// Model parameters plus the family tag they are meant to satisfy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GumDocument {
    pub n: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub beta: f64,
    pub eta: Vec<Vec<f64>>,
    pub family: ModelFamily,
}

impl GumDocument {
    pub fn from_params(params: &GumParameters, family: ModelFamily) -> Self {
        Self {
            n: params.n(),
            a: matrix_rows(params.a()),
            b: params.b().iter().copied().collect(),
            c: params.c().iter().copied().collect(),
            alpha: matrix_rows(params.alpha()),
            beta: params.beta(),
            eta: matrix_rows(params.eta()),
            family,
        }
    }

    pub fn into_params(&self) -> Result<(GumParameters, ModelFamily), IoError> {
        let n = self.n;
        let a = rows_matrix(&self.a, "a")?;
        if a.nrows() != n || a.ncols() != n {
            return Err(IoError::Invalid(format!(
                "a must be {n}x{n}, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if self.b.len() != n || self.c.len() != n {
            return Err(IoError::Invalid(format!(
                "b and c must have length n = {n}"
            )));
        }
        let params = GumParameters::new(
            a,
            RowDVector::from_row_slice(&self.b),
            DVector::from_column_slice(&self.c),
            rows_matrix(&self.alpha, "alpha")?,
            self.beta,
            rows_matrix(&self.eta, "eta")?,
        )
        .map_err(|e| IoError::Invalid(e.to_string()))?;
        Ok((params, self.family))
    }
}

/// `{"r0", "lags"}` series document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesDocument {
    pub r0: f64,
    pub lags: Vec<f64>,
}

impl SeriesDocument {
    pub fn from_series(series: &CovarianceSeries) -> Self {
        Self {
            r0: series.r0(),
            lags: series.lags().to_vec(),
        }
    }

    pub fn into_series(&self) -> Result<CovarianceSeries, IoError> {
        CovarianceSeries::new(self.r0, self.lags.clone())
            .map_err(|e| IoError::Invalid(e.to_string()))
    }
}

/// `{"n", "H", "F", "N"}` realization document; feasibility inputs carry
/// the lag-0 value alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripletDocument {
    pub n: usize,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    pub n_vec: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
}

impl TripletDocument {
    pub fn from_triplet(t: &crate::realization::RealizationTriplet, r0: Option<f64>) -> Self {
        Self {
            n: t.order(),
            h: t.h().iter().copied().collect(),
            f: matrix_rows(t.f()),
            n_vec: t.n_vec().iter().copied().collect(),
            r0,
        }
    }

    pub fn into_triplet(&self) -> Result<crate::realization::RealizationTriplet, IoError> {
        let n = self.n;
        if self.h.len() != n || self.n_vec.len() != n {
            return Err(IoError::Invalid(format!(
                "H and N must have length n = {n}"
            )));
        }
        let f = rows_matrix(&self.f, "F")?;
        if f.nrows() != n || f.ncols() != n {
            return Err(IoError::Invalid(format!(
                "F must be {n}x{n}, got {}x{}",
                f.nrows(),
                f.ncols()
            )));
        }
        Ok(crate::realization::RealizationTriplet::new(
            RowDVector::from_row_slice(&self.h),
            f,
            DVector::from_column_slice(&self.n_vec),
        ))
    }
}

/// Simulated trajectory: observations plus latent path, tagged with the
/// seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryDocument {
    pub seed: u64,
    pub observations: Vec<f64>,
    pub latents: Vec<Vec<f64>>,
}

impl TrajectoryDocument {
    pub fn from_trajectory(t: &Trajectory) -> Self {
        Self {
            seed: t.seed(),
            observations: t.observations().to_vec(),
            latents: t
                .latents()
                .iter()
                .map(|h| h.iter().copied().collect())
                .collect(),
        }
    }
}

/// Realization output: the triplet plus solver diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizeDocument {
    pub triplet: TripletDocument,
    pub singular_values: Vec<f64>,
    pub reconstruction_error: f64,
}

impl RealizeDocument {
    pub fn from_output(out: &HoKalmanOutput, r0: Option<f64>) -> Self {
        Self {
            triplet: TripletDocument::from_triplet(&out.triplet, r0),
            singular_values: out.singular_values.clone(),
            reconstruction_error: out.reconstruction_error,
        }
    }
}

/// Feasibility summary document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionSummaryDocument {
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_min: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scalar_interval: Option<[f64; 2]>,
    pub degenerate: bool,
    pub diagnostics: String,
}

impl SolutionSummaryDocument {
    pub fn from_summary(s: &SolutionSetSummary) -> Self {
        Self {
            feasible: s.feasible,
            p_min: s.p_min.as_ref().map(matrix_rows),
            p_max: s.p_max.as_ref().map(matrix_rows),
            scalar_interval: s.scalar_interval.map(|(a, b)| [a, b]),
            degenerate: s.degenerate,
            diagnostics: s.diagnostics.clone(),
        }
    }
}

/// Per-family classification verdict in document form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyVerdictDocument {
    pub realizable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_tilde: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<GumDocument>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Set when the search was inconclusive (distinct from refuted).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub undetermined: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DgumFixedPointDocument {
    pub p_tilde: Vec<Vec<f64>>,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<GumDocument>,
}

/// Full classification report document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationDocument {
    pub factorizable: bool,
    pub order: usize,
    pub is_covariance: bool,
    pub gum: FamilyVerdictDocument,
    pub hmc: FamilyVerdictDocument,
    pub dgum: FamilyVerdictDocument,
    pub dgum_fixed_points: Vec<DgumFixedPointDocument>,
    pub rnn: FamilyVerdictDocument,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rnn_curve: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triplet: Option<TripletDocument>,
    pub witness_error: f64,
    pub diagnostics: Vec<String>,
}

impl ClassificationDocument {
    pub fn from_report(report: &ClassificationReport) -> Self {
        let gum = FamilyVerdictDocument {
            realizable: report.gum.realizable,
            p_tilde: None,
            witness: report
                .gum
                .witness
                .as_ref()
                .map(|w| GumDocument::from_params(w, ModelFamily::Gum)),
            reason: None,
            undetermined: false,
        };
        let hmc = match &report.hmc {
            HmcVerdict::Realizable { p_tilde, witness } => FamilyVerdictDocument {
                realizable: true,
                p_tilde: Some(matrix_rows(p_tilde)),
                witness: witness
                    .as_ref()
                    .map(|w| GumDocument::from_params(w, ModelFamily::Hmc)),
                reason: None,
                undetermined: false,
            },
            HmcVerdict::Refuted { reason } => FamilyVerdictDocument {
                realizable: false,
                p_tilde: None,
                witness: None,
                reason: Some(reason.clone()),
                undetermined: false,
            },
            HmcVerdict::Undetermined { detail } => FamilyVerdictDocument {
                realizable: false,
                p_tilde: None,
                witness: None,
                reason: Some(detail.clone()),
                undetermined: true,
            },
        };
        let (dgum, dgum_fixed_points) = Self::dgum_documents(&report.dgum);
        let (rnn, rnn_curve) = match &report.rnn {
            RnnVerdict::Realizable {
                p_tilde,
                curve,
                witness,
            } => (
                FamilyVerdictDocument {
                    realizable: true,
                    p_tilde: Some(matrix_rows(p_tilde)),
                    witness: witness
                        .as_ref()
                        .map(|w| GumDocument::from_params(w, ModelFamily::Rnn)),
                    reason: None,
                    undetermined: false,
                },
                curve.map(|c| {
                    match c {
                        RnnCurve::First => "HN = r0*F",
                        RnnCurve::Second => "HN = r0*F*(2*F^2 - 1)",
                    }
                    .to_string()
                }),
            ),
            RnnVerdict::Refuted { reason } => (
                FamilyVerdictDocument {
                    realizable: false,
                    p_tilde: None,
                    witness: None,
                    reason: Some(reason.clone()),
                    undetermined: false,
                },
                None,
            ),
        };

        Self {
            factorizable: report.factorizable,
            order: report.order,
            is_covariance: report.is_covariance,
            gum,
            hmc,
            dgum,
            dgum_fixed_points,
            rnn,
            rnn_curve,
            triplet: report
                .triplet
                .as_ref()
                .map(|t| TripletDocument::from_triplet(t, None)),
            witness_error: report.witness_error,
            diagnostics: report.diagnostics.clone(),
        }
    }

    fn dgum_documents(
        verdict: &DgumVerdict,
    ) -> (FamilyVerdictDocument, Vec<DgumFixedPointDocument>) {
        let points = verdict
            .fixed_points
            .iter()
            .map(|fp| DgumFixedPointDocument {
                p_tilde: matrix_rows(&fp.p_tilde),
                residual: fp.residual,
                witness: fp
                    .witness
                    .as_ref()
                    .map(|w| GumDocument::from_params(w, ModelFamily::Dgum)),
            })
            .collect();
        (
            FamilyVerdictDocument {
                realizable: verdict.realizable,
                p_tilde: verdict
                    .fixed_points
                    .first()
                    .map(|fp| matrix_rows(&fp.p_tilde)),
                witness: None,
                reason: None,
                undetermined: false,
            },
            points,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expressivity::{classify, ClassifyOptions};
    use crate::realization::RealizationTriplet;

    #[test]
    fn gum_document_round_trip() {
        let params = GumParameters::scalar(0.5, 1.0, 0.2, 0.3, 0.4, 0.6).unwrap();
        let doc = GumDocument::from_params(&params, ModelFamily::Gum);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"family\":\"GUM\""));
        let back: GumDocument = serde_json::from_str(&json).unwrap();
        let (params2, family) = back.into_params().unwrap();
        assert_eq!(family, ModelFamily::Gum);
        assert_eq!(params, params2);
    }

    #[test]
    fn series_document_schema() {
        let s = CovarianceSeries::new(1.0, vec![0.5, 0.25]).unwrap();
        let json = serde_json::to_string(&SeriesDocument::from_series(&s)).unwrap();
        assert_eq!(json, r#"{"r0":1.0,"lags":[0.5,0.25]}"#);
        let doc: SeriesDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc.into_series().unwrap(), s);
    }

    #[test]
    fn series_document_rejects_negative_r0() {
        let doc: SeriesDocument = serde_json::from_str(r#"{"r0":-1.0,"lags":[]}"#).unwrap();
        assert!(doc.into_series().is_err());
    }

    #[test]
    fn triplet_document_uses_upper_case_keys() {
        let t = RealizationTriplet::scalar(1.0, 0.5, 0.3);
        let json = serde_json::to_string(&TripletDocument::from_triplet(&t, Some(1.0))).unwrap();
        assert!(json.contains("\"H\":[1.0]"));
        assert!(json.contains("\"F\":[[0.5]]"));
        assert!(json.contains("\"N\":[0.3]"));
        let doc: TripletDocument = serde_json::from_str(&json).unwrap();
        let back = doc.into_triplet().unwrap();
        assert_eq!(back, t);
        assert_eq!(doc.r0, Some(1.0));
    }

    #[test]
    fn classification_document_serializes() {
        let t = RealizationTriplet::scalar(1.0, 0.5, 0.3);
        let series = crate::realization::reconstruct_series(&t, 1.0, 20).unwrap();
        let report = classify(&series, &ClassifyOptions::default());
        let doc = ClassificationDocument::from_report(&report);
        let json = serde_json::to_string_pretty(&doc).unwrap();
        assert!(json.contains("\"is_covariance\": true"));
        let back: ClassificationDocument = serde_json::from_str(&json).unwrap();
        assert!(back.hmc.realizable);
        assert!(!back.rnn.realizable);
        assert_eq!(back.dgum_fixed_points.len(), 2);
    }

    #[test]
    fn family_tags_parse_both_spellings() {
        assert_eq!("dgum".parse::<ModelFamily>().unwrap(), ModelFamily::Dgum);
        assert_eq!("D-GUM".parse::<ModelFamily>().unwrap(), ModelFamily::Dgum);
        assert!("boltzmann".parse::<ModelFamily>().is_err());
    }
}
