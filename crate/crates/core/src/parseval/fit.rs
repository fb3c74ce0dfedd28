use serde::Serialize;

use super::experiment::ConvolutionReport;
use crate::error::{invalid, Error, Result};

/// Errors smaller than this fraction of the sum are treated as zero crossings.
pub const NEGLIGIBLE_ERROR: f64 = 1e-9;

/// Least-squares fit of `log|error|` against `log N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    /// `(log N, log |signed_error|)` for the points used.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// Points left out because their error was (near) zero.
    pub dropped: usize,
}

/// Fits the growth exponent of `|signed_error|` over the reports.
pub fn fit_exponent(reports: &[ConvolutionReport]) -> Result<ExponentFit> {
    let ns: Vec<f64> = reports.iter().map(|r| r.n as f64).collect();
    let errors: Vec<f64> = reports.iter().map(|r| r.signed_error).collect();
    let actuals: Vec<f64> = reports.iter().map(|r| r.actual).collect();
    fit_power_law(&ns, &errors, &actuals)
}

/// Fits `|errors[i]| ≈ e^b · ns[i]^a`, dropping points with
/// `|error| ≤ 1e-9·|actual|`.
pub fn fit_power_law(ns: &[f64], errors: &[f64], actuals: &[f64]) -> Result<ExponentFit> {
    if ns.len() != errors.len() || ns.len() != actuals.len() {
        return Err(invalid("fit inputs must have equal lengths"));
    }
    let mut points = Vec::with_capacity(ns.len());
    let mut dropped = 0;
    for ((&n, &e), &a) in ns.iter().zip(errors).zip(actuals) {
        if !(n > 0.0) {
            return Err(invalid(format!("N must be positive, got {n}")));
        }
        if e == 0.0 || e.abs() <= NEGLIGIBLE_ERROR * a.abs() || !e.is_finite() {
            dropped += 1;
        } else {
            points.push((n.ln(), e.abs().ln()));
        }
    }
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            usable: points.len(),
            dropped,
        });
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("fit needs at least two distinct N"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok(ExponentFit {
        points,
        slope,
        intercept,
        max_residual,
        dropped,
    })
}
