//! Least-squares slopes for log–log scaling fits.

use crate::error::{Error, Result};

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// Residual standard error.
    pub residual_stderr: f64,
}

/// Fits a line through `(x, y)`. Needs at least three points for the error
/// estimates to be defined.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    crate::error::check_len(x.len(), y.len())?;
    let m = x.len();
    if m < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 points for a fit, got {m}")));
    }
    let mf = m as f64;
    let xm = x.iter().sum::<f64>() / mf;
    let ym = y.iter().sum::<f64>() / mf;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let residual_stderr = (ssr / (mf - 2.0)).sqrt();
    Ok(LinearFit { slope, intercept, slope_stderr: residual_stderr / sxx.sqrt(), residual_stderr })
}

/// Fits `log₂ value` against `log₂ δ`; the slope is the scaling exponent.
pub fn fit_scaling(deltas: &[f64], values: &[f64]) -> Result<LinearFit> {
    crate::error::check_len(deltas.len(), values.len())?;
    if deltas.len() < 4 {
        return Err(Error::InvalidParameter(format!("scaling fits need at least 4 points, got {}", deltas.len())));
    }
    if let Some(v) = deltas.iter().chain(values).find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParameter(format!("log–log fit needs positive data, got {v}")));
    }
    let lx: Vec<f64> = deltas.iter().map(|d| d.log2()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.log2()).collect();
    ols(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovers_exponent() {
        let d: Vec<f64> = (3..10).map(|k| 2f64.powi(-k)).collect();
        let v: Vec<f64> = d.iter().map(|x| 3.7 * x.powf(0.5)).collect();
        let f = fit_scaling(&d, &v).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-10);
        assert!(f.residual_stderr < 1e-10);
    }

    #[test]
    fn rejects_nonpositive_and_short_input() {
        assert!(fit_scaling(&[1.0, 0.5, 0.25, 0.125], &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(fit_scaling(&[1.0, 0.5, 0.25], &[1.0, 1.0, 1.0]).is_err());
    }
}
