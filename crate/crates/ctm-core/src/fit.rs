use serde::{Deserialize, Serialize};

/// Least-squares line y = intercept + slope·x with its coefficient of determination.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope.
    pub slope_error: f64,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_error = if n > 2.0 && sxx > 0.0 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    LineFit { slope, intercept, r2, slope_error }
}

/// |y| ≈ A e^{-βx} fitted on log|y|.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct DecayFit {
    pub beta: f64,
    pub amplitude: f64,
    pub r2: f64,
    pub beta_error: f64,
}

/// Exponential fit skipping values at or below `floor`; None with fewer than three usable points.
pub fn exponential_decay(xs: &[f64], ys: &[f64], floor: f64) -> Option<DecayFit> {
    let (px, py): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).filter(|(_, y)| y.abs() > floor).map(|(x, y)| (*x, y.abs().ln())).unzip();
    if px.len() < 3 {
        return None;
    }
    let f = line_fit(&px, &py);
    Some(DecayFit { beta: -f.slope, amplitude: f.intercept.exp(), r2: f.r2, beta_error: f.slope_error })
}
