//! Kaplan-Meier probability of not yet being saturated.
//!
//! Each interview is one observation at its own distinct time `j`, so the
//! number at risk at interview `j` is `J - j + 1` and ties cannot occur.
//! With the default coding an interview that elicits at least one new code
//! is an event and a zero-new-code interview is censored; the alternative
//! coding swaps the two. Confidence limits use Greenwood's variance on the
//! log scale by default (`S * exp(±z * sqrt(V))`), or on the plain scale.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::dataset::InterviewSequence;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KmError {
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("all points share the same x")]
    DegenerateX,
    #[error("non-negative slope {0}: no extrapolated saturation")]
    NonNegativeSlope(f64),
}

/// Which interviews count as KM events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventCoding {
    /// Event = interview with at least one new code.
    #[default]
    NewCodes,
    /// Event = interview with zero new codes.
    ZeroNewCodes,
}

impl EventCoding {
    pub fn is_event(self, new_codes: u32) -> bool {
        match self {
            EventCoding::NewCodes => new_codes > 0,
            EventCoding::ZeroNewCodes => new_codes == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiTransform {
    #[default]
    Log,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmOptions {
    pub alpha: f64,
    pub coding: EventCoding,
    pub transform: CiTransform,
}

impl Default for KmOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            coding: EventCoding::default(),
            transform: CiTransform::default(),
        }
    }
}

impl KmOptions {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmPoint {
    pub seq: usize,
    pub at_risk: usize,
    pub event: bool,
    pub survival: f64,
    /// Cumulative Greenwood sum; absent once an event removes the last
    /// subject at risk.
    pub variance: Option<f64>,
    /// Absent when `survival` is zero.
    pub ci: Option<ConfidenceInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub points: Vec<KmPoint>,
    pub alpha: f64,
    pub z: f64,
    pub coding: EventCoding,
    pub transform: CiTransform,
}

impl KmCurve {
    /// S(j), with S(0) = 1.
    pub fn survival_at(&self, seq: usize) -> f64 {
        match seq {
            0 => 1.0,
            j => self.points[j.min(self.points.len()) - 1].survival,
        }
    }

    pub fn last(&self) -> &KmPoint {
        self.points.last().expect("curve has at least one point")
    }

    pub fn events(&self) -> impl Iterator<Item = &KmPoint> {
        self.points.iter().filter(|p| p.event)
    }
}

/// Two-sided normal quantile for level `alpha`.
pub fn normal_quantile(alpha: f64) -> Result<f64, KmError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(KmError::InvalidAlpha(alpha));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

pub fn km_estimate(sequence: &InterviewSequence, options: &KmOptions) -> Result<KmCurve, KmError> {
    let z = normal_quantile(options.alpha)?;
    let total = sequence.len();
    let mut survival = 1.0_f64;
    let mut variance = Some(0.0_f64);
    let mut points = Vec::with_capacity(total);

    for (i, &new_codes) in sequence.new_codes().iter().enumerate() {
        let seq = i + 1;
        let at_risk = total - i;
        let event = options.coding.is_event(new_codes);
        if event {
            let n = at_risk as f64;
            survival *= 1.0 - 1.0 / n;
            variance = match (variance, at_risk) {
                (_, 1) => None,
                (Some(v), _) => Some(v + 1.0 / (n * (n - 1.0))),
                (None, _) => None,
            };
        }
        let ci = match variance {
            Some(v) if survival > 0.0 => Some(interval(survival, v, z, options.transform)),
            _ => None,
        };
        points.push(KmPoint {
            seq,
            at_risk,
            event,
            survival,
            variance,
            ci,
        });
    }

    Ok(KmCurve {
        points,
        alpha: options.alpha,
        z,
        coding: options.coding,
        transform: options.transform,
    })
}

fn interval(survival: f64, variance: f64, z: f64, transform: CiTransform) -> ConfidenceInterval {
    let se = variance.sqrt();
    match transform {
        CiTransform::Log => {
            let factor = (z * se).exp();
            ConfidenceInterval {
                low: survival / factor,
                high: (survival * factor).min(1.0),
            }
        }
        CiTransform::Plain => {
            let half = z * survival * se;
            ConfidenceInterval {
                low: (survival - half).max(0.0),
                high: (survival + half).min(1.0),
            }
        }
    }
}

/// Least-squares line through `points`, returning where it crosses y = 0.
pub fn fit_line_x_intercept(points: &[(f64, f64)]) -> Result<f64, FitError> {
    if points.len() < 2 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(sxx, sxy), (x, y)| {
        let dx = x - mean_x;
        (sxx + dx * dx, sxy + dx * (y - mean_y))
    });
    if sxx == 0.0 {
        return Err(FitError::DegenerateX);
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return Err(FitError::NonNegativeSlope(slope));
    }
    let intercept = mean_y - slope * mean_x;
    Ok(-intercept / slope)
}

/// Where the curve reaches, or is projected to reach, zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SaturationSummary {
    /// First interview with S(j) = 0.
    pub km_zero_seq: Option<usize>,
    /// x-intercept of a line through (j, S(j)) at event interviews; omitted
    /// when the curve itself reaches zero.
    pub km_extrapolated_zero: Option<f64>,
    /// x-intercept of a line through (j, upper limit) at event interviews.
    pub upper_ci_extrapolated_zero: Option<f64>,
}

pub fn saturation_summary(curve: &KmCurve) -> SaturationSummary {
    let km_zero_seq = curve
        .points
        .iter()
        .find(|p| p.survival == 0.0)
        .map(|p| p.seq);
    let km_extrapolated_zero = if km_zero_seq.is_some() {
        None
    } else {
        let pts: Vec<(f64, f64)> = curve.events().map(|p| (p.seq as f64, p.survival)).collect();
        fit_line_x_intercept(&pts).ok()
    };
    let upper: Vec<(f64, f64)> = curve
        .events()
        .filter_map(|p| p.ci.map(|ci| (p.seq as f64, ci.high)))
        .collect();
    SaturationSummary {
        km_zero_seq,
        km_extrapolated_zero,
        upper_ci_extrapolated_zero: fit_line_x_intercept(&upper).ok(),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn pattern(bits: &[u8]) -> InterviewSequence {
        InterviewSequence::new(bits.iter().map(|&b| u32::from(b)).collect()).unwrap()
    }

    const SCENARIO_1: [u8; 10] = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
    const SCENARIO_2: [u8; 10] = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
    const SCENARIO_3: [u8; 10] = [1, 0, 1, 0, 0, 1, 1, 0, 1, 0];

    #[test]
    fn scenario_one() {
        let curve = km_estimate(&pattern(&SCENARIO_1), &KmOptions::default()).unwrap();
        let last = curve.last();
        assert_abs_diff_eq!(last.survival, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(last.variance.unwrap(), 0.1, epsilon = 1e-12);
        let ci = last.ci.unwrap();
        assert_abs_diff_eq!(ci.low, 0.269, epsilon = 5e-4);
        assert_abs_diff_eq!(ci.high, 0.929, epsilon = 5e-4);
    }

    #[test]
    fn scenario_two() {
        let curve = km_estimate(&pattern(&SCENARIO_2), &KmOptions::default()).unwrap();
        assert_eq!(curve.last().survival, 0.0);
        assert_eq!(curve.last().ci, None);
        assert_eq!(curve.last().variance, None);
    }

    #[test]
    fn scenario_three() {
        let curve = km_estimate(&pattern(&SCENARIO_3), &KmOptions::default()).unwrap();
        let last = curve.last();
        assert_abs_diff_eq!(last.survival, 0.23625, epsilon = 1e-12);
        let ci = last.ci.unwrap();
        assert_abs_diff_eq!(ci.low, 0.0479, epsilon = 5e-4);
        assert_eq!(ci.high, 1.0);
    }

    #[test]
    fn plain_transform_differs_from_log_scale() {
        let opts = KmOptions {
            transform: CiTransform::Plain,
            ..KmOptions::default()
        };
        let ci = km_estimate(&pattern(&SCENARIO_1), &opts)
            .unwrap()
            .last()
            .ci
            .unwrap();
        assert_abs_diff_eq!(ci.low, 0.19, epsilon = 5e-3);
        assert_abs_diff_eq!(ci.high, 0.81, epsilon = 5e-3);
    }

    #[test]
    fn zero_coding_flips_events() {
        let opts = KmOptions {
            coding: EventCoding::ZeroNewCodes,
            ..KmOptions::default()
        };
        let prose = km_estimate(&pattern(&SCENARIO_1), &opts).unwrap();
        let table = km_estimate(&pattern(&SCENARIO_2), &KmOptions::default()).unwrap();
        assert_eq!(prose.points, table.points);
    }

    #[test]
    fn all_censored_stays_at_one() {
        let curve = km_estimate(&pattern(&[0, 0, 0]), &KmOptions::default()).unwrap();
        assert!(curve.points.iter().all(|p| p.survival == 1.0));
        assert_eq!(saturation_summary(&curve), SaturationSummary::default());
    }

    #[test]
    fn invalid_alpha() {
        assert!(km_estimate(&pattern(&[1]), &KmOptions::with_alpha(1.5)).is_err());
        assert!(km_estimate(&pattern(&[1]), &KmOptions::with_alpha(0.0)).is_err());
    }

    #[test]
    fn z_for_default_alpha() {
        assert_abs_diff_eq!(
            normal_quantile(0.05).unwrap(),
            1.959963984540054,
            epsilon = 1e-9
        );
    }

    #[test]
    fn fit_collinear() {
        let x = fit_line_x_intercept(&[(1.0, 0.8), (2.0, 0.6), (3.0, 0.4)]).unwrap();
        assert_abs_diff_eq!(x, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn fit_rejections() {
        assert!(matches!(
            fit_line_x_intercept(&[(1.0, 0.5), (2.0, 0.5)]),
            Err(FitError::NonNegativeSlope(_))
        ));
        assert_eq!(
            fit_line_x_intercept(&[(1.0, 0.5)]),
            Err(FitError::TooFewPoints(1))
        );
        assert_eq!(
            fit_line_x_intercept(&[(1.0, 0.5), (1.0, 0.2)]),
            Err(FitError::DegenerateX)
        );
    }

    #[test]
    fn summary_scenario_two_hits_zero() {
        let curve = km_estimate(&pattern(&SCENARIO_2), &KmOptions::default()).unwrap();
        let s = saturation_summary(&curve);
        assert_eq!(s.km_zero_seq, Some(10));
        assert_eq!(s.km_extrapolated_zero, None);
        // upper limits at 6..9 are all clipped to 1
        assert_eq!(s.upper_ci_extrapolated_zero, None);
    }
}
