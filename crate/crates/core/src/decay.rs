//! Predicted decay exponents of weighted norms, log-log fitting over
//! validity windows, and the dyadic sup-recursion check.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{FieldKind, NormSeries, WeightedNormSpec};
use crate::error::{Error, Result};

/// Baseline `L^2` decay exponent of the velocity and magnetic field.
pub const GAMMA0: f64 = 0.75;

/// Minimum coefficient of determination for a passing fit.
pub const R2_FLOOR: f64 = 0.95;

pub const MIN_FIT_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentQuery {
    pub field: FieldKind,
    pub a: f64,
    pub b: u32,
    pub p: f64,
}

impl ExponentQuery {
    pub fn new(field: FieldKind, a: f64, b: u32, p: f64) -> Self {
        Self { field, a, b, p }
    }

    pub fn validate(&self) -> Result<()> {
        if self.field == FieldKind::Custom {
            return Err(Error::InvalidNormSpec("no prediction for custom fields".into()));
        }
        WeightedNormSpec::new(self.field, self.a, self.b, self.p).map(|_| ())
    }
}

impl From<&WeightedNormSpec> for ExponentQuery {
    fn from(s: &WeightedNormSpec) -> Self {
        Self::new(s.field, s.a, s.b, s.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prediction {
    Exponent(f64),
    OutOfValidity,
}

impl Prediction {
    pub fn exponent(self) -> Option<f64> {
        match self {
            Prediction::Exponent(e) => Some(e),
            Prediction::OutOfValidity => None,
        }
    }
}

/// Decay exponent of `| |x|^a D^b f |_{L^p}`:
/// `-GAMMA0 + a/2 - b/2 - (3/4)(1 - 2/p)`, minus a further `1/2` for the
/// vorticity. Velocity predictions require `a < b + 5/2`; the magnetic field
/// and vorticity accept every `a >= 0`. The table is the same with and
/// without the Hall term.
pub fn predicted_exponent(q: &ExponentQuery) -> Result<Prediction> {
    q.validate()?;
    if q.field == FieldKind::U && !(q.a < q.b as f64 + 2.5) {
        return Ok(Prediction::OutOfValidity);
    }
    let inv_p = if q.p.is_infinite() { 0.0 } else { 1.0 / q.p };
    let mut e = -GAMMA0 + 0.5 * q.a - 0.5 * q.b as f64 - 0.75 * (1.0 - 2.0 * inv_p);
    if q.field == FieldKind::Omega {
        e -= 0.5;
    }
    Ok(Prediction::Exponent(e))
}

/// Least-squares line through `(log(t + t_s), log v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub window: [f64; 2],
    pub t_shift: f64,
    pub samples: usize,
}

fn in_window(t: f64, w: [f64; 2]) -> bool {
    t >= w[0] * (1.0 - 1e-12) && t <= w[1] * (1.0 + 1e-12)
}

pub fn fit_samples(samples: &[(f64, f64)], window: [f64; 2], t_shift: f64) -> Result<DecayFit> {
    if !(window[0] < window[1]) {
        return Err(Error::NoValidWindow);
    }
    let pts: Vec<(f64, f64)> = samples.iter().copied().filter(|&(t, _)| in_window(t, window)).collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            have: pts.len(),
        });
    }
    if let Some(&(t, value)) = pts.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::NonPositive { t, value });
    }
    let xs: Vec<f64> = pts.iter().map(|&(t, _)| (t + t_shift).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|&(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParams("fit abscissae are degenerate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ssr / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let stderr = if pts.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(DecayFit {
        slope,
        intercept,
        stderr,
        r_squared,
        window,
        t_shift,
        samples: pts.len(),
    })
}

pub fn fit_decay(series: &NormSeries, window: [f64; 2], t_shift: f64) -> Result<DecayFit> {
    fit_samples(&series.samples, window, t_shift)
}

/// `[t_min_factor * width^2, t_hi]` where `t_hi` is the last sample time before
/// the boundary monitor first exceeds `threshold`.
pub fn auto_window(
    series: &NormSeries,
    boundary: &NormSeries,
    threshold: f64,
    t_min_factor: f64,
    width: f64,
) -> Result<[f64; 2]> {
    if series.is_empty() {
        return Err(Error::InvalidParams("cannot window an empty series".into()));
    }
    let mut t_hi = None;
    for &(t, f) in &boundary.samples {
        if f > threshold {
            break;
        }
        t_hi = Some(t);
    }
    let t_hi = match t_hi {
        Some(t) => t.min(series.samples.last().unwrap().0),
        None => return Err(Error::NoValidWindow),
    };
    let t_lo = t_min_factor * width * width;
    if !(t_lo < t_hi) {
        return Err(Error::NoValidWindow);
    }
    Ok([t_lo, t_hi])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupRecursionCheck {
    pub holds: bool,
    /// No sample time was eligible; `holds` is then trivially true.
    pub vacuous: bool,
    /// Largest observed `lhs / rhs`.
    pub worst_ratio: f64,
    pub checked: usize,
}

/// Checks, at every sampled `t >= 4 t_floor`,
/// `sup_{[t/2,t]} F^2 <= C0 t^(-2 gamma) + C0 t^(-gamma) sup_{[t/4,t]} F`
/// with sups over the available samples.
pub fn check_sup_recursion(series: &[(f64, f64)], gamma: f64, c0: f64, t_floor: f64) -> Result<SupRecursionCheck> {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut holds = true;
    let sup = |lo: f64, hi: f64| -> (f64, usize) {
        series
            .iter()
            .filter(|&&(t, _)| in_window(t, [lo, hi]))
            .fold((f64::NEG_INFINITY, 0), |(m, c), &(_, v)| (m.max(v), c + 1))
    };
    for &(t, _) in series.iter().filter(|&&(t, _)| t >= 4.0 * t_floor * (1.0 - 1e-12)) {
        let (s4, count) = sup(0.25 * t, t);
        if count < 3 {
            return Err(Error::InsufficientSampling(format!(
                "window [{}, {t}] holds {count} samples, need 3",
                0.25 * t
            )));
        }
        let (s2, _) = sup(0.5 * t, t);
        let lhs = s2 * s2;
        let rhs = c0 * t.powf(-2.0 * gamma) + c0 * t.powf(-gamma) * s4;
        let ratio = lhs / rhs;
        worst = worst.max(ratio);
        if !(lhs <= rhs) {
            holds = false;
        }
        checked += 1;
    }
    if checked == 0 {
        log::warn!("sup-recursion check is vacuous: no samples beyond 4 * {t_floor}");
    }
    Ok(SupRecursionCheck {
        holds,
        vacuous: checked == 0,
        worst_ratio: worst,
        checked,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    OutOfValidity,
    NoValidWindow,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::OutOfValidity => "out-of-validity",
            Verdict::NoValidWindow => "no-valid-window",
        }
    }
}

/// Compares a fit (absent when no valid window existed) with the prediction.
pub fn verdict(q: &ExponentQuery, fit: Option<&DecayFit>, tol: f64) -> Result<Verdict> {
    let predicted = match predicted_exponent(q)? {
        Prediction::OutOfValidity => return Ok(Verdict::OutOfValidity),
        Prediction::Exponent(e) => e,
    };
    Ok(match fit {
        None => Verdict::NoValidWindow,
        Some(f) => slope_verdict(f, predicted, tol),
    })
}

/// Pass iff `|slope - expected| <= tol` and the fit is good enough.
pub fn slope_verdict(fit: &DecayFit, expected: f64, tol: f64) -> Verdict {
    if (fit.slope - expected).abs() <= tol && fit.r_squared >= R2_FLOOR {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::SeriesKind;

    fn q(field: FieldKind, a: f64, b: u32, p: f64) -> ExponentQuery {
        ExponentQuery::new(field, a, b, p)
    }

    fn e(x: &ExponentQuery) -> f64 {
        predicted_exponent(x).unwrap().exponent().unwrap()
    }

    #[test]
    fn table_values() {
        assert_eq!(e(&q(FieldKind::U, 0.0, 0, 2.0)), -0.75);
        assert_eq!(e(&q(FieldKind::Omega, 0.0, 0, f64::INFINITY)), -2.0);
        assert_eq!(e(&q(FieldKind::B, 2.0, 1, 2.0)), -0.25);
        assert_eq!(predicted_exponent(&q(FieldKind::U, 2.5, 0, 2.0)).unwrap(), Prediction::OutOfValidity);
        assert_eq!(predicted_exponent(&q(FieldKind::U, 3.0, 0, 2.0)).unwrap(), Prediction::OutOfValidity);
        assert!(e(&q(FieldKind::U, 3.0, 1, 2.0)).is_finite());
        assert!(predicted_exponent(&q(FieldKind::U, -1.0, 0, 2.0)).is_err());
        assert!(predicted_exponent(&q(FieldKind::Custom, 0.0, 0, 2.0)).is_err());
    }

    #[test]
    fn predictor_is_affine_with_expected_coefficients() {
        for field in [FieldKind::U, FieldKind::B, FieldKind::Omega] {
            for a in [0.0, 0.5, 1.0] {
                for b in 0..3u32 {
                    for p in [2.0, 4.0, 8.0] {
                        let base = e(&q(field, a, b, p));
                        assert!((e(&q(field, a + 0.5, b, p)) - base - 0.25).abs() < 1e-14);
                        assert!((e(&q(field, a, b + 1, p)) - base + 0.5).abs() < 1e-14);
                        // 1/p: p -> 2p halves 1/p
                        let d_inv = 1.0 / (2.0 * p) - 1.0 / p;
                        assert!((e(&q(field, a, b, 2.0 * p)) - base - 1.5 * d_inv).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn vorticity_offset_and_magnetic_domain() {
        for a in [0.0, 1.0, 2.0] {
            for b in 0..3u32 {
                for p in [2.0, 3.0, f64::INFINITY] {
                    let u = predicted_exponent(&q(FieldKind::U, a, b, p)).unwrap();
                    if let Prediction::Exponent(eu) = u {
                        assert_eq!(e(&q(FieldKind::Omega, a, b, p)), eu - 0.5);
                        assert_eq!(e(&q(FieldKind::B, a, b, p)), eu);
                    }
                }
            }
        }
        assert!(e(&q(FieldKind::B, 10.0, 0, 2.0)).is_finite());
    }

    fn series(f: impl Fn(f64) -> f64) -> NormSeries {
        let s: Vec<(f64, f64)> = (0..30).map(|j| 2f64.powf(j as f64 / 4.0)).map(|t| (t, f(t))).collect();
        NormSeries::from_samples(SeriesKind::Boundary(FieldKind::U), s).unwrap()
    }

    #[test]
    fn exact_power_laws_fit_exactly() {
        let s = series(|t| (t + 1.0).powf(-0.75));
        let f = fit_decay(&s, [1.0, 100.0], 1.0).unwrap();
        assert!((f.slope + 0.75).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let s = series(|t| 5.0 * (t + 1.0).powi(-2));
        let f = fit_decay(&s, [1.0, 100.0], 1.0).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let s = series(|t| (t + 0.3).powf(-0.6) * (1.0 + 0.1 * t.ln().sin()));
        let c = series(|t| 37.0 * (t + 0.3).powf(-0.6) * (1.0 + 0.1 * t.ln().sin()));
        let a = fit_decay(&s, [2.0, 200.0], 1.0).unwrap();
        let b = fit_decay(&c, [2.0, 200.0], 1.0).unwrap();
        assert!((a.slope - b.slope).abs() <= 1e-12);
    }

    #[test]
    fn fit_errors() {
        let s = series(|t| t);
        assert!(matches!(fit_decay(&s, [1.0, 1.5], 1.0), Err(Error::TooFewSamples { .. })));
        let z = series(|t| if t > 10.0 { 0.0 } else { 1.0 });
        assert!(matches!(fit_decay(&z, [1.0, 100.0], 1.0), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn windows() {
        let s = series(|t| 1.0 / t);
        let quiet = series(|_| 1e-9);
        assert_eq!(auto_window(&s, &quiet, 1e-6, 5.0, 1.0).unwrap(), [5.0, s.samples.last().unwrap().0]);
        let loud = series(|_| 1.0);
        assert!(matches!(auto_window(&s, &loud, 1e-6, 5.0, 1.0), Err(Error::NoValidWindow)));
        let growing = series(|t| 1e-6 * (t / 17.0).powi(3));
        let w = auto_window(&s, &growing, 1e-6, 5.0, 1.0).unwrap();
        let want = s.times().into_iter().filter(|&t| t <= 17.0).fold(0.0, f64::max);
        assert_eq!(w[1], want);
    }

    #[test]
    fn sup_recursion_cases() {
        let gamma = 0.75;
        let exact = series(|t| t.powf(-gamma));
        let r = check_sup_recursion(&exact.samples, gamma, 2.0, 1.0).unwrap();
        assert!(r.holds && !r.vacuous && r.checked > 0);

        let slow = series(|t| t.powf(-gamma + 0.5));
        let r = check_sup_recursion(&slow.samples, gamma, 1.0, 1.0).unwrap();
        assert!(!r.holds);
        // Both sides at the largest sampled time, with F decreasing.
        let t = slow.samples.last().unwrap().0;
        let lhs = (0.5 * t).powf(2.0 * (0.5 - gamma));
        let rhs = t.powf(-2.0 * gamma) + t.powf(-gamma) * (0.25 * t).powf(0.5 - gamma);
        assert!(lhs > rhs);

        let r = check_sup_recursion(&exact.samples, gamma, 2.0, 1e6).unwrap();
        assert!(r.holds && r.vacuous);

        let sparse: Vec<(f64, f64)> = [1.0, 8.0, 64.0].iter().map(|&t| (t, 1.0 / t)).collect();
        assert!(matches!(
            check_sup_recursion(&sparse, gamma, 1.0, 1.0),
            Err(Error::InsufficientSampling(_))
        ));
    }

    #[test]
    fn verdicts() {
        let fit = |slope: f64, r2: f64| DecayFit {
            slope,
            intercept: 0.0,
            stderr: 0.0,
            r_squared: r2,
            window: [1.0, 2.0],
            t_shift: 1.0,
            samples: 5,
        };
        let u = q(FieldKind::U, 0.0, 0, 2.0);
        assert_eq!(verdict(&u, Some(&fit(-0.76, 0.99)), 0.15).unwrap(), Verdict::Pass);
        assert_eq!(verdict(&u, Some(&fit(-0.40, 0.99)), 0.15).unwrap(), Verdict::Fail);
        assert_eq!(verdict(&u, Some(&fit(-0.75, 0.5)), 0.15).unwrap(), Verdict::Fail);
        assert_eq!(verdict(&u, None, 0.15).unwrap(), Verdict::NoValidWindow);
        let bad = q(FieldKind::U, 3.0, 0, 2.0);
        assert_eq!(verdict(&bad, Some(&fit(-0.75, 1.0)), 0.15).unwrap(), Verdict::OutOfValidity);
    }
}
