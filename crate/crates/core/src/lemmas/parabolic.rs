//! Empirical constant of the parabolic interpolation inequality
//!
//! ```text
//! sup_{[t/2,t]} |grad u|^2 <= C sup_{[t/4,t]} |u| sup_{[t/4,t]} |u_t - lap u| + (C/t) sup_{[t/4,t]} |u|^2
//! ```
//!
//! with all norms in `L^p`.

use crate::diagnostics::{weighted_norm, FieldKind, WeightedNormSpec};
use crate::error::{Error, Result};
use crate::field::Field;

/// Per-snapshot norms `(tau, |grad u|, |u|, |g|)`.
pub type NormSample = (f64, f64, f64, f64);

fn in_range(t: f64, lo: f64, hi: f64) -> bool {
    t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12)
}

/// Ratio `lhs / rhs` with `C = 1`, from precomputed norms. Zero when both
/// sides vanish.
pub fn ratio_from_norms(samples: &[NormSample], t: f64) -> Result<f64> {
    let quarter: Vec<&NormSample> = samples.iter().filter(|s| in_range(s.0, 0.25 * t, t)).collect();
    let half: Vec<&NormSample> = samples.iter().filter(|s| in_range(s.0, 0.5 * t, t)).collect();
    if quarter.len() < 3 || half.len() < 3 {
        return Err(Error::InsufficientSampling(format!(
            "need 3 snapshots in [t/2, t] and [t/4, t] at t = {t}; have {} and {}",
            half.len(),
            quarter.len()
        )));
    }
    let lhs = half.iter().map(|s| s.1 * s.1).fold(0.0, f64::max);
    let su = quarter.iter().map(|s| s.2).fold(0.0, f64::max);
    let sg = quarter.iter().map(|s| s.3).fold(0.0, f64::max);
    let rhs = su * sg + su * su / t;
    if lhs == 0.0 {
        return Ok(0.0);
    }
    if !(rhs > 0.0) {
        return Err(Error::InvalidParams("right-hand side vanishes while the left does not".into()));
    }
    Ok(lhs / rhs)
}

/// Norms of one snapshot pair.
pub fn snapshot_norms(tau: f64, u: &Field, g: &Field, p: f64) -> Result<NormSample> {
    let n0 = WeightedNormSpec::new(FieldKind::Custom, 0.0, 0, p)?;
    let n1 = WeightedNormSpec::new(FieldKind::Custom, 0.0, 1, p)?;
    Ok((tau, weighted_norm(u, &n1, tau)?, weighted_norm(u, &n0, tau)?, weighted_norm(g, &n0, tau)?))
}

/// Empirical constant from snapshots of `u` and of `g = u_t - lap u` taken at
/// the same times.
pub fn parabolic_interp_ratio(u_snapshots: &[(f64, Field)], g_snapshots: &[(f64, Field)], p: f64, t: f64) -> Result<f64> {
    if u_snapshots.len() != g_snapshots.len() {
        return Err(Error::InvalidParams("u and g snapshot lists differ in length".into()));
    }
    let mut samples = Vec::new();
    for ((tu, u), (tg, g)) in u_snapshots.iter().zip(g_snapshots) {
        if tu != tg {
            return Err(Error::InvalidParams(format!("snapshot times differ: {tu} vs {tg}")));
        }
        u.same_grid(g)?;
        if in_range(*tu, 0.25 * t, t) {
            samples.push(snapshot_norms(*tu, u, g, p)?);
        }
    }
    ratio_from_norms(&samples, t)
}
