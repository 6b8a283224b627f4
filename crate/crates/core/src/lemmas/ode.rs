//! Adaptive Dormand-Prince 5(4) integration of scalar ODEs, plus adaptive
//! Simpson quadrature.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights equal the last row of A; these are the differences to
// the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Values are clamped to `>= floor` after every stage (useful for
    /// nonnegative states with fractional powers).
    pub floor: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-300,
            max_steps: 5_000_000,
            floor: None,
        }
    }
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` and returns `y` at each of the
/// increasing `stops` (all `>= t0`), landing on them exactly.
pub fn dopri45(f: impl Fn(f64, f64) -> f64, t0: f64, y0: f64, stops: &[f64], opts: &OdeOptions) -> Result<Vec<f64>> {
    let clamp = |y: f64| match opts.floor {
        Some(fl) => y.max(fl),
        None => y,
    };
    let mut t = t0;
    let mut y = clamp(y0);
    let mut out = Vec::with_capacity(stops.len());
    let span = stops.last().map_or(0.0, |&s| s - t0);
    let mut h = (span * 1e-6).max(1e-8);
    let mut k0 = f(t, y);
    let mut steps = 0usize;
    for &stop in stops {
        if stop < t {
            return Err(Error::Integration(format!("stop {stop} lies before current time {t}")));
        }
        while t < stop {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Integration(format!("step limit reached at t = {t}")));
            }
            let last = t + h >= stop;
            let hh = if last { stop - t } else { h };
            let mut k = [0.0; 7];
            k[0] = k0;
            for s in 1..7 {
                let ys = y + hh * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
                k[s] = f(t + C[s] * hh, clamp(ys));
            }
            let y5 = clamp(y + hh * (0..6).map(|j| A[6][j] * k[j]).sum::<f64>());
            let err = hh * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
            let sc = opts.atol + opts.rtol * y.abs().max(y5.abs());
            let ratio = (err / sc).abs();
            if !y5.is_finite() || !ratio.is_finite() {
                h = hh * 0.25;
            } else if ratio <= 1.0 {
                t = if last { stop } else { t + hh };
                y = y5;
                k0 = k[6];
                let fac = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || fac < 1.0 {
                    h = hh * fac;
                }
            } else {
                h = hh * (0.9 * ratio.powf(-0.2)).clamp(0.1, 1.0);
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration(format!(
                    "step size underflow at t = {t}, y = {y}: solution blows up or is too stiff"
                )));
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Adaptive Simpson quadrature to relative tolerance `rtol` of the total.
/// The interval is first cut into equal panels so narrow features are seen.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rtol: f64) -> Result<f64> {
    const PANELS: usize = 64;
    if a == b {
        return Ok(0.0);
    }
    let h = (b - a) / PANELS as f64;
    let xs: Vec<f64> = (0..=2 * PANELS).map(|i| a + 0.5 * h * i as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let coarse: Vec<f64> = (0..PANELS)
        .map(|i| h / 6.0 * (fs[2 * i] + 4.0 * fs[2 * i + 1] + fs[2 * i + 2]))
        .collect();
    let scale: f64 = (0..PANELS)
        .map(|i| h / 6.0 * (fs[2 * i].abs() + 4.0 * fs[2 * i + 1].abs() + fs[2 * i + 2].abs()))
        .sum();
    let tol = rtol * scale.max(f64::MIN_POSITIVE) / PANELS as f64;

    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Integration("adaptive quadrature did not converge".into()));
        }
        Ok(rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)? + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let mut total = 0.0;
    for i in 0..PANELS {
        total += rec(&f, xs[2 * i], xs[2 * i + 2], fs[2 * i], fs[2 * i + 1], fs[2 * i + 2], coarse[i], tol, 40)?;
    }
    Ok(total)
}
