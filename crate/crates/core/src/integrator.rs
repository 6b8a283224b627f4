//! Integrating-factor RK4 time stepping with CFL-type step control and a
//! geometric snapshot schedule.
//!
//! Diffusion is applied through exact exponential multipliers
//! `exp(-nu |k|^2 dt)` and `exp(-eta |k|^2 dt)`; the projected, dealiased
//! nonlinear tendencies are treated explicitly with the classical four
//! stages.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::checkpoint::write_checkpoint;
use crate::dynamics::{nonlinear_coeffs, SimState};
use crate::error::{Error, Result};
use crate::field::{Components, Field};

/// Guard against division by zero in [`stable_dt`] for quiescent states.
pub const EPS_SMALL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub cfl_adv: f64,
    pub cfl_whistler: f64,
    pub dt_max: f64,
    /// Snapshot times, strictly increasing.
    pub schedule: Vec<f64>,
    /// Drop the nonlinear terms (pure diffusion); used by oracle runs.
    #[serde(default)]
    pub linear_only: bool,
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub max_wall_seconds: Option<f64>,
    /// Where to dump the last good state if the solver diverges.
    #[serde(default)]
    pub dump_path: Option<PathBuf>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            cfl_adv: 0.4,
            cfl_whistler: 0.25,
            dt_max: 0.1,
            schedule: Vec::new(),
            linear_only: false,
            max_steps: None,
            max_wall_seconds: None,
            dump_path: None,
        }
    }
}

/// `t0 * r^j` for `j = 0, 1, ...` up to and including `t_end` (with a relative
/// slack of `1e-12` so that an exact endpoint is not lost to rounding).
pub fn geometric_schedule(t0: f64, r: f64, t_end: f64) -> Result<Vec<f64>> {
    if !(t0 > 0.0) || !(r > 1.0) || !t_end.is_finite() {
        return Err(Error::InvalidParams(format!(
            "geometric schedule needs t0 > 0, r > 1, finite end; got t0={t0}, r={r}, end={t_end}"
        )));
    }
    let mut out = Vec::new();
    let mut j = 0i32;
    loop {
        let t = t0 * r.powi(j);
        if t > t_end * (1.0 + 1e-12) {
            break;
        }
        out.push(if (t - t_end).abs() <= 1e-12 * t_end { t_end } else { t });
        j += 1;
    }
    Ok(out)
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x <= 1.0;
        if !ok(self.cfl_adv) || !ok(self.cfl_whistler) {
            return Err(Error::InvalidParams(format!(
                "safety factors must lie in (0, 1]: cfl_adv={}, cfl_whistler={}",
                self.cfl_adv, self.cfl_whistler
            )));
        }
        if !(self.dt_max > 0.0) || !self.dt_max.is_finite() {
            return Err(Error::InvalidParams(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        if self.schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("schedule must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Largest step allowed by the advective and whistler restrictions and the cap.
pub fn stable_dt(s: &SimState, c: &StepControl) -> f64 {
    let dx = s.grid().dx();
    let umax = s.u.max_magnitude();
    let bmax = s.b.max_magnitude();
    let adv = c.cfl_adv * dx / umax.max(bmax).max(EPS_SMALL);
    let whistler =
        c.cfl_whistler * dx * dx / (std::f64::consts::PI.powi(2) * s.params.eps_hall * bmax + EPS_SMALL);
    adv.min(whistler).min(c.dt_max)
}

type Pair = (Components<Complex64>, Components<Complex64>);

struct Propagator {
    eu_half: Vec<f64>,
    eu: Vec<f64>,
    eb_half: Vec<f64>,
    eb: Vec<f64>,
}

impl Propagator {
    fn new(s: &SimState, dt: f64) -> Self {
        let k2 = s.grid().k_sq_lattice();
        let mk = |coef: f64, h: f64| k2.iter().map(|k| (-coef * k * h).exp()).collect::<Vec<_>>();
        Self {
            eu_half: mk(s.params.nu, 0.5 * dt),
            eu: mk(s.params.nu, dt),
            eb_half: mk(s.params.eta, 0.5 * dt),
            eb: mk(s.params.eta, dt),
        }
    }
}

fn apply(e: &[f64], c: &Components<Complex64>) -> Components<Complex64> {
    std::array::from_fn(|d| c[d].iter().zip(e).map(|(z, f)| z * f).collect())
}

/// `e * (x + s y)`, component-wise.
fn combine(e: &[f64], x: &Components<Complex64>, s: f64, y: &Components<Complex64>) -> Components<Complex64> {
    std::array::from_fn(|d| {
        x[d].iter()
            .zip(&y[d])
            .zip(e)
            .map(|((a, b), f)| (a + b * s) * f)
            .collect()
    })
}

fn is_finite(c: &Components<Complex64>) -> bool {
    c.iter()
        .all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
}

/// Advance one step of size `dt`. `linear_only` drops the nonlinear terms.
pub fn step_with(s: &SimState, dt: f64, linear_only: bool) -> Result<SimState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("step size must be positive, got {dt}")));
    }
    let grid = s.grid();
    let u0 = s.u.spectral_view();
    let b0 = s.b.spectral_view();
    let p = Propagator::new(s, dt);

    let (u1, b1) = if linear_only {
        (apply(&p.eu, &u0), apply(&p.eb, &b0))
    } else {
        let eps = s.params.eps_hall;
        let nl = |u: &Components<Complex64>, b: &Components<Complex64>| -> Pair {
            let (mut nu, mut nb) = nonlinear_coeffs(grid, u, b, eps);
            for v in nu.iter_mut().chain(nb.iter_mut()) {
                v.iter_mut().for_each(|z| *z *= dt);
            }
            (nu, nb)
        };
        let (au, ab) = nl(&u0, &b0);
        let (bu, bb) = nl(&combine(&p.eu_half, &u0, 0.5, &au), &combine(&p.eb_half, &b0, 0.5, &ab));
        let uh = apply(&p.eu_half, &u0);
        let bh = apply(&p.eb_half, &b0);
        let (cu, cb) = nl(
            &std::array::from_fn(|d| uh[d].iter().zip(&bu[d]).map(|(x, y)| x + y * 0.5).collect()),
            &std::array::from_fn(|d| bh[d].iter().zip(&bb[d]).map(|(x, y)| x + y * 0.5).collect()),
        );
        let (du, db) = nl(
            &std::array::from_fn(|d| {
                u0[d].iter()
                    .zip(&cu[d])
                    .zip(&p.eu)
                    .zip(&p.eu_half)
                    .map(|(((x, c), e), eh)| x * e + c * eh)
                    .collect()
            }),
            &std::array::from_fn(|d| {
                b0[d].iter()
                    .zip(&cb[d])
                    .zip(&p.eb)
                    .zip(&p.eb_half)
                    .map(|(((x, c), e), eh)| x * e + c * eh)
                    .collect()
            }),
        );
        let finish = |x0: &Components<Complex64>,
                      a: &Components<Complex64>,
                      b: &Components<Complex64>,
                      c: &Components<Complex64>,
                      d: &Components<Complex64>,
                      e: &[f64],
                      eh: &[f64]|
         -> Components<Complex64> {
            std::array::from_fn(|k| {
                (0..x0[k].len())
                    .map(|i| {
                        x0[k][i] * e[i] + (a[k][i] * e[i] + (b[k][i] + c[k][i]) * (2.0 * eh[i]) + d[k][i]) / 6.0
                    })
                    .collect()
            })
        };
        (
            finish(&u0, &au, &bu, &cu, &du, &p.eu, &p.eu_half),
            finish(&b0, &ab, &bb, &cb, &db, &p.eb, &p.eb_half),
        )
    };
    if !is_finite(&u1) || !is_finite(&b1) {
        return Err(Error::NonFinite { context: "step", t: s.t });
    }
    Ok(SimState {
        u: Field::from_spectral(grid, u1)?,
        b: Field::from_spectral(grid, b1)?,
        t: s.t + dt,
        params: s.params,
    })
}

/// One integrating-factor RK4 step of the full system.
pub fn step(s: &SimState, dt: f64) -> Result<SimState> {
    step_with(s, dt, false)
}

/// Summary of an [`integrate`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationStats {
    pub steps: u64,
    pub snapshots: usize,
    pub wall: Duration,
}

/// Integrate from `s0.t` to `t_end`, landing exactly on every schedule time in
/// `(s0.t, t_end]` and calling `observer` there.
pub fn integrate(
    s0: SimState,
    t_end: f64,
    c: &StepControl,
    observer: &mut dyn FnMut(&SimState) -> Result<()>,
) -> Result<(SimState, IntegrationStats)> {
    c.validate()?;
    if !(t_end > s0.t) {
        return Err(Error::InvalidParams(format!(
            "end time {t_end} must exceed start time {}",
            s0.t
        )));
    }
    let start = Instant::now();
    let mut targets: Vec<f64> = c
        .schedule
        .iter()
        .copied()
        .filter(|&t| t > s0.t && t <= t_end)
        .collect();
    let n_snap = targets.len();
    if targets.last() != Some(&t_end) {
        targets.push(t_end);
    }
    let mut s = s0;
    let mut steps = 0u64;
    let mut snapshots = 0usize;
    for (ti, &target) in targets.iter().enumerate() {
        while s.t < target {
            if let Some(m) = c.max_steps {
                if steps >= m {
                    return Err(Error::Budget(format!("step limit {m} reached at t = {}", s.t)));
                }
            }
            if let Some(w) = c.max_wall_seconds {
                if start.elapsed().as_secs_f64() > w {
                    return Err(Error::Budget(format!("wall-clock limit {w} s reached at t = {}", s.t)));
                }
            }
            let dt = stable_dt(&s, c);
            let remaining = target - s.t;
            // Avoid a sliver step right before the target.
            let (dt, land) = if dt >= remaining * (1.0 - 1e-9) {
                (remaining, true)
            } else if dt > 0.5 * remaining {
                (0.5 * remaining, false)
            } else {
                (dt, false)
            };
            match step_with(&s, dt, c.linear_only) {
                Ok(mut next) => {
                    if land {
                        next.t = target;
                    }
                    s = next;
                }
                Err(Error::NonFinite { t, .. }) => {
                    let dump = match &c.dump_path {
                        Some(p) => write_checkpoint(p, &s).ok().map(|_| p.clone()),
                        None => None,
                    };
                    log::error!("solver diverged at t = {t}");
                    return Err(Error::Diverged { t, dump });
                }
                Err(e) => return Err(e),
            }
            steps += 1;
        }
        if ti < n_snap {
            observer(&s)?;
            snapshots += 1;
        }
    }
    Ok((
        s,
        IntegrationStats {
            steps,
            snapshots,
            wall: start.elapsed(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::HallMhdParams;
    use crate::field::Repr;
    use crate::grid::make_grid;
    use crate::spectral::l2_norm;
    use crate::testing::{random_solenoidal, rel};
    use std::f64::consts::PI;

    fn params(eps: f64) -> HallMhdParams {
        HallMhdParams {
            nu: 1.0,
            eta: 1.0,
            eps_hall: eps,
        }
    }

    #[test]
    fn schedule_is_geometric_and_inclusive() {
        let s = geometric_schedule(1.0, 2.0, 8.0).unwrap();
        assert_eq!(s, vec![1.0, 2.0, 4.0, 8.0]);
        let r = 2f64.powf(0.25);
        let s = geometric_schedule(1.0, r, 24.0).unwrap();
        assert!(s.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
        assert!(*s.last().unwrap() <= 24.0);
        assert!(geometric_schedule(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn zero_state_gets_dt_max_and_stays_zero() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let s = SimState::zero(&g, params(1.0));
        let c = StepControl::default();
        assert_eq!(stable_dt(&s, &c), c.dt_max);
        let n = step(&s, 0.05).unwrap();
        assert_eq!(l2_norm(&n.u), 0.0);
        assert_eq!(l2_norm(&n.b), 0.0);
        assert!((n.t - 0.05).abs() < 1e-15);
    }

    #[test]
    fn whistler_limit_scales_with_dx_squared() {
        let c = StepControl {
            dt_max: 1e9,
            cfl_adv: 1.0,
            ..Default::default()
        };
        let amp = 50.0;
        let dt_at = |n: usize| {
            let g = make_grid(n, 2.0 * PI).unwrap();
            let b = Field::from_fn(&g, |_, _, z| [amp * z.sin(), amp * z.cos(), 0.0]);
            let s = SimState::new(Field::zeros(&g, Repr::Spectral), b, 0.0, params(1.0)).unwrap();
            let whistler = c.cfl_whistler * g.dx().powi(2) / (PI * PI * amp + EPS_SMALL);
            let dt = stable_dt(&s, &c);
            assert!((dt - whistler).abs() <= 1e-12 * whistler);
            dt
        };
        let r = dt_at(16) / dt_at(32);
        assert!((r - 4.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn hall_off_disables_whistler_limit() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let b = Field::from_fn(&g, |_, _, z| [z.sin(), z.cos(), 0.0]);
        let s = SimState::new(Field::zeros(&g, Repr::Spectral), b, 0.0, params(0.0)).unwrap();
        let c = StepControl {
            dt_max: 1e9,
            ..Default::default()
        };
        let adv = c.cfl_adv * g.dx() / s.b.max_magnitude();
        assert!((stable_dt(&s, &c) - adv).abs() <= 1e-12 * adv);
    }

    #[test]
    fn linear_step_is_exact_heat_propagator() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let k = 3.0;
        let u = Field::from_fn(&g, |_, _, z| [(k * z).sin(), 0.0, 0.0]);
        let b = Field::from_fn(&g, |x, _, _| [0.0, (2.0 * x).cos(), 0.0]);
        let mut p = params(1.0);
        p.eta = 0.5;
        let s = SimState::new(u.clone(), b.clone(), 0.0, p).unwrap();
        let dt = 0.013;
        let n = step_with(&s, dt, true).unwrap();
        let want_u = u.into_spectral().scaled((-k * k * dt).exp());
        let want_b = b.into_spectral().scaled((-0.5 * 4.0 * dt).exp());
        assert!(rel(&n.u, &want_u) <= 1e-13);
        assert!(rel(&n.b, &want_b) <= 1e-13);
    }

    #[test]
    fn observer_sees_each_schedule_time_once() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let s = SimState::new(random_solenoidal(&g, 1).scaled(0.1), random_solenoidal(&g, 2).scaled(0.1), 0.0, params(1.0)).unwrap();
        let c = StepControl {
            schedule: geometric_schedule(0.1, 2.0, 10.0).unwrap(),
            dt_max: 0.05,
            ..Default::default()
        };
        let mut seen = Vec::new();
        let (fin, stats) = integrate(s.clone(), 0.8, &c, &mut |st| {
            seen.push(st.t);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0.1, 0.2, 0.4, 0.8]);
        assert_eq!(stats.snapshots, 4);
        assert_eq!(fin.t, 0.8);

        let mut count = 0;
        integrate(s, 0.1, &c, &mut |_| {
            count += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(count, 1);
    }

    #[test]
    fn budget_is_enforced() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let s = SimState::zero(&g, params(1.0));
        let c = StepControl {
            dt_max: 0.01,
            max_steps: Some(3),
            ..Default::default()
        };
        assert!(matches!(integrate(s, 1.0, &c, &mut |_| Ok(())), Err(Error::Budget(_))));
    }

    #[test]
    fn divergence_reports_and_dumps_last_state() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let mut u = random_solenoidal(&g, 3);
        u.spectral_mut().unwrap()[0][5] = Complex64::new(f64::NAN, 0.0);
        let s = SimState::new(u, Field::zeros(&g, Repr::Spectral), 0.0, params(1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let c = StepControl {
            dt_max: 0.01,
            dump_path: Some(dir.path().join("dump.ckpt")),
            ..Default::default()
        };
        match integrate(s, 1.0, &c, &mut |_| Ok(())) {
            Err(Error::Diverged { dump: Some(p), .. }) => assert!(p.exists()),
            other => panic!("unexpected {other:?}"),
        }
    }
}
