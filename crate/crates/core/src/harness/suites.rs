//! Self-contained validation suites: the linear solver against the
//! closed-form heat evolution, and the lemma oracles.

use serde::{Deserialize, Serialize};

use crate::decay::{fit_samples, DecayFit};
use crate::diagnostics::{weighted_norm, FieldKind, WeightedNormSpec};
use crate::dynamics::{HallMhdParams, SimState};
use crate::error::Result;
use crate::field::{Field, Repr};
use crate::grid::make_grid;
use crate::heat::HeatGaussian;
use crate::integrator::{geometric_schedule, integrate, StepControl};
use crate::lemmas::gronwall::{
    bound_holds, gronwall_certificate, gronwall_sweep, gronwall_verify, gronwall_worst_case, GronwallParams,
    SweepReport,
};
use crate::lemmas::parabolic::{ratio_from_norms, snapshot_norms};
use crate::spectral::{
    curl, derivative, divergence, gradient_l2_norm, inner_physical, inner_spectral, l2_norm, leray_project,
    scalar_l2_norm,
};
use crate::testing::{random_field, random_solenoidal, rel};
use crate::dynamics::{divergence_ratio, energy_budget};
use crate::integrator::step;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatOracleSettings {
    pub n: usize,
    pub l: f64,
    pub sigma: f64,
    pub nu: f64,
    pub t_end: f64,
    pub schedule_start: f64,
    pub schedule_ratio: f64,
    pub t_shift: f64,
    pub fit_window: [f64; 2],
    /// Relative error bounds for weights `a = 0, 1, 2`.
    pub value_tol: [f64; 3],
    pub slope_tol: f64,
}

impl Default for HeatOracleSettings {
    fn default() -> Self {
        Self {
            n: 64,
            l: 32.0,
            sigma: 1.0,
            nu: 1.0,
            t_end: 24.0,
            schedule_start: 0.25,
            schedule_ratio: 2f64.powf(0.25),
            // Makes t + t_shift proportional to the squared Gaussian width.
            t_shift: 0.5,
            fit_window: [5.0, 24.0],
            value_tol: [1e-6, 1e-4, 1e-4],
            slope_tol: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatSnapshot {
    pub t: f64,
    /// `| |x|^a G |_{L^2}` on the grid for `a = 0, 1, 2`.
    pub computed: [f64; 3],
    /// Periodic-box closed form.
    pub exact: [f64; 3],
    pub rel_err: [f64; 3],
    /// Relative deviation of the whole-space closed form from the grid value.
    pub whole_space_dev: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatOracleReport {
    pub settings: HeatOracleSettings,
    pub snapshots: Vec<HeatSnapshot>,
    pub max_rel_err: [f64; 3],
    pub values_pass: [bool; 3],
    pub expected_slopes: [f64; 3],
    pub fits: Vec<DecayFit>,
    pub slopes_pass: [bool; 3],
}

impl HeatOracleReport {
    pub fn all_pass(&self) -> bool {
        self.values_pass.iter().chain(&self.slopes_pass).all(|&b| b)
    }
}

/// Evolves a scalar Gaussian (as the first component of a vector field)
/// with the linear propagator and compares weighted `L^2` norms with the
/// closed forms at every snapshot.
pub fn heat_oracle(settings: &HeatOracleSettings) -> Result<HeatOracleReport> {
    let grid = make_grid(settings.n, settings.l)?;
    let h = HeatGaussian::new(settings.sigma, settings.nu)?;
    let params = HallMhdParams {
        nu: settings.nu,
        eta: settings.nu,
        eps_hall: 0.0,
    };
    let u0 = h.lattice(&grid, 0.0).embed(0);
    let s0 = SimState::new(u0, Field::zeros(&grid, Repr::Spectral), 0.0, params)?;
    let specs: Vec<WeightedNormSpec> = (0..3)
        .map(|a| WeightedNormSpec::new(FieldKind::U, a as f64, 0, 2.0))
        .collect::<Result<_>>()?;
    let mut snapshots = Vec::new();
    let mut observe = |s: &SimState| -> Result<()> {
        let mut snap = HeatSnapshot {
            t: s.t,
            computed: [0.0; 3],
            exact: [0.0; 3],
            rel_err: [0.0; 3],
            whole_space_dev: [0.0; 3],
        };
        for a in 0..3 {
            let v = weighted_norm(&s.u, &specs[a], s.t)?;
            let e = h.periodic_norm(a as u32, settings.l, s.t)?;
            snap.computed[a] = v;
            snap.exact[a] = e;
            snap.rel_err[a] = (v / e - 1.0).abs();
            snap.whole_space_dev[a] = (h.whole_space_norm(a as f64, s.t) / v - 1.0).abs();
        }
        snapshots.push(snap);
        Ok(())
    };
    observe(&s0)?;
    let mut schedule = geometric_schedule(settings.schedule_start, settings.schedule_ratio, settings.t_end)?;
    if schedule.last() != Some(&settings.t_end) {
        schedule.push(settings.t_end);
    }
    let control = StepControl {
        // The propagator is exact, so steps only need to land on snapshots.
        dt_max: settings.t_end,
        schedule,
        linear_only: true,
        ..Default::default()
    };
    integrate(s0, settings.t_end, &control, &mut observe)?;

    let mut max_rel_err = [0.0f64; 3];
    for s in &snapshots {
        for a in 0..3 {
            max_rel_err[a] = max_rel_err[a].max(s.rel_err[a]);
        }
    }
    let values_pass = std::array::from_fn(|a| max_rel_err[a] <= settings.value_tol[a]);
    let expected_slopes = [-0.75, -0.25, 0.25];
    let mut fits = Vec::with_capacity(3);
    for a in 0..3 {
        let series: Vec<(f64, f64)> = snapshots.iter().map(|s| (s.t, s.computed[a])).collect();
        fits.push(fit_samples(&series, settings.fit_window, settings.t_shift)?);
    }
    let slopes_pass = std::array::from_fn(|a| (fits[a].slope - expected_slopes[a]).abs() <= settings.slope_tol);
    Ok(HeatOracleReport {
        settings: settings.clone(),
        snapshots,
        max_rel_err,
        values_pass,
        expected_slopes,
        fits,
        slopes_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub t: f64,
    pub computed: f64,
    pub exact: f64,
    pub rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessCheck {
    pub gamma1: f64,
    pub fitted: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCase {
    pub label: String,
    pub t: f64,
    pub ratio_coarse: f64,
    pub ratio_fine: f64,
    pub bounded: bool,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub sweep: SweepReport,
    pub closed_form: ClosedFormCheck,
    pub sharpness: SharpnessCheck,
    /// A certificate shrunk by `1e6` must be rejected.
    pub corrupted_rejected: bool,
    pub parabolic: Vec<ParabolicCase>,
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.sweep.all_pass()
            && self.closed_form.pass
            && self.sharpness.pass
            && self.corrupted_rejected
            && self.parabolic.iter().all(|c| c.bounded && c.stable)
    }
}

pub const SWEEP_T_MAX: f64 = 1e4;
pub const PARABOLIC_BOUND: f64 = 10.0;
pub const PARABOLIC_STABILITY: f64 = 0.2;

fn separable_params(alpha1: f64) -> GronwallParams {
    GronwallParams {
        alpha0: 2.0,
        alpha1,
        alpha2: 0.5,
        beta1: 0.5,
        beta2: 0.5,
        c0: 0.0,
        c1: 1.0,
        c2: 0.0,
        c3: 0.0,
        k0: 0.0,
    }
}

/// `F' = t^(-1/2) F^(1/2)`, `F(1) = 0` has the maximal solution
/// `(t^(1/2) - 1)^2`.
pub fn gronwall_closed_form() -> Result<ClosedFormCheck> {
    let traj = gronwall_worst_case(&separable_params(0.5), 100.0)?;
    let (t, computed) = *traj.last().unwrap();
    let exact = (t.sqrt() - 1.0).powi(2);
    let rel_err = (computed / exact - 1.0).abs();
    Ok(ClosedFormCheck {
        t,
        computed,
        exact,
        rel_err,
        pass: rel_err <= 1e-8,
    })
}

/// `F' = F^(1/2)`, `F(1) = 0` gives `((t - 1) / 2)^2`: the extremal growth
/// exponent equals `gamma1 = 2`.
pub fn gronwall_sharpness() -> Result<SharpnessCheck> {
    let p = separable_params(0.0);
    let c = gronwall_certificate(&p)?;
    let traj = gronwall_worst_case(&p, SWEEP_T_MAX)?;
    let fit = fit_samples(&traj, [100.0, SWEEP_T_MAX], 0.0)?;
    Ok(SharpnessCheck {
        gamma1: c.gamma1,
        fitted: fit.slope,
        pass: (fit.slope - c.gamma1).abs() <= 0.02,
    })
}

pub fn gronwall_corrupted_rejected() -> Result<bool> {
    let p = GronwallParams {
        c0: 1.0,
        k0: 1.0,
        ..separable_params(0.5)
    };
    let check = gronwall_verify(&p, 1e3)?;
    let traj = gronwall_worst_case(&p, 1e3)?;
    let (ok, _) = bound_holds(&traj, check.certificate.c_star / 1e6, check.certificate.gamma1);
    Ok(check.holds && !ok)
}

/// Heat solutions `G` (free, `g = 0`) and `(1 + t) G` (forced, `g = G`) on
/// a coarse and a refined grid; ratios at `t = 1, 2, ..., 64`.
pub fn parabolic_suite() -> Result<Vec<ParabolicCase>> {
    const L: f64 = 64.0;
    let h = HeatGaussian::new(2.0, 1.0)?;
    let grids = [make_grid(32, L)?, make_grid(64, L)?];
    let mut out = Vec::new();
    for forced in [false, true] {
        for j in 0..7 {
            let t = 2f64.powi(j);
            let taus: Vec<f64> = (0..=8).map(|i| 0.25 * t * 2f64.powf(i as f64 / 4.0)).collect();
            let mut ratios = [0.0; 2];
            for (r, grid) in ratios.iter_mut().zip(&grids) {
                let mut samples = Vec::with_capacity(taus.len());
                for &tau in &taus {
                    let g = h.lattice(grid, tau).embed(0);
                    let (u, g) = if forced {
                        (g.scaled(1.0 + tau), g)
                    } else {
                        (g, Field::zeros(grid, Repr::Spectral))
                    };
                    samples.push(snapshot_norms(tau, &u, &g, 2.0)?);
                }
                *r = ratio_from_norms(&samples, t)?;
            }
            out.push(ParabolicCase {
                label: if forced { "forced".into() } else { "free".into() },
                t,
                ratio_coarse: ratios[0],
                ratio_fine: ratios[1],
                bounded: ratios[0] <= PARABOLIC_BOUND && ratios[1] <= PARABOLIC_BOUND,
                stable: (ratios[0] / ratios[1] - 1.0).abs() <= PARABOLIC_STABILITY,
            });
        }
    }
    Ok(out)
}

pub fn verify_lemmas(draws: usize, seed: u64) -> Result<LemmaReport> {
    Ok(LemmaReport {
        sweep: gronwall_sweep(draws, seed, SWEEP_T_MAX),
        closed_form: gronwall_closed_form()?,
        sharpness: gronwall_sharpness()?,
        corrupted_rejected: gronwall_corrupted_rejected()?,
        parabolic: parabolic_suite()?,
    })
}

/// Worst observed value of one identity over all draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub draws: usize,
    pub worst: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Discrete identities on random 2/3-truncated fields: `draws` states on
/// each grid size in `ns`, box side `2 pi`.
pub fn invariant_suite(ns: &[usize], draws: usize, seed: u64) -> Result<Vec<InvariantResult>> {
    let names = [
        ("parseval", 1e-12),
        ("derivative_adjointness", 1e-12),
        ("leray_idempotence", 1e-12),
        ("leray_self_adjointness", 1e-12),
        ("div_curl", 1e-12),
        ("divergence_preservation", 1e-10),
        ("hall_energy_neutrality", 1e-10),
        ("cross_transfer_antisymmetry", 1e-10),
    ];
    let mut worst = [0.0f64; 8];
    let mut total = 0;
    let params = HallMhdParams {
        nu: 0.05,
        eta: 0.05,
        eps_hall: 1.0,
    };
    for &n in ns {
        let grid = make_grid(n, 2.0 * std::f64::consts::PI)?;
        for d in 0..draws {
            let sd = seed.wrapping_mul(1_000_003).wrapping_add((n * 100_000 + 4 * d) as u64);
            let f = random_field(&grid, sd, true);
            let g = random_field(&grid, sd + 1, true);
            let scale = l2_norm(&f) * l2_norm(&g);
            let mut v = [0.0; 8];
            v[0] = (inner_physical(&f, &g) - inner_spectral(&f, &g)).abs() / scale;
            let mut alpha = [0u32; 3];
            alpha[d % 3] = 1;
            let (df, dg) = (derivative(&f, alpha), derivative(&g, alpha));
            v[1] = (inner_spectral(&df, &g) + inner_spectral(&f, &dg)).abs()
                / (l2_norm(&df) * l2_norm(&g) + l2_norm(&f) * l2_norm(&dg));
            let pf = leray_project(&f);
            v[2] = rel(&leray_project(&pf), &pf);
            v[3] = (inner_spectral(&pf, &g) - inner_spectral(&f, &leray_project(&g))).abs() / scale;
            let cf = curl(&f);
            v[4] = scalar_l2_norm(&divergence(&cf)) / gradient_l2_norm(&cf);
            let u = random_solenoidal(&grid, sd + 2);
            let b = random_solenoidal(&grid, sd + 3);
            let s = SimState::new(u, b, 0.0, params)?;
            let next = step(&s, 1e-3)?;
            let (du, db) = next.divergence_ratios();
            v[5] = du.max(db).max(divergence_ratio(&s.u)).max(divergence_ratio(&s.b));
            let e = energy_budget(&s);
            let hall = crate::dynamics::hall_term(&s.b);
            v[6] = e.hall_work.abs() / (l2_norm(&s.b) * l2_norm(&hall));
            v[7] = e.cross_transfer.abs() / e.transfer_scale;
            for (w, x) in worst.iter_mut().zip(v) {
                *w = w.max(x);
            }
            total += 1;
        }
    }
    Ok(names
        .iter()
        .zip(worst)
        .map(|(&(name, tol), w)| InvariantResult {
            name: name.into(),
            draws: total,
            worst: w,
            tol,
            pass: w <= tol,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub dts: Vec<f64>,
    /// `|X_dt - X_{dt/2}|` between consecutive refinements (u and B stacked).
    pub differences: Vec<f64>,
    pub orders: Vec<f64>,
}

impl OrderReport {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Self-convergence of the full nonlinear stepper: the same random Hall-MHD
/// state is advanced to `t_end` with `dt0 / 2^j`, `j = 0..=refinements`.
pub fn integrator_order(n: usize, seed: u64, amplitude: f64, t_end: f64, dt0: f64, refinements: usize) -> Result<OrderReport> {
    let grid = make_grid(n, 2.0 * std::f64::consts::PI)?;
    let params = HallMhdParams {
        nu: 0.02,
        eta: 0.03,
        eps_hall: 1.0,
    };
    let u = random_solenoidal(&grid, seed).scaled(amplitude);
    let b = random_solenoidal(&grid, seed + 1).scaled(amplitude);
    let s0 = SimState::new(u, b, 0.0, params)?;
    let mut finals = Vec::new();
    let mut dts = Vec::new();
    for j in 0..=refinements {
        let steps = (t_end / dt0).round() as usize * (1 << j);
        let dt = t_end / steps as f64;
        let mut s = s0.clone();
        for _ in 0..steps {
            s = step(&s, dt)?;
        }
        dts.push(dt);
        finals.push(s);
    }
    let differences: Vec<f64> = finals
        .windows(2)
        .map(|w| {
            let du = w[0].u.axpy(-1.0, &w[1].u).map(|f| l2_norm(&f));
            let db = w[0].b.axpy(-1.0, &w[1].b).map(|f| l2_norm(&f));
            Ok((du?.powi(2) + db?.powi(2)).sqrt())
        })
        .collect::<Result<_>>()?;
    let orders = differences.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(OrderReport {
        dts,
        differences,
        orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_heat_oracle_is_accurate() {
        let s = HeatOracleSettings {
            n: 32,
            l: 16.0,
            t_end: 4.0,
            fit_window: [1.0, 4.0],
            ..Default::default()
        };
        let r = heat_oracle(&s).unwrap();
        assert!(r.max_rel_err[0] <= 1e-8, "{:?}", r.max_rel_err);
        // The first snapshot is the initial lattice.
        assert_eq!(r.snapshots[0].t, 0.0);
        assert_eq!(r.snapshots.last().unwrap().t, 4.0);
    }

    #[test]
    fn lemma_suite_passes_on_a_small_sweep() {
        let r = verify_lemmas(20, 3).unwrap();
        assert!(r.all_pass(), "{r:#?}");
    }

    #[test]
    fn invariants_hold_on_a_few_draws() {
        for r in invariant_suite(&[16], 4, 1).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn stepper_converges_at_fourth_order() {
        let r = integrator_order(16, 3, 8.0, 0.2, 0.02, 3).unwrap();
        println!("{r:?}");
        assert!(r.min_order() >= 3.5, "{r:?}");
    }
}
