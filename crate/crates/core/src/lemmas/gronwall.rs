//! Growth bound for functions satisfying
//!
//! ```text
//! F'(t) <= C0 t^-a0 F + C1 t^-a1 F^b1 + C2 t^-a2 F^b2 + C3 t^(g2 - 1),  t >= 1,
//! F(1)  <= K0,
//! ```
//!
//! namely `F(t) <= C* t^g1` with `g_i = (1 - a_i) / (1 - b_i)` and `g1 >= g2`.
//! The constant is built constructively: up to `t0`, where the linear
//! coefficient becomes small, `F` is bounded through a linear majorant solved
//! by variation of constants; past `t0` a barrier argument against
//! `2K t^g1` applies. The bound is tested against the extremal solution of
//! the equality ODE, which dominates every admissible `F`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ode::{adaptive_simpson, dopri45, OdeOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GronwallParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub k0: f64,
}

impl GronwallParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(format!("{m}: {self:?}")));
        let all = [
            self.alpha0, self.alpha1, self.alpha2, self.beta1, self.beta2, self.c0, self.c1, self.c2, self.c3, self.k0,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite");
        }
        if !(self.alpha0 > 1.0) {
            return bad("need alpha0 > 1");
        }
        if !(self.alpha1 < 1.0 && self.alpha2 < 1.0) {
            return bad("need alpha1, alpha2 < 1");
        }
        // F^beta must stay finite at F = 0.
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("need 0 <= beta1, beta2 < 1");
        }
        if [self.c0, self.c1, self.c2, self.c3, self.k0].iter().any(|&c| c < 0.0) {
            return bad("constants must be nonnegative");
        }
        let (g1, g2) = self.exponents_unchecked();
        if !(g1 >= g2) {
            return bad("need gamma1 >= gamma2");
        }
        Ok(())
    }

    fn exponents_unchecked(&self) -> (f64, f64) {
        (
            (1.0 - self.alpha1) / (1.0 - self.beta1),
            (1.0 - self.alpha2) / (1.0 - self.beta2),
        )
    }

    /// Right-hand side of the equality ODE.
    pub fn rhs(&self, t: f64, f: f64) -> f64 {
        let f = f.max(0.0);
        let (_, g2) = self.exponents_unchecked();
        self.c0 * t.powf(-self.alpha0) * f
            + self.c1 * t.powf(-self.alpha1) * f.powf(self.beta1)
            + self.c2 * t.powf(-self.alpha2) * f.powf(self.beta2)
            + self.c3 * t.powf(g2 - 1.0)
    }
}

/// `(gamma1, gamma2)`.
pub fn gronwall_exponents(p: &GronwallParams) -> Result<(f64, f64)> {
    p.validate()?;
    Ok(p.exponents_unchecked())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub gamma1: f64,
    pub gamma2: f64,
    pub c_star: f64,
    pub t0: f64,
    pub k1: f64,
    pub k: f64,
}

/// Linear majorant `F' <= a(t) F + f(t)` valid for every `t >= 1`, obtained
/// from Young's inequality `t^-a F^b <= b F + (1 - b) t^(-a/(1-b))` and from
/// `t^(g2-1) <= t^(g1-1)`.
#[derive(Debug, Clone, Copy)]
pub struct LinearMajorant {
    p: GronwallParams,
    gamma1: f64,
}

impl LinearMajorant {
    pub fn new(p: &GronwallParams) -> Result<Self> {
        let (gamma1, _) = gronwall_exponents(p)?;
        Ok(Self { p: *p, gamma1 })
    }

    pub fn coefficient(&self, t: f64) -> f64 {
        let p = &self.p;
        p.c0 * t.powf(-p.alpha0) + p.c1 * p.beta1 + p.c2 * p.beta2
    }

    /// `int_1^t coefficient`.
    pub fn coefficient_integral(&self, t: f64) -> f64 {
        let p = &self.p;
        p.c0 * (1.0 - t.powf(1.0 - p.alpha0)) / (p.alpha0 - 1.0) + (p.c1 * p.beta1 + p.c2 * p.beta2) * (t - 1.0)
    }

    pub fn forcing(&self, t: f64) -> f64 {
        let p = &self.p;
        p.c1 * (1.0 - p.beta1) * t.powf(-p.alpha1 / (1.0 - p.beta1))
            + p.c2 * (1.0 - p.beta2) * t.powf(-p.alpha2 / (1.0 - p.beta2))
            + p.c3 * t.powf(self.gamma1 - 1.0)
    }

    /// Solution at `t` started from `F(1) = K0`, by variation of constants.
    pub fn solution(&self, t: f64, rtol: f64) -> Result<f64> {
        let phi_t = self.coefficient_integral(t);
        let integral = adaptive_simpson(|s| self.forcing(s) * (phi_t - self.coefficient_integral(s)).exp(), 1.0, t, rtol)?;
        let v = self.p.k0 * phi_t.exp() + integral;
        if !v.is_finite() {
            return Err(Error::Integration(format!("majorant overflows before t = {t}")));
        }
        Ok(v)
    }
}

/// The constants of the growth bound.
pub fn gronwall_certificate(p: &GronwallParams) -> Result<BoundCertificate> {
    let (g1, g2) = gronwall_exponents(p)?;
    let t0 = if p.c0 > 0.0 {
        (2.0 * p.c0 / g1).powf(1.0 / (p.alpha0 - 1.0)).max(1.0)
    } else {
        1.0
    };
    let k1 = if t0 > 1.0 {
        LinearMajorant::new(p)?.solution(t0, 1e-10)?
    } else {
        p.k0
    };
    let young = |c: f64, beta: f64| (c * 2f64.powf(3.0 + beta) / g1).powf(1.0 / (1.0 - beta));
    let k = young(p.c1, p.beta1)
        .max(young(p.c2, p.beta2))
        .max(k1)
        .max(8.0 * p.c0 / g1)
        .max(8.0 * p.c3 / g1);
    Ok(BoundCertificate {
        gamma1: g1,
        gamma2: g2,
        c_star: 2.0 * k,
        t0,
        k1,
        k,
    })
}

/// Ratio of consecutive sample times on the geometric schedule.
pub const SAMPLE_RATIO: f64 = 1.189_207_115_002_721; // 2^(1/4)

fn sample_times(t_max: f64) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut j = 1;
    loop {
        let t = SAMPLE_RATIO.powi(j);
        if t >= t_max {
            break;
        }
        out.push(t);
        j += 1;
    }
    out.push(t_max);
    out
}

/// Smallest start value. The equality ODE is not Lipschitz at `F = 0` when
/// `beta > 0`; starting slightly above zero selects (and, by monotonicity in
/// the initial value, dominates) the maximal solution.
const START_FLOOR: f64 = 1e-18;

/// The extremal trajectory `F' = rhs(t, F)`, `F(1) = K0`, sampled at `t = 1`,
/// `2^(j/4)` and `t_max`.
pub fn gronwall_worst_case(p: &GronwallParams, t_max: f64) -> Result<Vec<(f64, f64)>> {
    p.validate()?;
    if !(t_max > 1.0) {
        return Err(Error::InvalidParams(format!("t_max must exceed 1, got {t_max}")));
    }
    let stops = sample_times(t_max);
    let non_lipschitz = (p.c1 > 0.0 && p.beta1 > 0.0) || (p.c2 > 0.0 && p.beta2 > 0.0);
    let f0 = if non_lipschitz { p.k0.max(START_FLOOR) } else { p.k0 };
    let opts = OdeOptions {
        floor: Some(0.0),
        ..Default::default()
    };
    let ys = dopri45(|t, f| p.rhs(t, f), 1.0, f0, &stops, &opts)?;
    Ok(stops.into_iter().zip(ys).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GronwallCheck {
    pub holds: bool,
    /// Largest `F(t) / (C* t^gamma1)` over the samples.
    pub worst_margin: f64,
    pub certificate: BoundCertificate,
}

/// Whether `F(t) <= c_star t^gamma1` at every sample.
pub fn bound_holds(trajectory: &[(f64, f64)], c_star: f64, gamma1: f64) -> (bool, f64) {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for &(t, f) in trajectory {
        let bound = c_star * t.powf(gamma1);
        if !(f <= bound) {
            ok = false;
        }
        worst = worst.max(if bound > 0.0 { f / bound } else if f > 0.0 { f64::INFINITY } else { 0.0 });
    }
    (ok, worst)
}

pub fn gronwall_verify(p: &GronwallParams, t_max: f64) -> Result<GronwallCheck> {
    let certificate = gronwall_certificate(p)?;
    let traj = gronwall_worst_case(p, t_max)?;
    let (holds, worst_margin) = bound_holds(&traj, certificate.c_star, certificate.gamma1);
    Ok(GronwallCheck {
        holds,
        worst_margin,
        certificate,
    })
}

/// Draws an admissible parameter set: exponents first, then `alpha_i` from
/// `gamma_i` and `beta_i`.
pub fn random_params(rng: &mut impl Rng) -> GronwallParams {
    let beta1 = rng.random_range(0.0..0.9);
    let beta2 = rng.random_range(0.0..0.9);
    let g1 = rng.random_range(0.2..3.0);
    let g2 = g1 * rng.random_range(0.05..=1.0);
    GronwallParams {
        alpha0: rng.random_range(1.5..3.0),
        alpha1: 1.0 - g1 * (1.0 - beta1),
        alpha2: 1.0 - g2 * (1.0 - beta2),
        beta1,
        beta2,
        c0: rng.random_range(0.0..1.0),
        c1: rng.random_range(0.0..2.0),
        c2: rng.random_range(0.0..2.0),
        c3: rng.random_range(0.0..2.0),
        k0: rng.random_range(0.0..2.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub draws: usize,
    pub seed: u64,
    pub t_max: f64,
    pub passed: usize,
    pub failures: Vec<GronwallParams>,
    pub worst_margin: f64,
}

impl SweepReport {
    pub fn all_pass(&self) -> bool {
        self.passed == self.draws
    }
}

/// Verifies `draws` random admissible instances; any solver error counts as
/// a failure.
pub fn gronwall_sweep(draws: usize, seed: u64, t_max: f64) -> SweepReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let p = random_params(&mut rng);
        match gronwall_verify(&p, t_max) {
            Ok(c) if c.holds => worst = worst.max(c.worst_margin),
            Ok(c) => {
                worst = worst.max(c.worst_margin);
                failures.push(p);
            }
            Err(e) => {
                log::warn!("sweep draw {p:?} failed: {e}");
                failures.push(p);
            }
        }
    }
    SweepReport {
        draws,
        seed,
        t_max,
        passed: draws - failures.len(),
        failures,
        worst_margin: worst,
    }
}
