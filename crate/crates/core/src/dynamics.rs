//! Right-hand sides of the Hall-MHD system with the pressure eliminated by
//! Leray projection.
//!
//! ```text
//! du/dt = P[ B.grad B - u.grad u ] + nu  lap u
//! dB/dt = curl(u x B) - eps_H curl((curl B) x B) + eta lap B
//! ```
//!
//! Nonlinear terms are evaluated pseudo-spectrally in rotational form. For a
//! 2/3-truncated state the retained modes of every quadratic product are
//! alias-free, so `P[u x omega + J x B]` equals `P[B.grad B - u.grad u]`
//! mode by mode: the two forms differ by gradients, which the projection
//! removes exactly.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{coeffs_to_physical, physical_many, spectral_many, Components, Field, Repr};
use crate::grid::Grid;
use crate::spectral::{
    self, cross_components, curl_coeffs, dealias_in_place, gradient_l2_norm, inner_spectral, l2_norm,
    project_in_place,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HallMhdParams {
    pub nu: f64,
    pub eta: f64,
    pub eps_hall: f64,
}

impl Default for HallMhdParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            eta: 1.0,
            eps_hall: 1.0,
        }
    }
}

impl HallMhdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !(self.eta > 0.0) || !(self.eps_hall >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "need nu > 0, eta > 0, eps_hall >= 0; got {self:?}"
            )));
        }
        if !(self.nu.is_finite() && self.eta.is_finite() && self.eps_hall.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Snapshot of the solution. Fields are kept in spectral form.
#[derive(Debug, Clone)]
pub struct SimState {
    pub u: Field,
    pub b: Field,
    pub t: f64,
    pub params: HallMhdParams,
}

impl SimState {
    pub fn new(u: Field, b: Field, t: f64, params: HallMhdParams) -> Result<Self> {
        u.same_grid(&b)?;
        params.validate()?;
        if !(t >= 0.0) {
            return Err(Error::InvalidParams(format!("time must be >= 0, got {t}")));
        }
        Ok(Self {
            u: u.into_spectral(),
            b: b.into_spectral(),
            t,
            params,
        })
    }

    pub fn zero(grid: &Arc<Grid>, params: HallMhdParams) -> Self {
        Self {
            u: Field::zeros(grid, Repr::Spectral),
            b: Field::zeros(grid, Repr::Spectral),
            t: 0.0,
            params,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u.is_finite() && self.b.is_finite()
    }

    /// `(|div u| / |grad u|, |div B| / |grad B|)`, zero for vanishing fields.
    pub fn divergence_ratios(&self) -> (f64, f64) {
        (divergence_ratio(&self.u), divergence_ratio(&self.b))
    }

    pub fn total_energy(&self) -> f64 {
        0.5 * (inner_spectral(&self.u, &self.u) + inner_spectral(&self.b, &self.b))
    }
}

/// `|div f|_2 / |grad f|_2`, or 0 when the gradient vanishes.
pub fn divergence_ratio(f: &Field) -> f64 {
    let g = gradient_l2_norm(f);
    if g == 0.0 {
        return 0.0;
    }
    spectral::scalar_l2_norm(&spectral::divergence(f)) / g
}

fn check_finite(c: &Components<Complex64>, context: &'static str, t: f64) -> Result<()> {
    let ok = c
        .iter()
        .all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    if ok {
        Ok(())
    } else {
        Err(Error::NonFinite { context, t })
    }
}

/// Nonlinear tendencies `(P[u x omega + J x B], curl(u x B - eps_H J x B))`,
/// dealiased, without diffusion. Inputs are spectral coefficients.
pub(crate) fn nonlinear_coeffs(
    grid: &Arc<Grid>,
    u: &Components<Complex64>,
    b: &Components<Complex64>,
    eps_hall: f64,
) -> (Components<Complex64>, Components<Complex64>) {
    let omega = curl_coeffs(grid, u);
    let j = curl_coeffs(grid, b);
    let phys = coeffs_to_physical(grid, &[u, b, &omega, &j]);
    let (pu, pb, po, pj) = (&phys[0], &phys[1], &phys[2], &phys[3]);

    let jxb = cross_components(pj, pb);
    let uxo = cross_components(pu, po);
    let uxb = cross_components(pu, pb);
    let n = grid.size();
    let mut mom: Components<f64> = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut ind: Components<f64> = std::array::from_fn(|_| Vec::with_capacity(n));
    for d in 0..3 {
        mom[d].extend(uxo[d].iter().zip(&jxb[d]).map(|(a, c)| a + c));
        ind[d].extend(uxb[d].iter().zip(&jxb[d]).map(|(a, c)| a - eps_hall * c));
    }
    let mut spec = spectral_many(grid, &[&mom, &ind]).into_iter();
    let mut mom_hat = spec.next().unwrap();
    let mut ind_hat = spec.next().unwrap();
    for d in 0..3 {
        dealias_in_place(grid, &mut mom_hat[d]);
        dealias_in_place(grid, &mut ind_hat[d]);
        mom_hat[d][0] = Complex64::default();
    }
    project_in_place(grid, &mut mom_hat);
    (mom_hat, curl_coeffs(grid, &ind_hat))
}

fn diffuse_into(grid: &Grid, coef: f64, src: &Components<Complex64>, acc: &mut Components<Complex64>) {
    let k2 = grid.k_sq_lattice();
    for d in 0..3 {
        for ((a, s), ks) in acc[d].iter_mut().zip(&src[d]).zip(&k2) {
            *a -= s * (coef * ks);
        }
    }
}

/// Velocity tendency `P[dealias(B.grad B - u.grad u)] + nu lap u`, spectral.
pub fn velocity_rhs(s: &SimState) -> Result<Field> {
    let grid = s.grid();
    let (u, b) = (s.u.spectral_view(), s.b.spectral_view());
    let (mut mom, _) = nonlinear_coeffs(grid, &u, &b, s.params.eps_hall);
    diffuse_into(grid, s.params.nu, &u, &mut mom);
    check_finite(&mom, "velocity_rhs", s.t)?;
    Field::from_spectral(grid, mom)
}

/// Induction tendency `curl dealias(u x B) - eps_H hall_term(B) + eta lap B`, spectral.
pub fn magnetic_rhs(s: &SimState) -> Result<Field> {
    let grid = s.grid();
    let (u, b) = (s.u.spectral_view(), s.b.spectral_view());
    let (_, mut ind) = nonlinear_coeffs(grid, &u, &b, s.params.eps_hall);
    diffuse_into(grid, s.params.eta, &b, &mut ind);
    check_finite(&ind, "magnetic_rhs", s.t)?;
    Field::from_spectral(grid, ind)
}

/// Both tendencies from one shared nonlinear evaluation.
pub fn tendencies(s: &SimState) -> Result<(Field, Field)> {
    let grid = s.grid();
    let (u, b) = (s.u.spectral_view(), s.b.spectral_view());
    let (mut mom, mut ind) = nonlinear_coeffs(grid, &u, &b, s.params.eps_hall);
    diffuse_into(grid, s.params.nu, &u, &mut mom);
    diffuse_into(grid, s.params.eta, &b, &mut ind);
    check_finite(&mom, "velocity_rhs", s.t)?;
    check_finite(&ind, "magnetic_rhs", s.t)?;
    Ok((Field::from_spectral(grid, mom)?, Field::from_spectral(grid, ind)?))
}

/// Hall term `curl(dealias((curl B) x B))`, spectral.
pub fn hall_term(b: &Field) -> Field {
    let grid = b.grid();
    let bh = b.spectral_view();
    let j = curl_coeffs(grid, &bh);
    let phys = coeffs_to_physical(grid, &[&j, &bh]);
    let jxb = cross_components(&phys[0], &phys[1]);
    let mut hat = spectral_many(grid, &[&jxb]).pop().unwrap();
    for v in hat.iter_mut() {
        dealias_in_place(grid, v);
    }
    Field::from_spectral(grid, curl_coeffs(grid, &hat)).unwrap()
}

/// `(f . grad) g`, evaluated in advective form and dealiased.
pub fn advect(f: &Field, g: &Field) -> Field {
    let grid = f.grid();
    let dg: Vec<Field> = (0..3)
        .map(|ax| {
            let mut alpha = [0u32; 3];
            alpha[ax] = 1;
            spectral::derivative(g, alpha)
        })
        .collect();
    let refs: Vec<&Field> = std::iter::once(f).chain(dg.iter()).collect();
    let phys = physical_many(&refs);
    let pf = &phys[0];
    let n = grid.size();
    let out: Components<f64> = std::array::from_fn(|i| {
        (0..n)
            .map(|x| pf[0][x] * phys[1][i][x] + pf[1][x] * phys[2][i][x] + pf[2][x] * phys[3][i][x])
            .collect()
    });
    let mut hat = spectral_many(grid, &[&out]).pop().unwrap();
    for v in hat.iter_mut() {
        dealias_in_place(grid, v);
    }
    Field::from_spectral(grid, hat).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub kinetic: f64,
    pub magnetic: f64,
    pub visc_dissipation: f64,
    pub ohmic_dissipation: f64,
    /// `<u, B.grad B> + <B, curl(u x B)>`; vanishes for the exact dynamics.
    pub cross_transfer: f64,
    /// `<B, hall_term(B)>`; vanishes for the exact dynamics.
    pub hall_work: f64,
    /// Cauchy-Schwarz scale of the two transfer terms, for relative checks.
    pub transfer_scale: f64,
}

/// Energy content, dissipation rates and the two transfer terms that the
/// continuous dynamics conserve exactly.
pub fn energy_budget(s: &SimState) -> EnergyBudget {
    let (u, b) = (&s.u, &s.b);
    let grid = s.grid();
    let bgradb = advect(b, b);
    let uxb = {
        let phys = physical_many(&[u, b]);
        let c = cross_components(&phys[0], &phys[1]);
        let mut hat = spectral_many(grid, &[&c]).pop().unwrap();
        for v in hat.iter_mut() {
            dealias_in_place(grid, v);
        }
        Field::from_spectral(grid, curl_coeffs(grid, &hat)).unwrap()
    };
    let hall = hall_term(b);
    let t1 = inner_spectral(u, &bgradb);
    let t2 = inner_spectral(b, &uxb);
    EnergyBudget {
        kinetic: 0.5 * inner_spectral(u, u),
        magnetic: 0.5 * inner_spectral(b, b),
        visc_dissipation: s.params.nu * gradient_l2_norm(u).powi(2),
        ohmic_dissipation: s.params.eta * gradient_l2_norm(b).powi(2),
        cross_transfer: t1 + t2,
        hall_work: inner_spectral(b, &hall),
        transfer_scale: l2_norm(u) * l2_norm(&bgradb) + l2_norm(b) * l2_norm(&uxb),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::spectral::remove_mean;
    use crate::testing::{random_solenoidal, rel};
    use std::f64::consts::PI;

    fn beltrami(grid: &Arc<Grid>, k: f64) -> Field {
        // curl B = k B, divergence free, mean free
        Field::from_fn(grid, |x, y, z| {
            [
                (k * z).sin() + (k * y).cos(),
                (k * z).cos() + (k * x).sin(),
                (k * y).sin() + (k * x).cos(),
            ]
        })
        .into_spectral()
    }

    #[test]
    fn zero_state_has_zero_tendencies() {
        let g = make_grid(8, 2.0 * PI).unwrap();
        let s = SimState::zero(&g, HallMhdParams::default());
        let (du, db) = tendencies(&s).unwrap();
        assert_eq!(l2_norm(&du), 0.0);
        assert_eq!(l2_norm(&db), 0.0);
    }

    #[test]
    fn beltrami_magnetic_field_exerts_no_projected_force() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let b = beltrami(&g, 1.0);
        let s = SimState::new(Field::zeros(&g, Repr::Spectral), b.clone(), 0.0, HallMhdParams::default()).unwrap();
        let du = velocity_rhs(&s).unwrap();
        assert!(l2_norm(&du) <= 1e-11 * l2_norm(&b).powi(2), "{}", l2_norm(&du));
        let h = hall_term(&b);
        assert!(l2_norm(&h) <= 1e-11 * l2_norm(&b).powi(2));
    }

    #[test]
    fn uniform_field_has_no_hall_term() {
        let g = make_grid(8, 1.0).unwrap();
        let b = Field::from_fn(&g, |_, _, _| [1.0, 2.0, -0.5]);
        assert!(l2_norm(&hall_term(&b)) < 1e-13);
    }

    #[test]
    fn hall_toggle_is_inert_for_curl_free_fields() {
        // Uniform B: curl B = 0, so eps_H does not matter.
        let g = make_grid(16, 2.0 * PI).unwrap();
        let u = random_solenoidal(&g, 3);
        let b = Field::from_fn(&g, |_, _, _| [0.3, -0.2, 0.1]).into_spectral();
        let mut p = HallMhdParams::default();
        p.eps_hall = 0.0;
        let s0 = SimState::new(u.clone(), b.clone(), 0.0, p).unwrap();
        p.eps_hall = 1.0;
        let s1 = SimState::new(u, b, 0.0, p).unwrap();
        let a = magnetic_rhs(&s0).unwrap();
        let c = magnetic_rhs(&s1).unwrap();
        assert!(rel(&c, &a) < 1e-13, "{}", rel(&c, &a));
    }

    #[test]
    fn tendencies_are_affine_in_hall_coefficient() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let u = random_solenoidal(&g, 5);
        let b = random_solenoidal(&g, 6);
        let rhs = |e: f64| {
            let mut p = HallMhdParams::default();
            p.eps_hall = e;
            tendencies(&SimState::new(u.clone(), b.clone(), 0.0, p).unwrap()).unwrap()
        };
        let (u0, b0) = rhs(0.0);
        let (uh, bh) = rhs(0.5);
        let (u1, b1) = rhs(1.0);
        let avg_b = b0.axpy(1.0, &b1).unwrap().scaled(0.5);
        let avg_u = u0.axpy(1.0, &u1).unwrap().scaled(0.5);
        assert!(rel(&bh, &avg_b) <= 1e-12);
        assert!(rel(&uh, &avg_u) <= 1e-12);
    }

    #[test]
    fn hall_term_does_no_magnetic_work() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        for seed in 0..5 {
            let b = random_solenoidal(&g, 100 + seed);
            let w = inner_spectral(&b, &hall_term(&b));
            let scale = l2_norm(&b) * gradient_l2_norm(&b) * b.max_magnitude();
            assert!(w.abs() <= 1e-10 * scale, "{w} vs {scale}");
        }
    }

    #[test]
    fn energy_budget_of_zero_and_random_states() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let z = energy_budget(&SimState::zero(&g, HallMhdParams::default()));
        assert_eq!(z.kinetic, 0.0);
        assert_eq!(z.magnetic, 0.0);
        assert_eq!(z.visc_dissipation, 0.0);
        assert_eq!(z.ohmic_dissipation, 0.0);
        assert_eq!(z.cross_transfer, 0.0);
        assert_eq!(z.hall_work, 0.0);

        let s = SimState::new(
            random_solenoidal(&g, 1),
            random_solenoidal(&g, 2),
            0.0,
            HallMhdParams::default(),
        )
        .unwrap();
        let e = energy_budget(&s);
        assert!((e.kinetic - 0.5).abs() < 1e-12);
        assert!(e.cross_transfer.abs() <= 1e-10 * e.transfer_scale);
        let hall_scale = l2_norm(&s.b) * gradient_l2_norm(&s.b) * s.b.max_magnitude();
        assert!(e.hall_work.abs() <= 1e-10 * hall_scale);
    }

    #[test]
    fn tendencies_preserve_divergence_and_zero_mean() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let s = SimState::new(
            random_solenoidal(&g, 7),
            random_solenoidal(&g, 8),
            0.0,
            HallMhdParams::default(),
        )
        .unwrap();
        let (du, db) = tendencies(&s).unwrap();
        assert!(divergence_ratio(&du) <= 1e-12);
        assert!(divergence_ratio(&db) <= 1e-12);
        let m = remove_mean(&du);
        assert_eq!(m.spectral().unwrap(), du.spectral().unwrap());
    }
}
