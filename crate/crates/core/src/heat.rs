//! Closed-form heat evolution of a Gaussian, on the whole space and on the
//! periodic box, used as an exact oracle for the linear solver.
//!
//! With unit diffusivity, `exp(-|x|^2 / (2 sigma^2))` evolves into
//! `(sigma / s)^3 exp(-|x|^2 / (2 s^2))` with `s^2 = sigma^2 + 2 t`. On a box
//! of side `L` the solution is the periodic image sum, which factorizes
//! over the axes.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::lemmas::ode::adaptive_simpson;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatGaussian {
    pub sigma: f64,
    /// Diffusivity.
    pub nu: f64,
}

impl HeatGaussian {
    pub fn new(sigma: f64, nu: f64) -> Result<Self> {
        if !(sigma > 0.0) || !(nu > 0.0) {
            return Err(Error::InvalidParams(format!("need sigma, nu > 0; got {sigma}, {nu}")));
        }
        Ok(Self { sigma, nu })
    }

    /// Current width `s` with `s^2 = sigma^2 + 2 nu t`.
    pub fn width(&self, t: f64) -> f64 {
        (self.sigma * self.sigma + 2.0 * self.nu * t).sqrt()
    }

    fn amplitude(&self, t: f64) -> f64 {
        (self.sigma / self.width(t)).powi(3)
    }

    /// Number of periodic images per side needed for round-off accuracy.
    fn images(&self, l: f64, t: f64) -> i64 {
        (10.0 * self.width(t) / l).ceil() as i64 + 1
    }

    /// One-dimensional periodized profile `sum_n exp(-(x + n L)^2 / (2 s^2))`.
    pub fn profile(&self, x: f64, l: f64, t: f64) -> f64 {
        let s2 = self.width(t).powi(2);
        let m = self.images(l, t);
        (-m..=m).map(|n| (-(x + n as f64 * l).powi(2) / (2.0 * s2)).exp()).sum()
    }

    /// The periodic solution sampled on the grid.
    pub fn lattice(&self, grid: &Arc<Grid>, t: f64) -> ScalarField {
        let l = grid.len();
        let phi: Vec<f64> = grid.coords().iter().map(|&x| self.profile(x, l, t)).collect();
        let amp = self.amplitude(t);
        let n = grid.n();
        let mut v = Vec::with_capacity(grid.size());
        for i in 0..n {
            for j in 0..n {
                let pij = amp * phi[i] * phi[j];
                v.extend(phi.iter().map(|pk| pij * pk));
            }
        }
        ScalarField::from_physical(grid, v).unwrap()
    }

    /// `| |x|^a G_t |_{L^2(R^3)}` for real `a >= 0`.
    pub fn whole_space_norm(&self, a: f64, t: f64) -> f64 {
        // int |x|^(2a) exp(-|x|^2 / s^2) dx = 2 pi s^(2a+3) Gamma(a + 3/2)
        let s = self.width(t);
        let amp = self.amplitude(t);
        (amp * amp * 2.0 * PI * s.powf(2.0 * a + 3.0) * libm::tgamma(a + 1.5)).sqrt()
    }

    /// `int_{-L/2}^{L/2} x^k phi(x)^2 dx` for the periodized profile.
    fn moment_1d(&self, k: i32, l: f64, t: f64) -> Result<f64> {
        if k == 0 {
            // Closed form: sum_j s sqrt(pi) exp(-j^2 L^2 / (4 s^2))
            let s = self.width(t);
            let m = self.images(l, t);
            return Ok((-m..=m)
                .map(|j| s * PI.sqrt() * (-(j as f64 * l).powi(2) / (4.0 * s * s)).exp())
                .sum());
        }
        adaptive_simpson(|x| x.powi(k) * self.profile(x, l, t).powi(2), -0.5 * l, 0.5 * l, 1e-13)
    }

    /// `| |x|^a G_t^per |_{L^2(box)}` for `a` in `{0, 1, 2}`, with `|x|` from
    /// the box center.
    pub fn periodic_norm(&self, a: u32, l: f64, t: f64) -> Result<f64> {
        let amp = self.amplitude(t);
        let i0 = self.moment_1d(0, l, t)?;
        let sq = match a {
            0 => i0.powi(3),
            1 => 3.0 * self.moment_1d(2, l, t)? * i0 * i0,
            2 => {
                let i2 = self.moment_1d(2, l, t)?;
                let i4 = self.moment_1d(4, l, t)?;
                3.0 * i4 * i0 * i0 + 6.0 * i2 * i2 * i0
            }
            _ => {
                return Err(Error::InvalidParams(format!(
                    "periodic closed form covers weights a <= 2, got {a}"
                )))
            }
        };
        Ok(amp * sq.sqrt())
    }

    /// `| grad G_t |_{L^2(R^3)}`.
    pub fn whole_space_gradient_norm(&self, t: f64) -> f64 {
        let s = self.width(t);
        self.whole_space_norm(0.0, t) * (1.5f64).sqrt() / s
    }
}
