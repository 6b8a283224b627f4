//! Periodic box geometry.
//!
//! The box `[-L/2, L/2)^3` is sampled on `N` points per axis. Index `j` maps
//! to the coordinate `-L/2 + j*dx`, so the origin of the weights used by the
//! diagnostics sits at the box center. Wavenumbers follow the standard DFT
//! ordering `m = 0, 1, .., N/2-1, -N/2, .., -1` with `k = 2*pi*m/L`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct Grid {
    n: usize,
    l: f64,
    dx: f64,
    coords: Vec<f64>,
    modes: Vec<i64>,
    k: Vec<f64>,
    k_odd: Vec<f64>,
    keep: Vec<bool>,
    pub(crate) fft_forward: Arc<dyn Fft<f64>>,
    pub(crate) fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("l", &self.l)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.l.to_bits() == other.l.to_bits()
    }
}

/// Builds a shared grid. `n` must be even and at least 8, `l` positive.
pub fn make_grid(n: usize, l: f64) -> Result<Arc<Grid>> {
    Grid::new(n, l).map(Arc::new)
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be even and >= 8, got {n}"
            )));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {l}")));
        }
        let dx = l / n as f64;
        let coords = (0..n).map(|j| -l / 2.0 + j as f64 * dx).collect();
        let half = (n / 2) as i64;
        let modes: Vec<i64> = (0..n as i64)
            .map(|j| if j < half { j } else { j - n as i64 })
            .collect();
        let k: Vec<f64> = modes.iter().map(|&m| 2.0 * PI * m as f64 / l).collect();
        // The Nyquist mode has no conjugate partner; odd-order symbols vanish there.
        let k_odd = modes
            .iter()
            .zip(&k)
            .map(|(&m, &kk)| if m == -half { 0.0 } else { kk })
            .collect();
        let keep = modes.iter().map(|&m| 3 * m.unsigned_abs() as usize <= n).collect();

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n);
        let fft_inverse = planner.plan_fft_inverse(n);

        Ok(Self {
            n,
            l,
            dx,
            coords,
            modes,
            k,
            k_odd,
            keep,
            fft_forward,
            fft_inverse,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> f64 {
        self.l
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Number of lattice points, `N^3`.
    pub fn size(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Volume element `dx^3`.
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dx * self.dx
    }

    /// Centered 1-D coordinates shared by all three axes.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Integer mode numbers in DFT order.
    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    /// Wavenumbers `2*pi*m/L` in DFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Wavenumbers used for odd-order symbols (first derivatives, projection):
    /// identical to [`Grid::wavenumbers`] except the Nyquist entry is zero.
    pub fn wavenumbers_odd(&self) -> &[f64] {
        &self.k_odd
    }

    /// 2/3-rule retention mask per axis: `3|m| <= N`.
    pub fn dealias_keep(&self) -> &[bool] {
        &self.keep
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    /// Flat index of the mode `-m` for the mode stored at `idx`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (i, j, k) = self.unravel(idx);
        self.index((n - i) % n, (n - j) % n, (n - k) % n)
    }

    /// Squared distance from the box center of lattice point `idx`.
    #[inline]
    pub fn radius_sq(&self, idx: usize) -> f64 {
        let (i, j, k) = self.unravel(idx);
        let c = &self.coords;
        c[i] * c[i] + c[j] * c[j] + c[k] * c[k]
    }

    /// `|k|^2` at flat spectral index `idx`, using the full wavenumbers.
    #[inline]
    pub fn k_sq(&self, idx: usize) -> f64 {
        let (i, j, k) = self.unravel(idx);
        let w = &self.k;
        w[i] * w[i] + w[j] * w[j] + w[k] * w[k]
    }

    /// `|k|^2` over the whole lattice in spectral index order.
    pub fn k_sq_lattice(&self) -> Vec<f64> {
        let n = self.n;
        let w = &self.k;
        let mut out = Vec::with_capacity(self.size());
        for i in 0..n {
            for j in 0..n {
                let kij = w[i] * w[i] + w[j] * w[j];
                out.extend(w.iter().map(|kk| kij + kk * kk));
            }
        }
        out
    }

    /// Largest integer mode magnitude retained by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_geometry() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        assert!((g.dx() - PI / 4.0).abs() < 1e-15);
        assert_eq!(g.coords()[0], -PI);
        let mut ks: Vec<i64> = g.wavenumbers().iter().map(|k| k.round() as i64).collect();
        ks.sort();
        assert_eq!(ks, (-4..=3).collect::<Vec<_>>());
        assert_eq!(g.modes(), &[0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(7, 1.0).is_err());
        assert!(Grid::new(6, 1.0).is_err());
        assert!(Grid::new(8, 0.0).is_err());
        assert!(Grid::new(8, -1.0).is_err());
        assert!(Grid::new(8, f64::NAN).is_err());
    }

    #[test]
    fn coordinate_zero_is_exactly_minus_half_box() {
        for &(n, l) in &[(8, 1.0), (16, 32.0), (64, 16.0), (10, 0.3)] {
            let g = Grid::new(n, l).unwrap();
            assert_eq!(g.coords()[0], -l / 2.0);
        }
    }

    #[test]
    fn dealias_mask_matches_two_thirds() {
        let g = Grid::new(8, 1.0).unwrap();
        let kept: Vec<i64> = g
            .modes()
            .iter()
            .zip(g.dealias_keep())
            .filter(|(_, &k)| k)
            .map(|(&m, _)| m)
            .collect();
        assert_eq!(kept, vec![0, 1, 2, -2, -1]);
        assert_eq!(g.wavenumbers_odd()[4], 0.0);
    }

    #[test]
    fn conjugate_index_round_trips() {
        let g = Grid::new(8, 1.0).unwrap();
        for idx in 0..g.size() {
            assert_eq!(g.conjugate_index(g.conjugate_index(idx)), idx);
        }
        assert_eq!(g.conjugate_index(0), 0);
    }
}
