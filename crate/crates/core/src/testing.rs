//! Random field generators and comparison helpers shared by the test suites.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fft;
use crate::field::Field;
use crate::grid::Grid;
use crate::spectral::{self, l2_norm};

/// Random real vector field in spectral form. Coefficients carry a Gaussian
/// envelope in `|m|` so the field is smooth; with `truncated` every mode
/// outside the 2/3 ball is zeroed.
pub fn random_field(grid: &Arc<Grid>, seed: u64, truncated: bool) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n();
    let width = (n as f64 / 4.0).max(2.0);
    let modes = grid.modes();
    let comps: [Vec<Complex64>; 3] = std::array::from_fn(|_| {
        let mut z: Vec<Complex64> = (0..grid.size())
            .map(|idx| {
                let (i, j, k) = grid.unravel(idx);
                let m2 = (modes[i] * modes[i] + modes[j] * modes[j] + modes[k] * modes[k]) as f64;
                let env = (-m2 / (2.0 * width * width)).exp();
                Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * env
            })
            .collect();
        fft::inverse_complex(grid, &mut z);
        let re: Vec<f64> = z.iter().map(|v| v.re * grid.size() as f64).collect();
        fft::forward_real_batch(grid, &[&re]).pop().unwrap()
    });
    let f = Field::from_spectral(grid, comps).unwrap();
    if truncated {
        spectral::dealias(&f)
    } else {
        f
    }
}

/// Random divergence-free, mean-free, 2/3-truncated field scaled to unit `L^2` norm.
pub fn random_solenoidal(grid: &Arc<Grid>, seed: u64) -> Field {
    let f = spectral::remove_mean(&spectral::leray_project(&random_field(grid, seed, true)));
    let s = l2_norm(&f);
    f.scaled(1.0 / s)
}

/// Relative `L^2` distance `|a - b| / |b|` (absolute when `b` vanishes).
pub fn rel(a: &Field, b: &Field) -> f64 {
    let d = l2_norm(&a.clone().into_spectral().axpy(-1.0, &b.clone().into_spectral()).unwrap());
    let nb = l2_norm(b);
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}

/// Largest coefficient-wise difference between two spectral fields.
pub fn max_coeff_diff(a: &Field, b: &Field) -> f64 {
    let x = a.spectral_view();
    let y = b.spectral_view();
    (0..3)
        .flat_map(|d| x[d].iter().zip(&y[d]).map(|(p, q)| (p - q).norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// `(f . grad) g` by direct summation over all wavevector pairs, in the
/// unnormalized coefficient convention (`O(N^6)`).
fn convolve_advection(grid: &Grid, f: &[Vec<Complex64>; 3], g: &[Vec<Complex64>; 3]) -> [Vec<Complex64>; 3] {
    let n = grid.n();
    let k = grid.wavenumbers();
    let scale = 1.0 / grid.size() as f64;
    let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); grid.size()]);
    for p in 0..grid.size() {
        let (pi, pj, pk) = grid.unravel(p);
        if f.iter().all(|c| c[p] == Complex64::default()) {
            continue;
        }
        for q in 0..grid.size() {
            let (qi, qj, qk) = grid.unravel(q);
            // f_j(p) * (i q_j) g_i(q) lands on p + q
            let dot = f[0][p] * k[qi] + f[1][p] * k[qj] + f[2][p] * k[qk];
            if dot == Complex64::default() {
                continue;
            }
            let m = grid.index((pi + qi) % n, (pj + qj) % n, (pk + qk) % n);
            for d in 0..3 {
                out[d][m] += Complex64::i() * dot * g[d][q] * scale;
            }
        }
    }
    out
}

fn truncate_and_project(grid: &Grid, c: &mut [Vec<Complex64>; 3], project: bool) {
    let keep = grid.dealias_keep();
    let k = grid.wavenumbers();
    for idx in 0..grid.size() {
        let (i, j, l) = grid.unravel(idx);
        if !(keep[i] && keep[j] && keep[l]) {
            for v in c.iter_mut() {
                v[idx] = Complex64::default();
            }
            continue;
        }
        if project {
            if idx == 0 {
                for v in c.iter_mut() {
                    v[0] = Complex64::default();
                }
                continue;
            }
            let kv = [k[i], k[j], k[l]];
            let k2 = kv.iter().map(|x| x * x).sum::<f64>();
            let kdot = (0..3).map(|d| c[d][idx] * kv[d]).sum::<Complex64>();
            for d in 0..3 {
                c[d][idx] -= kdot * (kv[d] / k2);
            }
        }
    }
}

fn curl_direct(grid: &Grid, c: &[Vec<Complex64>; 3]) -> [Vec<Complex64>; 3] {
    let k = grid.wavenumbers();
    let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); grid.size()]);
    for idx in 0..grid.size() {
        let (i, j, l) = grid.unravel(idx);
        let kv = [k[i], k[j], k[l]];
        let ik = |d: usize| Complex64::i() * kv[d];
        out[0][idx] = ik(1) * c[2][idx] - ik(2) * c[1][idx];
        out[1][idx] = ik(2) * c[0][idx] - ik(0) * c[2][idx];
        out[2][idx] = ik(0) * c[1][idx] - ik(1) * c[0][idx];
    }
    out
}

/// Independent evaluation of both tendencies in advective form:
/// `P[B.grad B - u.grad u] + nu lap u` and
/// `B.grad u - u.grad B - eps_H curl(B.grad B) + eta lap B`, by direct
/// convolution. Only valid for 2/3-truncated inputs on grids small enough for
/// `O(N^6)` work.
pub fn brute_force_rhs(u: &Field, b: &Field, nu: f64, eta: f64, eps_hall: f64) -> (Field, Field) {
    let grid = u.grid();
    let uc = u.spectral_view();
    let bc = b.spectral_view();
    let uu = convolve_advection(grid, &uc, &uc);
    let bb = convolve_advection(grid, &bc, &bc);
    let bu = convolve_advection(grid, &bc, &uc);
    let ub = convolve_advection(grid, &uc, &bc);
    let mut mom: [Vec<Complex64>; 3] =
        std::array::from_fn(|d| bb[d].iter().zip(&uu[d]).map(|(x, y)| x - y).collect());
    truncate_and_project(grid, &mut mom, true);
    let mut bb_t = bb.clone();
    truncate_and_project(grid, &mut bb_t, false);
    let hall = curl_direct(grid, &bb_t);
    let mut ind: [Vec<Complex64>; 3] = std::array::from_fn(|d| {
        (0..grid.size())
            .map(|x| bu[d][x] - ub[d][x] - hall[d][x] * eps_hall)
            .collect()
    });
    truncate_and_project(grid, &mut ind, false);
    for idx in 0..grid.size() {
        let k2 = grid.k_sq(idx);
        for d in 0..3 {
            mom[d][idx] -= uc[d][idx] * (nu * k2);
            ind[d][idx] -= bc[d][idx] * (eta * k2);
        }
    }
    (
        Field::from_spectral(grid, mom).unwrap(),
        Field::from_spectral(grid, ind).unwrap(),
    )
}
