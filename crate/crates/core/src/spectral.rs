//! Spectral calculus on the periodic lattice: derivatives, curl, divergence,
//! Leray projection, 2/3-rule dealiasing, pointwise products and inner products.
//!
//! Every operation returns a new field and leaves its inputs untouched. Inputs
//! in the "wrong" representation are converted on the fly, except for
//! [`cross`], which is a pointwise product and requires physical inputs.

use num_complex::Complex64;

use crate::error::Result;
use crate::field::{Components, Field, ScalarField};
use crate::grid::Grid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A multi-index `alpha = (a1, a2, a3)` selecting `d^a1/dx1^a1 d^a2/dx2^a2 d^a3/dx3^a3`.
pub type MultiIndex = [u32; 3];

/// All multi-indices of total order `b`, in lexicographic order.
pub fn multi_indices(b: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for a1 in (0..=b).rev() {
        for a2 in (0..=b - a1).rev() {
            out.push([a1, a2, b - a1 - a2]);
        }
    }
    out
}

fn axis_symbol(grid: &Grid, order: u32) -> Vec<Complex64> {
    let k = if order % 2 == 1 {
        grid.wavenumbers_odd()
    } else {
        grid.wavenumbers()
    };
    let phase = I.powu(order);
    k.iter().map(|&kk| phase * kk.powi(order as i32)).collect()
}

pub(crate) fn apply_symbol(grid: &Grid, alpha: MultiIndex, src: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let s: [Vec<Complex64>; 3] = std::array::from_fn(|d| axis_symbol(grid, alpha[d]));
    let mut out = Vec::with_capacity(src.len());
    for i in 0..n {
        for j in 0..n {
            let sij = s[0][i] * s[1][j];
            let row = (i * n + j) * n;
            out.extend(src[row..row + n].iter().zip(&s[2]).map(|(v, sk)| v * sij * sk));
        }
    }
    out
}

/// Calls `f(flat_index, k1, k2, k3)` with the odd-order wavenumbers of each mode.
#[inline]
pub(crate) fn for_each_k(grid: &Grid, mut f: impl FnMut(usize, f64, f64, f64)) {
    let n = grid.n();
    let k = grid.wavenumbers_odd();
    for i in 0..n {
        for j in 0..n {
            let row = (i * n + j) * n;
            for (kk, &k3) in k.iter().enumerate() {
                f(row + kk, k[i], k[j], k3);
            }
        }
    }
}

pub(crate) fn curl_coeffs(grid: &Grid, u: &Components<Complex64>) -> Components<Complex64> {
    let len = grid.size();
    let mut out: Components<Complex64> = std::array::from_fn(|_| vec![Complex64::default(); len]);
    for_each_k(grid, |idx, k1, k2, k3| {
        let (a, b, c) = (u[0][idx], u[1][idx], u[2][idx]);
        out[0][idx] = I * (b * -k3 + c * k2);
        out[1][idx] = I * (c * -k1 + a * k3);
        out[2][idx] = I * (a * -k2 + b * k1);
    });
    out
}

pub(crate) fn divergence_coeffs(grid: &Grid, u: &Components<Complex64>) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); grid.size()];
    for_each_k(grid, |idx, k1, k2, k3| {
        out[idx] = I * (u[0][idx] * k1 + u[1][idx] * k2 + u[2][idx] * k3);
    });
    out
}

pub(crate) fn project_in_place(grid: &Grid, u: &mut Components<Complex64>) {
    for_each_k(grid, |idx, k1, k2, k3| {
        let ksq = k1 * k1 + k2 * k2 + k3 * k3;
        if ksq == 0.0 {
            return;
        }
        let kdotu = (u[0][idx] * k1 + u[1][idx] * k2 + u[2][idx] * k3) / ksq;
        u[0][idx] -= kdotu * k1;
        u[1][idx] -= kdotu * k2;
        u[2][idx] -= kdotu * k3;
    });
}

pub(crate) fn dealias_in_place(grid: &Grid, v: &mut [Complex64]) {
    let n = grid.n();
    let keep = grid.dealias_keep();
    for i in 0..n {
        for j in 0..n {
            let row = (i * n + j) * n;
            if !(keep[i] && keep[j]) {
                v[row..row + n].fill(Complex64::default());
                continue;
            }
            for (z, &kk) in v[row..row + n].iter_mut().zip(keep) {
                if !kk {
                    *z = Complex64::default();
                }
            }
        }
    }
}

pub(crate) fn laplacian_coeffs(grid: &Grid, v: &[Complex64]) -> Vec<Complex64> {
    let k2 = grid.k_sq_lattice();
    v.iter().zip(&k2).map(|(z, ks)| z * -ks).collect()
}

pub(crate) fn cross_components(a: &Components<f64>, b: &Components<f64>) -> Components<f64> {
    let n = a[0].len();
    let mut out: Components<f64> = std::array::from_fn(|_| Vec::with_capacity(n));
    for i in 0..n {
        let (a1, a2, a3) = (a[0][i], a[1][i], a[2][i]);
        let (b1, b2, b3) = (b[0][i], b[1][i], b[2][i]);
        out[0].push(a2 * b3 - a3 * b2);
        out[1].push(a3 * b1 - a1 * b3);
        out[2].push(a1 * b2 - a2 * b1);
    }
    out
}

fn spectral_field(f: &Field, comps: Components<Complex64>) -> Field {
    Field::from_spectral(f.grid(), comps).expect("lattice sizes come from the same grid")
}

/// `d^alpha f`, spectral multiplication by `(i k)^alpha` per component.
pub fn derivative(f: &Field, alpha: MultiIndex) -> Field {
    let c = f.spectral_view();
    let g = f.grid();
    spectral_field(f, std::array::from_fn(|d| apply_symbol(g, alpha, &c[d])))
}

/// Partial derivative of a scalar lattice.
pub fn scalar_derivative(f: &ScalarField, alpha: MultiIndex) -> ScalarField {
    let c = f.spectral_view();
    ScalarField::from_spectral(f.grid(), apply_symbol(f.grid(), alpha, &c)).unwrap()
}

/// Gradient of a scalar lattice as a vector field.
pub fn gradient(f: &ScalarField) -> Field {
    let c = f.spectral_view();
    let g = f.grid();
    let comps = [
        apply_symbol(g, [1, 0, 0], &c),
        apply_symbol(g, [0, 1, 0], &c),
        apply_symbol(g, [0, 0, 1], &c),
    ];
    Field::from_spectral(g, comps).unwrap()
}

pub fn curl(f: &Field) -> Field {
    let c = f.spectral_view();
    spectral_field(f, curl_coeffs(f.grid(), &c))
}

pub fn divergence(f: &Field) -> ScalarField {
    let c = f.spectral_view();
    ScalarField::from_spectral(f.grid(), divergence_coeffs(f.grid(), &c)).unwrap()
}

/// Vector Laplacian.
pub fn laplacian(f: &Field) -> Field {
    let c = f.spectral_view();
    let g = f.grid();
    spectral_field(f, std::array::from_fn(|d| laplacian_coeffs(g, &c[d])))
}

/// Leray projection `v - k (k.v) / |k|^2`; the mean mode passes through.
pub fn leray_project(f: &Field) -> Field {
    let mut c = f.spectral_view().into_owned();
    project_in_place(f.grid(), &mut c);
    spectral_field(f, c)
}

/// 2/3-rule truncation: zero every mode with some `|m_i| > N/3`.
pub fn dealias(f: &Field) -> Field {
    let mut c = f.spectral_view().into_owned();
    for v in c.iter_mut() {
        dealias_in_place(f.grid(), v);
    }
    spectral_field(f, c)
}

pub fn dealias_scalar(f: &ScalarField) -> ScalarField {
    let mut v = f.spectral_view().into_owned();
    dealias_in_place(f.grid(), &mut v);
    ScalarField::from_spectral(f.grid(), v).unwrap()
}

/// Pointwise cross product of two physical fields.
pub fn cross(f: &Field, g: &Field) -> Result<Field> {
    f.same_grid(g)?;
    let out = cross_components(f.physical()?, g.physical()?);
    Field::from_physical(f.grid(), out)
}

/// Grid inner product `sum_x f.g dx^3`.
pub fn inner_physical(f: &Field, g: &Field) -> f64 {
    let a = f.physical_view();
    let b = g.physical_view();
    let s: f64 = (0..3)
        .map(|d| a[d].iter().zip(&b[d]).map(|(x, y)| x * y).sum::<f64>())
        .sum();
    s * f.grid().cell_volume()
}

/// The same inner product evaluated from spectral coefficients (Parseval).
pub fn inner_spectral(f: &Field, g: &Field) -> f64 {
    let a = f.spectral_view();
    let b = g.spectral_view();
    let grid = f.grid();
    let s: f64 = (0..3)
        .map(|d| {
            a[d].iter()
                .zip(&b[d])
                .map(|(x, y)| x.re * y.re + x.im * y.im)
                .sum::<f64>()
        })
        .sum();
    s * grid.cell_volume() / grid.size() as f64
}

/// `L^2` norm over the box.
pub fn l2_norm(f: &Field) -> f64 {
    inner_spectral(f, f).max(0.0).sqrt()
}

/// `L^2` norm of a scalar lattice.
pub fn scalar_l2_norm(f: &ScalarField) -> f64 {
    let v = f.spectral_view();
    let g = f.grid();
    let s: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    (s * g.cell_volume() / g.size() as f64).sqrt()
}

/// `L^2` norm of the full gradient `(sum_ij |d_i f_j|^2)^(1/2)`.
pub fn gradient_l2_norm(f: &Field) -> f64 {
    let c = f.spectral_view();
    let g = f.grid();
    let k2 = g.k_sq_lattice();
    let s: f64 = c
        .iter()
        .map(|v| v.iter().zip(&k2).map(|(z, ks)| z.norm_sqr() * ks).sum::<f64>())
        .sum();
    (s * g.cell_volume() / g.size() as f64).sqrt()
}

/// Zeroes the `k = 0` coefficient of every component.
pub fn remove_mean(f: &Field) -> Field {
    let mut c = f.spectral_view().into_owned();
    for v in c.iter_mut() {
        v[0] = Complex64::default();
    }
    spectral_field(f, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::testing::{random_field, rel};
    use std::f64::consts::PI;

    #[test]
    fn multi_index_counts() {
        for b in 0..5 {
            let m = multi_indices(b);
            assert_eq!(m.len() as u32, (b + 1) * (b + 2) / 2);
            assert!(m.iter().all(|a| a.iter().sum::<u32>() == b));
        }
    }

    #[test]
    fn zero_field_round_trip() {
        let g = make_grid(8, 1.0).unwrap();
        let z = Field::zeros(&g, crate::field::Repr::Physical);
        let s = z.to_spectral().unwrap();
        assert!(s.spectral().unwrap().iter().all(|v| v.iter().all(|c| c.norm() == 0.0)));
        let p = s.to_physical().unwrap();
        assert!(p.physical().unwrap().iter().all(|v| v.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn wrong_representation_is_rejected() {
        let g = make_grid(8, 1.0).unwrap();
        let z = Field::zeros(&g, crate::field::Repr::Physical);
        assert!(z.to_physical().is_err());
        assert!(z.to_spectral().unwrap().to_spectral().is_err());
    }

    #[test]
    fn single_sine_mode_has_two_coefficients() {
        let l = 3.0;
        let g = make_grid(8, l).unwrap();
        let f = Field::from_fn(&g, |x, _, _| [(2.0 * PI * x / l).sin(), 0.0, 0.0]);
        let s = f.to_spectral().unwrap();
        let c = &s.spectral().unwrap()[0];
        let big: Vec<usize> = (0..g.size()).filter(|&i| c[i].norm() > 1e-9).collect();
        let modes: Vec<i64> = big.iter().map(|&i| g.modes()[g.unravel(i).0]).collect();
        assert_eq!(big.len(), 2);
        assert!(modes.contains(&1) && modes.contains(&-1));
        for &i in &big {
            let (_, b, cc) = g.unravel(i);
            assert_eq!((b, cc), (0, 0));
        }
    }

    #[test]
    fn random_round_trip() {
        let g = make_grid(16, 2.0).unwrap();
        let f = random_field(&g, 3, false).into_physical();
        let back = f.to_spectral().unwrap().to_physical().unwrap();
        let a = f.physical().unwrap();
        let b = back.physical().unwrap();
        let m = a.iter().flat_map(|v| v.iter()).fold(0.0_f64, |m, x| m.max(x.abs()));
        let e = (0..3)
            .flat_map(|d| a[d].iter().zip(&b[d]).map(|(x, y)| (x - y).abs()))
            .fold(0.0_f64, f64::max);
        assert!(e <= 1e-12 * m, "{e} vs {m}");
    }

    #[test]
    fn derivative_of_sine() {
        let l = 2.0 * PI;
        let g = make_grid(32, l).unwrap();
        for m in [1.0, 3.0, 7.0] {
            let kk: f64 = m * 2.0 * PI / l;
            let f = Field::from_fn(&g, |x, _, _| [(kk * x).sin(), 0.0, 0.0]);
            let d = derivative(&f, [1, 0, 0]).into_physical();
            let p = d.physical().unwrap();
            let c = g.coords();
            for idx in 0..g.size() {
                let (i, _, _) = g.unravel(idx);
                let want = kk * (kk * c[i]).cos();
                assert!((p[0][idx] - want).abs() <= 1e-12 * kk);
            }
        }
    }

    #[test]
    fn constant_has_zero_derivative_and_mixed_partials_commute() {
        let g = make_grid(8, 1.0).unwrap();
        let f = Field::from_fn(&g, |_, _, _| [2.0, -1.0, 0.5]);
        let d = derivative(&f, [0, 1, 0]).into_physical();
        assert!(d.max_abs_component() < 1e-14);

        let r = random_field(&g, 9, false);
        let a = derivative(&derivative(&r, [1, 0, 0]), [0, 1, 0]);
        let b = derivative(&derivative(&r, [0, 1, 0]), [1, 0, 0]);
        assert!(crate::testing::max_coeff_diff(&a, &b) <= 1e-12 * l2_norm(&a));
    }

    #[test]
    fn leray_fixes_divergence_free_mode() {
        let l = 2.0 * PI;
        let g = make_grid(16, l).unwrap();
        // (sin z, cos z, 0) style single mode, divergence free
        let f = Field::from_fn(&g, |_, _, z| [(2.0 * z).sin(), (2.0 * z).cos(), 0.0]);
        let p = leray_project(&f).into_physical();
        let a = f.physical().unwrap();
        let b = p.physical().unwrap();
        for d in 0..3 {
            for (x, y) in a[d].iter().zip(&b[d]) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn leray_kills_gradients_but_keeps_mean() {
        let l = 2.0 * PI;
        let g = make_grid(16, l).unwrap();
        let phi = ScalarField::from_fn(&g, |x, y, z| (x + 2.0 * y).sin() * z.cos());
        let mut grad = gradient(&phi);
        grad.spectral_mut().unwrap()[0][0] = Complex64::new(3.0, 0.0);
        let p = leray_project(&grad);
        let c = p.spectral().unwrap();
        assert_eq!(c[0][0], Complex64::new(3.0, 0.0));
        let rest: f64 = c.iter().flat_map(|v| v.iter().skip(1)).map(|z| z.norm()).fold(0.0, f64::max);
        assert!(rest < 1e-10, "{rest}");
    }

    #[test]
    fn leray_output_is_divergence_free() {
        let g = make_grid(16, 3.0).unwrap();
        let f = random_field(&g, 4, false);
        let p = leray_project(&f);
        let div = scalar_l2_norm(&divergence(&p));
        assert!(div <= 1e-12 * gradient_l2_norm(&f), "{div}");
    }

    #[test]
    fn dealias_properties() {
        let g = make_grid(8, 1.0).unwrap();
        let inside = random_field(&g, 5, true);
        let again = dealias(&inside);
        assert_eq!(inside.spectral().unwrap(), again.spectral().unwrap());

        let l = 1.0;
        let f = Field::from_fn(&g, |x, _, _| [(2.0 * PI * 3.0 * x / l).cos(), 0.0, 0.0]);
        let d = dealias(&f);
        assert!(d.spectral().unwrap().iter().all(|v| v.iter().all(|z| z.norm() < 1e-13)));

        let r = random_field(&g, 6, false);
        let once = dealias(&r);
        let twice = dealias(&once);
        assert_eq!(once.spectral().unwrap(), twice.spectral().unwrap());
    }

    #[test]
    fn curl_identities() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        let phi = ScalarField::from_fn(&g, |x, y, z| (x - y).cos() * (2.0 * z).sin());
        let grad = gradient(&phi);
        let c = curl(&grad);
        assert!(l2_norm(&c) <= 1e-13 * gradient_l2_norm(&grad));

        let f = random_field(&g, 11, false);
        let dc = scalar_l2_norm(&divergence(&curl(&f)));
        assert!(dc <= 1e-12 * gradient_l2_norm(&f));

        let fp = f.into_physical();
        let z = cross(&fp, &fp).unwrap();
        assert!(z.physical().unwrap().iter().all(|v| v.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn beltrami_mode_is_curl_eigenfield() {
        // ABC-type single mode: curl f = k f.
        let l = 2.0 * PI;
        let g = make_grid(16, l).unwrap();
        let k = 2.0;
        let f = Field::from_fn(&g, |_, _, z| [(k * z).sin(), (k * z).cos(), 0.0]);
        let c = curl(&f).into_physical();
        let e = rel(&c, &f.scaled(k));
        assert!(e < 1e-13, "{e}");
    }

    #[test]
    fn parseval_and_adjointness() {
        let g = make_grid(16, 1.5).unwrap();
        let f = random_field(&g, 21, true);
        let h = random_field(&g, 22, true);
        let a = inner_physical(&f, &h);
        let b = inner_spectral(&f, &h);
        assert!((a - b).abs() <= 1e-12 * l2_norm(&f) * l2_norm(&h));
        let lhs = inner_spectral(&curl(&f), &h);
        let rhs = inner_spectral(&f, &curl(&h));
        assert!((lhs - rhs).abs() <= 1e-12 * gradient_l2_norm(&f) * l2_norm(&h));
    }

    #[test]
    fn derivative_commutes_with_dealias() {
        let g = make_grid(12, 1.0).unwrap();
        let f = random_field(&g, 31, false);
        let a = dealias(&derivative(&f, [2, 1, 0]));
        let b = derivative(&dealias(&f), [2, 1, 0]);
        assert_eq!(a.spectral().unwrap(), b.spectral().unwrap());
    }
}
