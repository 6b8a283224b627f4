//! Three-dimensional DFTs on the periodic lattice.
//!
//! Transforms are complex-to-complex along each axis, with a cache-tiled
//! cyclic axis permutation between passes so every 1-D transform runs on
//! contiguous rows. Real lattices are transformed two at a time by packing
//! them as the real and imaginary parts of one complex lattice; the forward
//! unpacking makes the resulting spectra exactly Hermitian.
//!
//! Forward transforms are unnormalized, inverse transforms carry `1/N^3`.

use num_complex::Complex64;

use crate::grid::Grid;

const TILE: usize = 16;

fn permute_cyclic(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    // dst[(k, i, j)] = src[(i, j, k)]
    for i in 0..n {
        for jb in (0..n).step_by(TILE) {
            let je = (jb + TILE).min(n);
            for kb in (0..n).step_by(TILE) {
                let ke = (kb + TILE).min(n);
                for k in kb..ke {
                    let drow = &mut dst[(k * n + i) * n + jb..(k * n + i) * n + je];
                    for (j, d) in (jb..je).zip(drow.iter_mut()) {
                        *d = src[(i * n + j) * n + k];
                    }
                }
            }
        }
    }
}

fn transform_in_place(grid: &Grid, data: &mut Vec<Complex64>, inverse: bool) {
    let n = grid.n();
    let fft = if inverse {
        &grid.fft_inverse
    } else {
        &grid.fft_forward
    };
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); data.len()];
    for _ in 0..3 {
        fft.process_with_scratch(data, &mut scratch);
        permute_cyclic(data, &mut buf, n);
        std::mem::swap(data, &mut buf);
    }
}

/// Unnormalized forward transform of a complex lattice.
pub fn forward_complex(grid: &Grid, data: &mut Vec<Complex64>) {
    transform_in_place(grid, data, false);
}

/// Normalized inverse transform of a complex lattice.
pub fn inverse_complex(grid: &Grid, data: &mut Vec<Complex64>) {
    transform_in_place(grid, data, true);
    let scale = 1.0 / grid.size() as f64;
    data.iter_mut().for_each(|z| *z *= scale);
}

/// Forward transforms of real lattices, processed in pairs.
pub fn forward_real_batch(grid: &Grid, reals: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let n = grid.n();
    let mut out = Vec::with_capacity(reals.len());
    for pair in reals.chunks(2) {
        let a = pair[0];
        let mut z: Vec<Complex64> = match pair.get(1) {
            Some(b) => a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
            None => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        };
        transform_in_place(grid, &mut z, false);

        let mut sa = vec![Complex64::default(); z.len()];
        let mut sb = if pair.len() == 2 {
            vec![Complex64::default(); z.len()]
        } else {
            Vec::new()
        };
        for i in 0..n {
            let ci = (n - i) % n;
            for j in 0..n {
                let cj = (n - j) % n;
                let row = (i * n + j) * n;
                let crow = (ci * n + cj) * n;
                for k in 0..n {
                    let ck = (n - k) % n;
                    let zp = z[row + k];
                    let zm = z[crow + ck].conj();
                    sa[row + k] = (zp + zm) * 0.5;
                    if !sb.is_empty() {
                        // (zp - zm) / 2i
                        let d = zp - zm;
                        sb[row + k] = Complex64::new(d.im * 0.5, -d.re * 0.5);
                    }
                }
            }
        }
        out.push(sa);
        if pair.len() == 2 {
            out.push(sb);
        }
    }
    out
}

/// Inverse transforms of Hermitian spectra to real lattices, processed in pairs.
pub fn inverse_real_batch(grid: &Grid, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let scale = 1.0 / grid.size() as f64;
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        let a = pair[0];
        let mut z: Vec<Complex64> = match pair.get(1) {
            // a + i b
            Some(b) => a
                .iter()
                .zip(b.iter())
                .map(|(&x, &y)| Complex64::new(x.re - y.im, x.im + y.re))
                .collect(),
            None => a.to_vec(),
        };
        transform_in_place(grid, &mut z, true);
        out.push(z.iter().map(|v| v.re * scale).collect());
        if pair.len() == 2 {
            out.push(z.iter().map(|v| v.im * scale).collect());
        }
    }
    out
}
