//! Localized divergence-free initial data built from Gaussian vector
//! potentials.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Components, Field, Repr};
use crate::grid::Grid;
use crate::spectral::{dealias, leray_project, remove_mean};

/// Minimum blob width in grid spacings.
pub const MIN_WIDTH_CELLS: f64 = 2.0;

/// One Gaussian envelope `exp(-|x - center|^2 / (2 width^2))` carrying a
/// vector potential amplitude for each field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub center: [f64; 3],
    pub width: f64,
    #[serde(default)]
    pub u_amplitude: [f64; 3],
    #[serde(default)]
    pub b_amplitude: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    U,
    B,
    #[default]
    Both,
}

impl FromStr for Which {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" => Ok(Which::U),
            "B" | "b" => Ok(Which::B),
            "both" => Ok(Which::Both),
            _ => Err(Error::InvalidInitialData(format!("unknown field selection {s:?}"))),
        }
    }
}

/// How the blobs are turned into fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `curl(A g)`: solenoidal, zero mean.
    #[default]
    Potential,
    /// `A g` itself, not solenoidal. Only meaningful for linear-only runs,
    /// where it gives plain heat-kernel data.
    RawGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialDataSpec {
    pub blobs: Vec<Blob>,
    /// Extra blobs drawn from `seed`: centers in the central eighth of the
    /// box, normal amplitudes.
    pub random_blobs: usize,
    pub random_width: f64,
    pub seed: u64,
    /// Target for `|u0|_{H^3} + |B0|_{H^3}`; `None` keeps raw amplitudes.
    pub target_h3: Option<f64>,
    pub which: Which,
    pub profile: Profile,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            blobs: vec![Blob {
                center: [0.0; 3],
                width: 1.0,
                u_amplitude: [1.0, 0.5, -0.25],
                b_amplitude: [-0.5, 1.0, 0.75],
            }],
            random_blobs: 0,
            random_width: 1.0,
            seed: 0,
            target_h3: Some(1e-2),
            which: Which::Both,
            profile: Profile::Potential,
        }
    }
}

impl InitialDataSpec {
    /// Explicit blobs followed by the seeded random ones.
    pub fn all_blobs(&self, l: f64) -> Vec<Blob> {
        let mut out = self.blobs.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random_blobs {
            let center = std::array::from_fn(|_| rng.random_range(-l / 8.0..l / 8.0));
            let mut amp = || -> [f64; 3] { std::array::from_fn(|_| rng.sample(StandardNormal)) };
            let u_amplitude = amp();
            let b_amplitude = amp();
            out.push(Blob {
                center,
                width: self.random_width,
                u_amplitude,
                b_amplitude,
            });
        }
        out
    }

    pub fn max_width(&self, l: f64) -> f64 {
        self.all_blobs(l).iter().map(|b| b.width).fold(0.0, f64::max)
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let l = grid.len();
        if let Some(t) = self.target_h3 {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidInitialData(format!("target_h3 must be finite and >= 0, got {t}")));
            }
        }
        for b in self.all_blobs(l) {
            if !(b.width >= MIN_WIDTH_CELLS * grid.dx()) {
                return Err(Error::InvalidInitialData(format!(
                    "blob width {} is below {MIN_WIDTH_CELLS} grid spacings ({})",
                    b.width,
                    MIN_WIDTH_CELLS * grid.dx()
                )));
            }
            for &c in &b.center {
                if !c.is_finite() || c.abs() > 0.25 * l {
                    return Err(Error::InvalidInitialData(format!(
                        "blob center coordinate {c} lies outside the central half-box"
                    )));
                }
                if c.abs() + 3.0 * b.width > 0.5 * l {
                    return Err(Error::InvalidInitialData(format!(
                        "blob at {c} with width {} comes within 3 widths of the boundary",
                        b.width
                    )));
                }
            }
            if b.u_amplitude.iter().chain(&b.b_amplitude).any(|a| !a.is_finite()) {
                return Err(Error::InvalidInitialData("non-finite blob amplitude".into()));
            }
        }
        Ok(())
    }
}

/// Periodized envelope along one axis and its derivative.
fn axis_profile(grid: &Grid, c: f64, w: f64) -> (Vec<f64>, Vec<f64>) {
    let l = grid.len();
    let m = (10.0 * w / l).ceil() as i64 + 1;
    let mut g = vec![0.0; grid.n()];
    let mut dg = vec![0.0; grid.n()];
    for (i, &x) in grid.coords().iter().enumerate() {
        for n in -m..=m {
            let y = x - c + n as f64 * l;
            let e = (-y * y / (2.0 * w * w)).exp();
            g[i] += e;
            dg[i] -= y / (w * w) * e;
        }
    }
    (g, dg)
}

/// Adds `curl(A g)` (or `A g` for the raw profile) for one blob.
fn add_blob(grid: &Grid, blob: &Blob, amp: [f64; 3], profile: Profile, out: &mut Components<f64>) {
    if amp == [0.0; 3] {
        return;
    }
    let n = grid.n();
    let axes: [(Vec<f64>, Vec<f64>); 3] = std::array::from_fn(|d| axis_profile(grid, blob.center[d], blob.width));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let idx = grid.index(i, j, k);
                let (gx, gy, gz) = (axes[0].0[i], axes[1].0[j], axes[2].0[k]);
                match profile {
                    Profile::RawGaussian => {
                        let g = gx * gy * gz;
                        for d in 0..3 {
                            out[d][idx] += amp[d] * g;
                        }
                    }
                    Profile::Potential => {
                        // curl(A g) = grad g x A
                        let grad = [axes[0].1[i] * gy * gz, gx * axes[1].1[j] * gz, gx * gy * axes[2].1[k]];
                        out[0][idx] += grad[1] * amp[2] - grad[2] * amp[1];
                        out[1][idx] += grad[2] * amp[0] - grad[0] * amp[2];
                        out[2][idx] += grad[0] * amp[1] - grad[1] * amp[0];
                    }
                }
            }
        }
    }
}

/// `|f|_{H^3}` from the Fourier weight `(1 + |k|^2)^3`.
pub fn h3_norm(f: &Field) -> f64 {
    let grid = f.grid();
    let c = f.spectral_view();
    let mut s = 0.0;
    for idx in 0..grid.size() {
        let w = (1.0 + grid.k_sq(idx)).powi(3);
        s += w * (0..3).map(|d| c[d][idx].norm_sqr()).sum::<f64>();
    }
    (s * grid.cell_volume() / grid.size() as f64).sqrt()
}

fn build(grid: &Arc<Grid>, blobs: &[Blob], pick: impl Fn(&Blob) -> [f64; 3], profile: Profile) -> Result<Field> {
    let mut comps: Components<f64> = std::array::from_fn(|_| vec![0.0; grid.size()]);
    for b in blobs {
        add_blob(grid, b, pick(b), profile, &mut comps);
    }
    let f = Field::from_physical(grid, comps)?.into_spectral();
    Ok(match profile {
        Profile::Potential => leray_project(&remove_mean(&dealias(&f))),
        Profile::RawGaussian => f,
    })
}

/// Builds `(u0, B0)` in spectral form, truncated and (for the potential
/// profile) projected, then rescaled so the summed `H^3` norm hits the target.
pub fn generate_initial_data(spec: &InitialDataSpec, grid: &Arc<Grid>) -> Result<(Field, Field)> {
    spec.validate(grid)?;
    let blobs = spec.all_blobs(grid.len());
    let zero = || Field::zeros(grid, Repr::Spectral);
    let u = match spec.which {
        Which::B => zero(),
        _ => build(grid, &blobs, |b| b.u_amplitude, spec.profile)?,
    };
    let b = match spec.which {
        Which::U => zero(),
        _ => build(grid, &blobs, |b| b.b_amplitude, spec.profile)?,
    };
    let Some(target) = spec.target_h3 else {
        return Ok((u, b));
    };
    let total = h3_norm(&u) + h3_norm(&b);
    if total == 0.0 {
        return Ok((u, b));
    }
    let s = target / total;
    Ok((u.scaled(s), b.scaled(s)))
}
