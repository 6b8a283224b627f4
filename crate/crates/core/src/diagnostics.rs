//! Weighted norms `| w(x,t) D^b f |_{L^p}`, vorticity, pressure
//! reconstruction, the boundary-mass monitor and time-series bookkeeping.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::SimState;
use crate::error::{Error, Result};
use crate::field::{coeffs_to_physical, Components, Field, ScalarField};
use crate::spectral::{self, apply_symbol, dealias_in_place, multi_indices};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    #[serde(rename = "u")]
    U,
    #[serde(rename = "B")]
    B,
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "custom")]
    Custom,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::U => "u",
            FieldKind::B => "B",
            FieldKind::Omega => "omega",
            FieldKind::Custom => "custom",
        }
    }
}

impl FromStr for FieldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" => Ok(FieldKind::U),
            "B" | "b" => Ok(FieldKind::B),
            "omega" | "w" => Ok(FieldKind::Omega),
            "custom" => Ok(FieldKind::Custom),
            _ => Err(Error::InvalidNormSpec(format!("unknown field kind {s:?}"))),
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    /// `|x|^a`
    #[default]
    Centered,
    /// `(|x|^2 + t)^(a/2)`
    Shifted,
}

/// Which weighted norm to take. `p = f64::INFINITY` selects the sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub field: FieldKind,
    pub a: f64,
    pub b: u32,
    pub p: f64,
    #[serde(default)]
    pub weight: WeightKind,
}

impl WeightedNormSpec {
    pub fn new(field: FieldKind, a: f64, b: u32, p: f64) -> Result<Self> {
        let s = Self {
            field,
            a,
            b,
            p,
            weight: WeightKind::Centered,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn shifted(mut self) -> Self {
        self.weight = WeightKind::Shifted;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidNormSpec(format!("weight exponent must be >= 0, got {}", self.a)));
        }
        if !(self.p >= 2.0) {
            return Err(Error::InvalidNormSpec(format!("Lebesgue exponent must be >= 2, got {}", self.p)));
        }
        Ok(())
    }

    /// Column name, e.g. `u_a0_b0_p2`, `omega_a1.5_b2_pinf`, `B_a2_b0_p2_shifted`.
    pub fn name(&self) -> String {
        let p = if self.p.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", self.p)
        };
        let mut s = format!("{}_a{}_b{}_p{}", self.field, self.a, self.b, p);
        if self.weight == WeightKind::Shifted {
            s.push_str("_shifted");
        }
        s
    }
}

impl fmt::Display for WeightedNormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for WeightedNormSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidNormSpec(format!("cannot parse norm name {s:?}"));
        let (body, weight) = match s.strip_suffix("_shifted") {
            Some(b) => (b, WeightKind::Shifted),
            None => (s, WeightKind::Centered),
        };
        let parts: Vec<&str> = body.split('_').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let field: FieldKind = parts[0].parse()?;
        let a: f64 = parts[1].strip_prefix('a').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let b: u32 = parts[2].strip_prefix('b').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let p = match parts[3].strip_prefix('p').ok_or_else(bad)? {
            "inf" => f64::INFINITY,
            v => v.parse().map_err(|_| bad())?,
        };
        let spec = Self {
            field,
            a,
            b,
            p,
            weight,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Pointwise squared magnitude of the stacked derivative tuple `D^b f`.
fn derivative_magnitude_sq(f: &Field, b: u32) -> Vec<f64> {
    let grid = f.grid();
    let n = grid.size();
    let mut acc = vec![0.0; n];
    if b == 0 {
        let p = f.physical_view();
        for c in p.iter() {
            acc.iter_mut().zip(c).for_each(|(s, v)| *s += v * v);
        }
        return acc;
    }
    let c = f.spectral_view();
    for alpha in multi_indices(b) {
        let d: Components<Complex64> = std::array::from_fn(|i| apply_symbol(grid, alpha, &c[i]));
        let p = coeffs_to_physical(grid, &[&d]).pop().unwrap();
        for comp in p.iter() {
            acc.iter_mut().zip(comp).for_each(|(s, v)| *s += v * v);
        }
    }
    acc
}

fn weight_sq(grid: &crate::grid::Grid, spec: &WeightedNormSpec, t: f64, idx: usize) -> f64 {
    let r2 = grid.radius_sq(idx);
    match spec.weight {
        WeightKind::Centered => r2.powf(spec.a),
        WeightKind::Shifted => (r2 + t).powf(spec.a),
    }
}

/// `( sum_x w(x,t)^p |D^b f(x)|^p dx^3 )^(1/p)`, or the grid max of `w |D^b f|`
/// for `p = inf`. `|x|` is measured from the box center.
pub fn weighted_norm(f: &Field, spec: &WeightedNormSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    let grid = f.grid();
    let mag2 = derivative_magnitude_sq(f, spec.b);
    let unweighted = spec.a == 0.0;
    let w2 = |idx: usize| if unweighted { 1.0 } else { weight_sq(grid, spec, t, idx) };
    if spec.p.is_infinite() {
        let m = mag2
            .iter()
            .enumerate()
            .map(|(i, m)| (w2(i) * m).sqrt())
            .fold(0.0, f64::max);
        return Ok(m);
    }
    let half_p = 0.5 * spec.p;
    let s: f64 = if spec.p == 2.0 {
        mag2.iter().enumerate().map(|(i, m)| w2(i) * m).sum()
    } else {
        mag2.iter().enumerate().map(|(i, m)| (w2(i) * m).powf(half_p)).sum()
    };
    Ok((s * grid.cell_volume()).powf(1.0 / spec.p))
}

pub fn vorticity(s: &SimState) -> Field {
    spectral::curl(&s.u)
}

/// Total pressure reconstructed from the double Riesz transform of
/// `u_i u_j - B_i B_j`, i.e. `pi_hat = -(k_i k_j / |k|^2) F[u_i u_j - B_i B_j]`,
/// with zero mean.
pub fn pressure_diagnostic(s: &SimState) -> ScalarField {
    let grid = s.grid();
    // Separate transforms keep u == B bit-identical in physical space.
    let u = &s.u.physical_view();
    let b = &s.b.physical_view();
    let n = grid.size();
    let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let prods: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(i, j)| (0..n).map(|x| u[i][x] * u[j][x] - b[i][x] * b[j][x]).collect())
        .collect();
    let refs: Vec<&[f64]> = prods.iter().map(|v| v.as_slice()).collect();
    let mut hats = crate::fft::forward_real_batch(grid, &refs);
    for h in hats.iter_mut() {
        dealias_in_place(grid, h);
    }
    let k = grid.wavenumbers();
    let mut out = vec![Complex64::default(); n];
    for (idx, o) in out.iter_mut().enumerate() {
        if idx == 0 {
            continue;
        }
        let (i, j, l) = grid.unravel(idx);
        let kv = [k[i], k[j], k[l]];
        let k2 = grid.k_sq(idx);
        let mut acc = Complex64::default();
        for (h, &(a, c)) in hats.iter().zip(&pairs) {
            let mult = if a == c { 1.0 } else { 2.0 };
            acc += h[idx] * (mult * kv[a] * kv[c]);
        }
        *o = -acc / k2;
    }
    ScalarField::from_spectral(grid, out).unwrap()
}

/// Fraction of the `L^2` mass lying in the outer shell
/// `{ max_i |x_i| > (1 - shell) L/2 }`; zero for a zero field.
pub fn boundary_fraction(f: &Field, shell: f64) -> f64 {
    let grid = f.grid();
    let p = f.physical_view();
    let cut = (1.0 - shell) * 0.5 * grid.len();
    let c = grid.coords();
    let outside: Vec<bool> = c.iter().map(|x| x.abs() > cut).collect();
    let nn = grid.n();
    let (mut total, mut outer) = (0.0, 0.0);
    for i in 0..nn {
        for j in 0..nn {
            let row = (i * nn + j) * nn;
            let oij = outside[i] || outside[j];
            for k in 0..nn {
                let idx = row + k;
                let m = p[0][idx] * p[0][idx] + p[1][idx] * p[1][idx] + p[2][idx] * p[2][idx];
                total += m;
                if oij || outside[k] {
                    outer += m;
                }
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

pub const DEFAULT_SHELL: f64 = 0.1;

/// What a recorded series measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SeriesKind {
    Norm(WeightedNormSpec),
    Boundary(FieldKind),
}

impl SeriesKind {
    pub fn name(&self) -> String {
        match self {
            SeriesKind::Norm(s) => s.name(),
            SeriesKind::Boundary(k) => format!("boundary_{k}"),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.strip_prefix("boundary_") {
            Some(k) => Ok(SeriesKind::Boundary(k.parse()?)),
            None => Ok(SeriesKind::Norm(name.parse()?)),
        }
    }
}

/// A time series of one diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub kind: SeriesKind,
    pub samples: Vec<(f64, f64)>,
}

impl NormSeries {
    pub fn new(kind: SeriesKind) -> Self {
        Self {
            kind,
            samples: Vec::new(),
        }
    }

    pub fn from_samples(kind: SeriesKind, samples: Vec<(f64, f64)>) -> Result<Self> {
        let mut s = Self::new(kind);
        for (t, v) in samples {
            s.push(t, v)?;
        }
        Ok(s)
    }

    pub fn name(&self) -> String {
        self.kind.name()
    }

    pub fn push(&mut self, t: f64, v: f64) -> Result<()> {
        if !v.is_finite() || !t.is_finite() {
            return Err(Error::NonFinite {
                context: "norm series",
                t,
            });
        }
        if let Some(&(last, _)) = self.samples.last() {
            if !(t > last) {
                return Err(Error::InvalidParams(format!(
                    "series {} times must increase: {t} after {last}",
                    self.name()
                )));
            }
        }
        self.samples.push((t, v));
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Pointwise quotient `self / other` on shared sample times.
    pub fn ratio(&self, other: &NormSeries) -> Result<Vec<(f64, f64)>> {
        if self.times() != other.times() {
            return Err(Error::InvalidParams(format!(
                "series {} and {} are sampled at different times",
                self.name(),
                other.name()
            )));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&(t, a), &(_, b))| (t, a / b))
            .collect())
    }
}

/// Every series recorded during one run, sharing sample times. The two
/// boundary monitors always come last.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NormTable {
    pub series: Vec<NormSeries>,
}

impl NormTable {
    pub fn new(specs: &[WeightedNormSpec]) -> Result<Self> {
        let mut series = Vec::with_capacity(specs.len() + 2);
        for s in specs {
            s.validate()?;
            if s.field == FieldKind::Custom {
                return Err(Error::InvalidNormSpec(
                    "custom fields cannot be recorded from a simulation state".into(),
                ));
            }
            series.push(NormSeries::new(SeriesKind::Norm(*s)));
        }
        series.push(NormSeries::new(SeriesKind::Boundary(FieldKind::U)));
        series.push(NormSeries::new(SeriesKind::Boundary(FieldKind::B)));
        Ok(Self { series })
    }

    pub fn get(&self, kind: &SeriesKind) -> Option<&NormSeries> {
        self.series.iter().find(|s| &s.kind == kind)
    }

    pub fn by_name(&self, name: &str) -> Option<&NormSeries> {
        self.series.iter().find(|s| s.name() == name)
    }

    pub fn boundary(&self, kind: FieldKind) -> Option<&NormSeries> {
        self.get(&SeriesKind::Boundary(kind))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.series.iter().map(|s| s.name()));
        wr.write_record(&header)?;
        let rows = self.series.first().map_or(0, |s| s.len());
        for r in 0..rows {
            let t = self.series[0].samples[r].0;
            let mut rec = vec![format!("{t:.17e}")];
            for s in &self.series {
                rec.push(format!("{:.17e}", s.samples[r].1));
            }
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        if header.get(0).map(str::trim) != Some("t") {
            return Err(Error::Config("first CSV column must be t".into()));
        }
        let mut series: Vec<NormSeries> = header
            .iter()
            .skip(1)
            .map(|h| SeriesKind::parse(h.trim()).map(NormSeries::new))
            .collect::<Result<_>>()?;
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Config("short CSV row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad CSV number: {e}")))
            };
            let t = parse(0)?;
            for (i, s) in series.iter_mut().enumerate() {
                s.push(t, parse(i + 1)?)?;
            }
        }
        Ok(Self { series })
    }
}

/// Appends one sample per series at time `s.t`.
pub fn record_norms(s: &SimState, table: &mut NormTable) -> Result<()> {
    let omega = if table
        .series
        .iter()
        .any(|x| matches!(x.kind, SeriesKind::Norm(n) if n.field == FieldKind::Omega))
    {
        Some(vorticity(s))
    } else {
        None
    };
    for series in table.series.iter_mut() {
        let v = match series.kind {
            SeriesKind::Norm(spec) => {
                let f = match spec.field {
                    FieldKind::U => &s.u,
                    FieldKind::B => &s.b,
                    FieldKind::Omega => omega.as_ref().unwrap(),
                    FieldKind::Custom => {
                        return Err(Error::InvalidNormSpec("custom field in simulation table".into()))
                    }
                };
                weighted_norm(f, &spec, s.t)?
            }
            SeriesKind::Boundary(FieldKind::U) => boundary_fraction(&s.u, DEFAULT_SHELL),
            SeriesKind::Boundary(FieldKind::B) => boundary_fraction(&s.b, DEFAULT_SHELL),
            SeriesKind::Boundary(k) => {
                return Err(Error::InvalidNormSpec(format!("no boundary monitor for {k}")))
            }
        };
        series.push(s.t, v)?;
    }
    Ok(())
}
