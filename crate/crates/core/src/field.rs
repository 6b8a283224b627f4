//! Vector and scalar fields on a [`Grid`], in either physical or spectral form.

use std::borrow::Cow;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Repr {
    Physical,
    Spectral,
}

pub type Components<T> = [Vec<T>; 3];

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Physical(Components<f64>),
    Spectral(Components<Complex64>),
}

/// A three-component vector field.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    data: FieldData,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarData {
    Physical(Vec<f64>),
    Spectral(Vec<Complex64>),
}

/// A single scalar lattice.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    data: ScalarData,
}

fn check_len<T>(grid: &Grid, v: &[T]) -> Result<()> {
    if v.len() != grid.size() {
        return Err(Error::InvalidGrid(format!(
            "lattice has {} values, grid expects {}",
            v.len(),
            grid.size()
        )));
    }
    Ok(())
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>, repr: Repr) -> Self {
        let n = grid.size();
        let data = match repr {
            Repr::Physical => FieldData::Physical([vec![0.0; n], vec![0.0; n], vec![0.0; n]]),
            Repr::Spectral => {
                let z = Complex64::default();
                FieldData::Spectral([vec![z; n], vec![z; n], vec![z; n]])
            }
        };
        Self {
            grid: grid.clone(),
            data,
        }
    }

    pub fn from_physical(grid: &Arc<Grid>, comps: Components<f64>) -> Result<Self> {
        for c in &comps {
            check_len(grid, c)?;
        }
        Ok(Self {
            grid: grid.clone(),
            data: FieldData::Physical(comps),
        })
    }

    pub fn from_spectral(grid: &Arc<Grid>, comps: Components<Complex64>) -> Result<Self> {
        for c in &comps {
            check_len(grid, c)?;
        }
        Ok(Self {
            grid: grid.clone(),
            data: FieldData::Spectral(comps),
        })
    }

    /// Samples `f(x, y, z)` at every lattice point.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let n = grid.n();
        let c = grid.coords();
        let mut comps: Components<f64> = Default::default();
        for v in comps.iter_mut() {
            v.reserve_exact(grid.size());
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = f(c[i], c[j], c[k]);
                    for d in 0..3 {
                        comps[d].push(v[d]);
                    }
                }
            }
        }
        Self {
            grid: grid.clone(),
            data: FieldData::Physical(comps),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn data(&self) -> &FieldData {
        &self.data
    }

    pub fn repr(&self) -> Repr {
        match self.data {
            FieldData::Physical(_) => Repr::Physical,
            FieldData::Spectral(_) => Repr::Spectral,
        }
    }

    pub fn physical(&self) -> Result<&Components<f64>> {
        match &self.data {
            FieldData::Physical(c) => Ok(c),
            FieldData::Spectral(_) => Err(Error::WrongRepr {
                expected: Repr::Physical,
                found: Repr::Spectral,
            }),
        }
    }

    pub fn spectral(&self) -> Result<&Components<Complex64>> {
        match &self.data {
            FieldData::Spectral(c) => Ok(c),
            FieldData::Physical(_) => Err(Error::WrongRepr {
                expected: Repr::Spectral,
                found: Repr::Physical,
            }),
        }
    }

    pub fn spectral_mut(&mut self) -> Result<&mut Components<Complex64>> {
        match &mut self.data {
            FieldData::Spectral(c) => Ok(c),
            FieldData::Physical(_) => Err(Error::WrongRepr {
                expected: Repr::Spectral,
                found: Repr::Physical,
            }),
        }
    }

    pub fn physical_mut(&mut self) -> Result<&mut Components<f64>> {
        match &mut self.data {
            FieldData::Physical(c) => Ok(c),
            FieldData::Spectral(_) => Err(Error::WrongRepr {
                expected: Repr::Physical,
                found: Repr::Spectral,
            }),
        }
    }

    /// Forward transform; the field must be physical.
    pub fn to_spectral(&self) -> Result<Field> {
        let c = self.physical()?;
        let mut out = fft::forward_real_batch(&self.grid, &[&c[0], &c[1], &c[2]]).into_iter();
        let comps = [out.next().unwrap(), out.next().unwrap(), out.next().unwrap()];
        Ok(Self {
            grid: self.grid.clone(),
            data: FieldData::Spectral(comps),
        })
    }

    /// Inverse transform; the field must be spectral.
    pub fn to_physical(&self) -> Result<Field> {
        let c = self.spectral()?;
        let mut out = fft::inverse_real_batch(&self.grid, &[&c[0], &c[1], &c[2]]).into_iter();
        let comps = [out.next().unwrap(), out.next().unwrap(), out.next().unwrap()];
        Ok(Self {
            grid: self.grid.clone(),
            data: FieldData::Physical(comps),
        })
    }

    /// Spectral coefficients, transforming if needed.
    pub fn spectral_view(&self) -> Cow<'_, Components<Complex64>> {
        match &self.data {
            FieldData::Spectral(c) => Cow::Borrowed(c),
            FieldData::Physical(_) => match self.to_spectral().unwrap().data {
                FieldData::Spectral(c) => Cow::Owned(c),
                FieldData::Physical(_) => unreachable!(),
            },
        }
    }

    /// Physical values, transforming if needed.
    pub fn physical_view(&self) -> Cow<'_, Components<f64>> {
        match &self.data {
            FieldData::Physical(c) => Cow::Borrowed(c),
            FieldData::Spectral(_) => match self.to_physical().unwrap().data {
                FieldData::Physical(c) => Cow::Owned(c),
                FieldData::Spectral(_) => unreachable!(),
            },
        }
    }

    pub fn into_spectral(self) -> Field {
        match self.data {
            FieldData::Spectral(_) => self,
            FieldData::Physical(_) => self.to_spectral().unwrap(),
        }
    }

    pub fn into_physical(self) -> Field {
        match self.data {
            FieldData::Physical(_) => self,
            FieldData::Spectral(_) => self.to_physical().unwrap(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.data {
            FieldData::Physical(c) => c.iter().all(|v| v.iter().all(|x| x.is_finite())),
            FieldData::Spectral(c) => c
                .iter()
                .all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite())),
        }
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Multiplies every value by `s`.
    pub fn scaled(&self, s: f64) -> Field {
        let data = match &self.data {
            FieldData::Physical(c) => {
                FieldData::Physical(c.clone().map(|v| v.into_iter().map(|x| x * s).collect()))
            }
            FieldData::Spectral(c) => {
                FieldData::Spectral(c.clone().map(|v| v.into_iter().map(|x| x * s).collect()))
            }
        };
        Field {
            grid: self.grid.clone(),
            data,
        }
    }

    /// `self + s * other`; both fields must share grid and representation.
    pub fn axpy(&self, s: f64, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let data = match (&self.data, &other.data) {
            (FieldData::Physical(a), FieldData::Physical(b)) => FieldData::Physical(
                std::array::from_fn(|d| a[d].iter().zip(&b[d]).map(|(x, y)| x + s * y).collect()),
            ),
            (FieldData::Spectral(a), FieldData::Spectral(b)) => FieldData::Spectral(
                std::array::from_fn(|d| a[d].iter().zip(&b[d]).map(|(x, y)| x + y * s).collect()),
            ),
            _ => {
                return Err(Error::WrongRepr {
                    expected: self.repr(),
                    found: other.repr(),
                })
            }
        };
        Ok(Field {
            grid: self.grid.clone(),
            data,
        })
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        let p = self.physical_view();
        (0..self.grid.size())
            .map(|i| (p[0][i] * p[0][i] + p[1][i] * p[1][i] + p[2][i] * p[2][i]).sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest absolute component value (cheaper proxy used by step control).
    pub fn max_abs_component(&self) -> f64 {
        let p = self.physical_view();
        p.iter()
            .flat_map(|v| v.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl ScalarField {
    pub fn from_physical(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        check_len(grid, &values)?;
        Ok(Self {
            grid: grid.clone(),
            data: ScalarData::Physical(values),
        })
    }

    pub fn from_spectral(grid: &Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        check_len(grid, &values)?;
        Ok(Self {
            grid: grid.clone(),
            data: ScalarData::Spectral(values),
        })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let n = grid.n();
        let c = grid.coords();
        let mut v = Vec::with_capacity(grid.size());
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    v.push(f(c[i], c[j], c[k]));
                }
            }
        }
        Self {
            grid: grid.clone(),
            data: ScalarData::Physical(v),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn repr(&self) -> Repr {
        match self.data {
            ScalarData::Physical(_) => Repr::Physical,
            ScalarData::Spectral(_) => Repr::Spectral,
        }
    }

    pub fn physical(&self) -> Result<&[f64]> {
        match &self.data {
            ScalarData::Physical(v) => Ok(v),
            ScalarData::Spectral(_) => Err(Error::WrongRepr {
                expected: Repr::Physical,
                found: Repr::Spectral,
            }),
        }
    }

    pub fn spectral(&self) -> Result<&[Complex64]> {
        match &self.data {
            ScalarData::Spectral(v) => Ok(v),
            ScalarData::Physical(_) => Err(Error::WrongRepr {
                expected: Repr::Spectral,
                found: Repr::Physical,
            }),
        }
    }

    pub fn to_spectral(&self) -> Result<ScalarField> {
        let v = self.physical()?;
        let out = fft::forward_real_batch(&self.grid, &[v]).pop().unwrap();
        Ok(Self {
            grid: self.grid.clone(),
            data: ScalarData::Spectral(out),
        })
    }

    pub fn to_physical(&self) -> Result<ScalarField> {
        let v = self.spectral()?;
        let out = fft::inverse_real_batch(&self.grid, &[v]).pop().unwrap();
        Ok(Self {
            grid: self.grid.clone(),
            data: ScalarData::Physical(out),
        })
    }

    pub fn physical_view(&self) -> Cow<'_, [f64]> {
        match &self.data {
            ScalarData::Physical(v) => Cow::Borrowed(v),
            ScalarData::Spectral(_) => Cow::Owned(self.to_physical().unwrap().physical().unwrap().to_vec()),
        }
    }

    pub fn spectral_view(&self) -> Cow<'_, [Complex64]> {
        match &self.data {
            ScalarData::Spectral(v) => Cow::Borrowed(v),
            ScalarData::Physical(_) => Cow::Owned(self.to_spectral().unwrap().spectral().unwrap().to_vec()),
        }
    }

    /// Embeds the scalar as component `axis` of an otherwise zero vector field.
    pub fn embed(&self, axis: usize) -> Field {
        let n = self.grid.size();
        match &self.data {
            ScalarData::Physical(v) => {
                let mut c: Components<f64> = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
                c[axis] = v.clone();
                Field::from_physical(&self.grid, c).unwrap()
            }
            ScalarData::Spectral(v) => {
                let z = Complex64::default();
                let mut c: Components<Complex64> = [vec![z; n], vec![z; n], vec![z; n]];
                c[axis] = v.clone();
                Field::from_spectral(&self.grid, c).unwrap()
            }
        }
    }
}

/// Physical values of several spectral fields, transforming all components
/// together so they pair up in the packed real transforms.
pub fn physical_many(fields: &[&Field]) -> Vec<Components<f64>> {
    let mut spectral: Vec<Cow<'_, Components<Complex64>>> = Vec::new();
    let mut owned_physical: Vec<Option<&Components<f64>>> = Vec::new();
    for f in fields {
        match f.data() {
            FieldData::Physical(c) => owned_physical.push(Some(c)),
            FieldData::Spectral(c) => {
                owned_physical.push(None);
                spectral.push(Cow::Borrowed(c));
            }
        }
    }
    let refs: Vec<&[Complex64]> = spectral.iter().flat_map(|c| c.iter().map(|v| v.as_slice())).collect();
    let mut transformed = fft::inverse_real_batch(fields[0].grid(), &refs).into_iter();
    owned_physical
        .into_iter()
        .map(|p| match p {
            Some(c) => c.clone(),
            None => [
                transformed.next().unwrap(),
                transformed.next().unwrap(),
                transformed.next().unwrap(),
            ],
        })
        .collect()
}

/// Physical values of several spectral component triples, batched.
pub(crate) fn coeffs_to_physical(grid: &Grid, comps: &[&Components<Complex64>]) -> Vec<Components<f64>> {
    let refs: Vec<&[Complex64]> = comps.iter().flat_map(|c| c.iter().map(|v| v.as_slice())).collect();
    let mut out = fft::inverse_real_batch(grid, &refs).into_iter();
    comps
        .iter()
        .map(|_| [out.next().unwrap(), out.next().unwrap(), out.next().unwrap()])
        .collect()
}

/// Spectral coefficients of several physical component triples, batched.
pub fn spectral_many(grid: &Grid, comps: &[&Components<f64>]) -> Vec<Components<Complex64>> {
    let refs: Vec<&[f64]> = comps.iter().flat_map(|c| c.iter().map(|v| v.as_slice())).collect();
    let mut out = fft::forward_real_batch(grid, &refs).into_iter();
    comps
        .iter()
        .map(|_| [out.next().unwrap(), out.next().unwrap(), out.next().unwrap()])
        .collect()
}
