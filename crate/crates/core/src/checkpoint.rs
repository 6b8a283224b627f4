//! Binary checkpoints of a [`SimState`].
//!
//! Layout: 8 magic bytes, a little-endian `u64` header length, a JSON header
//! with grid metadata, parameters and time, then the spectral coefficients of
//! `u` and `B` as little-endian `f64` pairs `(re, im)`, component by component.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{HallMhdParams, SimState};
use crate::error::{Error, Result};
use crate::field::{Components, Field};
use crate::grid::make_grid;

const MAGIC: &[u8; 8] = b"HMHDCKP1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    n: usize,
    l: f64,
    t: f64,
    params: HallMhdParams,
    fields: Vec<String>,
}

pub fn write_checkpoint(path: &Path, s: &SimState) -> Result<()> {
    let grid = s.grid();
    let header = Header {
        format_version: 1,
        n: grid.n(),
        l: grid.len(),
        t: s.t,
        params: s.params,
        fields: vec!["u".into(), "B".into()],
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for f in [&s.u, &s.b] {
        for comp in f.spectral_view().iter() {
            for z in comp {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_checkpoint(path: &Path) -> Result<SimState> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(Error::Checkpoint(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    if header.format_version != 1 {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let grid = make_grid(header.n, header.l)?;
    let mut read_field = || -> Result<Field> {
        let mut comps: Components<Complex64> = Default::default();
        for c in comps.iter_mut() {
            c.reserve_exact(grid.size());
            for _ in 0..grid.size() {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                c.push(Complex64::new(re, im));
            }
        }
        Field::from_spectral(&grid, comps)
    };
    let u = read_field()?;
    let b = read_field()?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    SimState::new(u, b, header.t, header.params)
}
