//! Gridded output files and binary checkpoints.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::constants::PhysicalConstants;
use crate::error::{DycoreError, Result};
use crate::fem::StateVector;

use super::latlon::{grid_latitude, grid_longitude, LatLonGrid};

const MAGIC: &[u8; 8] = b"DYCORECK";
const VERSION: u32 = 1;

/// One named field on `levels` levels, already interpolated: `data[level]` is nlat × nlon.
pub struct GriddedField {
    pub name: &'static str,
    pub data: Vec<Vec<f64>>,
}

/// Writes a text header followed by little-endian f64 values for every (field, level).
pub fn write_gridded(path: &Path, grid: &LatLonGrid, step: usize, time: f64, fields: &[GriddedField]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "dycore-grid 1")?;
    writeln!(w, "step {step}")?;
    writeln!(w, "time {time:?}")?;
    writeln!(w, "nlat {}", grid.nlat)?;
    writeln!(w, "nlon {}", grid.nlon)?;
    for f in fields {
        writeln!(w, "field {} {}", f.name, f.data.len())?;
    }
    writeln!(w, "end")?;
    for f in fields {
        for level in &f.data {
            for v in level {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Human-readable slices: one line per (field, level, lat, lon).
pub fn write_gridded_csv(path: &Path, grid: &LatLonGrid, fields: &[GriddedField]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "field,level,lat_deg,lon_deg,value")?;
    for f in fields {
        for (k, level) in f.data.iter().enumerate() {
            for i in 0..grid.nlat {
                for j in 0..grid.nlon {
                    let lat = grid_latitude(i, grid.nlat).to_degrees();
                    let lon = grid_longitude(j, grid.nlon).to_degrees();
                    writeln!(w, "{},{k},{lat:.4},{lon:.4},{:e}", f.name, level[i * grid.nlon + j])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Header of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub n: usize,
    pub layers: usize,
    pub radius: f64,
    pub constants: PhysicalConstants,
    pub step: usize,
}

pub fn write_checkpoint(path: &Path, h: &CheckpointHeader, x: &StateVector) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [h.n as u64, h.layers as u64, h.step as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    let c = &h.constants;
    for v in [h.radius, c.radius, c.omega, c.gravity, c.rd, c.cp, c.p0] {
        w.write_all(&v.to_le_bytes())?;
    }
    for field in [&x.u, &x.rho, &x.theta, &x.exner] {
        w.write_all(&(field.len() as u64).to_le_bytes())?;
        for v in field.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize>(buf: &[u8], pos: &mut usize) -> Result<[u8; N]> {
    let end = *pos + N;
    let bytes = buf.get(*pos..end).ok_or_else(|| DycoreError::Checkpoint("file is truncated".into()))?;
    *pos = end;
    Ok(bytes.try_into().unwrap())
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointHeader, StateVector)> {
    let mut buf = Vec::new();
    File::open(path)?.read_to_end(&mut buf)?;
    let mut pos = 0;
    if &take::<8>(&buf, &mut pos)? != MAGIC {
        return Err(DycoreError::Checkpoint("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(take(&buf, &mut pos)?);
    if version != VERSION {
        return Err(DycoreError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut u64s = [0usize; 3];
    for v in u64s.iter_mut() {
        *v = u64::from_le_bytes(take(&buf, &mut pos)?) as usize;
    }
    let mut f = [0.0; 7];
    for v in f.iter_mut() {
        *v = f64::from_le_bytes(take(&buf, &mut pos)?);
    }
    let constants = PhysicalConstants { radius: f[1], omega: f[2], gravity: f[3], rd: f[4], cp: f[5], p0: f[6] };
    let mut fields: Vec<Vec<f64>> = Vec::with_capacity(4);
    for _ in 0..4 {
        let len = u64::from_le_bytes(take(&buf, &mut pos)?) as usize;
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push(f64::from_le_bytes(take(&buf, &mut pos)?));
        }
        fields.push(v);
    }
    if pos != buf.len() {
        return Err(DycoreError::Checkpoint("trailing bytes after the state".into()));
    }
    let exner = fields.pop().unwrap();
    let theta = fields.pop().unwrap();
    let rho = fields.pop().unwrap();
    let u = fields.pop().unwrap();
    let header = CheckpointHeader { n: u64s[0], layers: u64s[1], step: u64s[2], radius: f[0], constants };
    Ok((header, StateVector { u, rho, theta, exner }))
}
