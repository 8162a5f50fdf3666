//! Advective increments, fluxes, substepped Runge–Kutta stages, Strang splitting and
//! the advective-then-flux update.

use rayon::prelude::*;

use super::{FvGrid, GridWind, TransportConfig, VerticalStencils};
use crate::error::{DycoreError, Result};
use crate::mesh::Side;

/// Split direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Horizontal,
    Vertical,
}

impl Direction {
    fn name(self) -> &'static str {
        match self {
            Direction::Horizontal => "horizontal",
            Direction::Vertical => "vertical",
        }
    }
}

/// Result of a conservative step.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTransport {
    pub s: Vec<f64>,
    /// Σ of the outward time-integrated fluxes of every volume, so that s = s^p − divergence / V.
    pub divergence: Vec<f64>,
    pub substeps_horizontal: usize,
    pub substeps_vertical: usize,
}

fn vstencils(grid: &FvGrid) -> Result<&VerticalStencils> {
    grid.vertical.as_ref().map_err(|e| DycoreError::Config(e.clone()))
}

/// Face value at the `side` face of upwind column `col`, level `k`.
pub fn reconstruct_horizontal(grid: &FvGrid, s: &[f64], col: usize, side: Side, k: usize) -> f64 {
    grid.horizontal.value(s, grid.nlev, col, side, k)
}

/// Face value at interface `j` of a column from the volume below or above it.
pub fn reconstruct_vertical(grid: &FvGrid, s: &[f64], col: usize, j: usize, from_above: bool) -> Result<f64> {
    Ok(vstencils(grid)?.value(s, col, j, from_above))
}

/// Upwinded horizontal fluxes û š per side face; a zero wind takes the edge's first column.
pub fn horizontal_fluxes(grid: &FvGrid, wind: &GridWind, s: &[f64]) -> Vec<f64> {
    let nlev = grid.nlev;
    (0..grid.nedges() * nlev)
        .into_par_iter()
        .map(|i| {
            let (e, k) = (i / nlev, i % nlev);
            let f = wind.side[i];
            if f == 0.0 {
                return 0.0;
            }
            let edge = &grid.edges[e];
            let v = if f > 0.0 {
                grid.horizontal.value(s, nlev, edge.a, edge.side_a, k)
            } else {
                grid.horizontal.value(s, nlev, edge.b, edge.side_b, k)
            };
            f * v
        })
        .collect()
}

/// Upwinded vertical fluxes per interface; zero at the top and bottom.
pub fn vertical_fluxes(grid: &FvGrid, wind: &GridWind, s: &[f64]) -> Vec<f64> {
    let nlev = grid.nlev;
    let vs = grid.vertical.as_ref().ok();
    (0..grid.ncol * (nlev + 1))
        .into_par_iter()
        .map(|i| {
            let (col, j) = (i / (nlev + 1), i % (nlev + 1));
            let w = wind.vertical[i];
            if w == 0.0 || j == 0 || j == nlev {
                return 0.0;
            }
            let v = match vs {
                Some(vs) => vs.value(s, col, j, w < 0.0),
                // first-order upwind when no high-order stencil fits the column
                None => s[col * nlev + if w < 0.0 { j } else { j - 1 }],
            };
            w * v
        })
        .collect()
}

/// (1/V) Σ signed face fluxes for every volume.
pub fn flux_divergence(grid: &FvGrid, side: Option<&[f64]>, vertical: Option<&[f64]>) -> Vec<f64> {
    let nlev = grid.nlev;
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (col, k) = (i / nlev, i % nlev);
            let mut d = 0.0;
            if let Some(fs) = side {
                for &(e, sign) in &grid.column_edges[col] {
                    d += sign * fs[e * nlev + k];
                }
            }
            if let Some(fv) = vertical {
                let base = col * (nlev + 1);
                d += fv[base + k + 1] - fv[base + k];
            }
            d / grid.volumes[i]
        })
        .collect()
}

/// Advective increment 𝓐 = (1/V) Σ_dir û_dir (š₊ − š₋) for one split direction,
/// with optional bounds over the stencil cells used.
fn increment(
    grid: &FvGrid,
    wind: &GridWind,
    s: &[f64],
    dir: Direction,
    with_bounds: bool,
) -> Result<(Vec<f64>, Vec<(f64, f64)>)> {
    let nlev = grid.nlev;
    let hs = &grid.horizontal;
    let vs = match dir {
        Direction::Vertical => Some(vstencils(grid)?),
        Direction::Horizontal => None,
    };
    let out: Vec<(f64, (f64, f64))> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (col, k) = (i / nlev, i % nlev);
            let mut a = 0.0;
            let mut lo = s[i];
            let mut hi = s[i];
            let mut widen = |b: (f64, f64)| {
                lo = lo.min(b.0);
                hi = hi.max(b.1);
            };
            match vs {
                None => {
                    let ce = &grid.column_edges[col];
                    let nb = &grid.neighbours[col];
                    for (minus, plus) in [(Side::W, Side::E), (Side::S, Side::N)] {
                        let (em, sm) = ce[minus.index()];
                        let (ep, sp) = ce[plus.index()];
                        let u = 0.5 * (sp * wind.side[ep * nlev + k] - sm * wind.side[em * nlev + k]);
                        if u == 0.0 {
                            continue;
                        }
                        let (vp, vm) = if u > 0.0 {
                            let (c, entry) = nb[minus.index()];
                            if with_bounds {
                                widen(hs.bounds(s, nlev, col, k));
                                widen(hs.bounds(s, nlev, c, k));
                            }
                            (hs.value(s, nlev, col, plus, k), hs.value(s, nlev, c, entry, k))
                        } else {
                            let (c, entry) = nb[plus.index()];
                            if with_bounds {
                                widen(hs.bounds(s, nlev, col, k));
                                widen(hs.bounds(s, nlev, c, k));
                            }
                            (hs.value(s, nlev, c, entry, k), hs.value(s, nlev, col, minus, k))
                        };
                        a += u * (vp - vm);
                    }
                }
                Some(vs) => {
                    let base = col * (nlev + 1);
                    let u = 0.5 * (wind.vertical[base + k + 1] + wind.vertical[base + k]);
                    if u != 0.0 {
                        let above = u < 0.0;
                        if with_bounds {
                            widen(vs.bounds(s, col, k + 1, above));
                            widen(vs.bounds(s, col, k, above));
                        }
                        a += u * (vs.value(s, col, k + 1, above) - vs.value(s, col, k, above));
                    }
                }
            }
            (a / grid.volumes[i], (lo, hi))
        })
        .collect();
    Ok(out.into_iter().unzip())
}

/// Advective increment of one split direction.
pub fn advective_increment(grid: &FvGrid, wind: &GridWind, s: &[f64], dir: Direction) -> Result<Vec<f64>> {
    Ok(increment(grid, wind, s, dir, false)?.0)
}

/// Clamps every value into its bounds.
pub fn clip_monotone(s: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in s.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Largest horizontal and vertical Courant numbers for a step of length `dt`.
pub fn courant_numbers(grid: &FvGrid, wind: &GridWind, dt: f64) -> (f64, f64) {
    let nlev = grid.nlev;
    let per_cell: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (col, k) = (i / nlev, i % nlev);
            let ce = &grid.column_edges[col];
            let mut h = 0.0;
            for (minus, plus) in [(Side::W, Side::E), (Side::S, Side::N)] {
                let (em, sm) = ce[minus.index()];
                let (ep, sp) = ce[plus.index()];
                let op = sp * wind.side[ep * nlev + k];
                let om = sm * wind.side[em * nlev + k];
                h += op.max(om).max(0.0);
            }
            let base = col * (nlev + 1);
            let v = wind.vertical[base + k + 1].max(-wind.vertical[base + k]).max(0.0);
            (h * dt / grid.volumes[i], v * dt / grid.volumes[i])
        })
        .collect();
    per_cell.iter().fold((0.0f64, 0.0f64), |(a, b), &(h, v)| (a.max(h), b.max(v)))
}

/// ceil(C / C_max), at least 1, or a CFL error above the cap.
pub fn substeps(courant: f64, cmax: f64, cap: usize, dir: Direction) -> Result<usize> {
    let n = ((courant / cmax).ceil() as usize).max(1);
    if n > cap || !courant.is_finite() {
        return Err(DycoreError::Cfl { direction: dir.name(), courant, substeps: n, cap });
    }
    Ok(n)
}

/// Accumulated time-weighted fluxes of a conservative step.
struct FluxSum {
    side: Vec<f64>,
    vertical: Vec<f64>,
}

/// One split stage: `nsub` Runge–Kutta substeps of the advective form in direction `dir`.
fn integrate(
    grid: &FvGrid,
    wind: &GridWind,
    s: &mut Vec<f64>,
    dt: f64,
    dir: Direction,
    nsub: usize,
    cfg: &TransportConfig,
    mut fluxes: Option<&mut FluxSum>,
) -> Result<()> {
    let h = dt / nsub as f64;
    let rk = &cfg.tableau;
    for _ in 0..nsub {
        let s0 = s.clone();
        let mut incs: Vec<Vec<f64>> = Vec::with_capacity(rk.stages());
        let mut bounds = Vec::new();
        for i in 0..rk.stages() {
            let si: Vec<f64> = if i == 0 {
                s0.clone()
            } else {
                (0..s0.len()).map(|c| s0[c] - h * rk.a[i].iter().zip(&incs).map(|(a, inc)| a * inc[c]).sum::<f64>()).collect()
            };
            let (inc, b) = increment(grid, wind, &si, dir, i == 0 && cfg.monotone)?;
            if i == 0 {
                bounds = b;
            }
            if let Some(acc) = fluxes.as_deref_mut() {
                let w = rk.b[i] * h;
                match dir {
                    Direction::Horizontal => {
                        for (a, f) in acc.side.iter_mut().zip(horizontal_fluxes(grid, wind, &si)) {
                            *a += w * f;
                        }
                    }
                    Direction::Vertical => {
                        for (a, f) in acc.vertical.iter_mut().zip(vertical_fluxes(grid, wind, &si)) {
                            *a += w * f;
                        }
                    }
                }
            }
            incs.push(inc);
        }
        for (c, v) in s.iter_mut().enumerate() {
            *v = s0[c] - h * rk.b.iter().zip(&incs).map(|(b, inc)| b * inc[c]).sum::<f64>();
        }
        if cfg.monotone {
            clip_monotone(s, &bounds);
        }
    }
    Ok(())
}

fn split_counts(grid: &FvGrid, wind: &GridWind, dt: f64, cfg: &TransportConfig) -> Result<(usize, Option<usize>)> {
    let (ch, cv) = courant_numbers(grid, wind, dt);
    let nh = substeps(ch, cfg.cmax_horizontal, cfg.max_substeps, Direction::Horizontal)?;
    let nv = if wind.vertical_is_zero() {
        None
    } else {
        vstencils(grid)?;
        Some(substeps(0.5 * cv, cfg.cmax_vertical, cfg.max_substeps, Direction::Vertical)?)
    };
    Ok((nh, nv))
}

/// Strang-split advective step: vertical half, horizontal full, vertical half.
/// The vertical stages are skipped when the vertical wind is identically zero.
pub fn strang_advect(grid: &FvGrid, wind: &GridWind, s: &[f64], dt: f64, cfg: &TransportConfig) -> Result<Vec<f64>> {
    let (nh, nv) = split_counts(grid, wind, dt, cfg)?;
    let mut out = s.to_vec();
    if let Some(nv) = nv {
        integrate(grid, wind, &mut out, 0.5 * dt, Direction::Vertical, nv, cfg, None)?;
    }
    integrate(grid, wind, &mut out, dt, Direction::Horizontal, nh, cfg, None)?;
    if let Some(nv) = nv {
        integrate(grid, wind, &mut out, 0.5 * dt, Direction::Vertical, nv, cfg, None)?;
    }
    Ok(out)
}

/// Same as [`strang_advect`].
pub fn advect(grid: &FvGrid, wind: &GridWind, s: &[f64], dt: f64, cfg: &TransportConfig) -> Result<Vec<f64>> {
    strang_advect(grid, wind, s, dt, cfg)
}

/// Conservative step: advective Runge–Kutta stages inside the Strang split, with the
/// final update the divergence of the accumulated stage fluxes.
pub fn advect_then_flux(grid: &FvGrid, wind: &GridWind, s: &[f64], dt: f64, cfg: &TransportConfig) -> Result<FluxTransport> {
    let (nh, nv) = split_counts(grid, wind, dt, cfg)?;
    let mut acc = FluxSum { side: vec![0.0; wind.side.len()], vertical: vec![0.0; wind.vertical.len()] };
    let mut work = s.to_vec();
    if let Some(nv) = nv {
        integrate(grid, wind, &mut work, 0.5 * dt, Direction::Vertical, nv, cfg, Some(&mut acc))?;
    }
    integrate(grid, wind, &mut work, dt, Direction::Horizontal, nh, cfg, Some(&mut acc))?;
    if let Some(nv) = nv {
        integrate(grid, wind, &mut work, 0.5 * dt, Direction::Vertical, nv, cfg, Some(&mut acc))?;
    }
    let div = flux_divergence(grid, Some(&acc.side), nv.map(|_| acc.vertical.as_slice()));
    let divergence: Vec<f64> = div.iter().zip(&grid.volumes).map(|(d, v)| d * v).collect();
    let out = s.iter().zip(&div).map(|(sp, d)| sp - d).collect();
    Ok(FluxTransport { s: out, divergence, substeps_horizontal: nh, substeps_vertical: nv.unwrap_or(0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substep_counts() {
        assert_eq!(substeps(0.4, 1.0, 10, Direction::Horizontal).unwrap(), 1);
        assert_eq!(substeps(2.5, 1.0, 10, Direction::Horizontal).unwrap(), 3);
        assert_eq!(substeps(0.0, 1.0, 10, Direction::Vertical).unwrap(), 1);
        assert!(matches!(
            substeps(25.0, 1.0, 10, Direction::Vertical),
            Err(DycoreError::Cfl { direction: "vertical", substeps: 25, .. })
        ));
    }

    #[test]
    fn clipping_only_touches_overshoots() {
        let mut s = vec![0.5, 1.5, -0.2];
        clip_monotone(&mut s, &[(0.0, 1.0); 3]);
        assert_eq!(s, vec![0.5, 1.0, 0.0]);
    }
}
