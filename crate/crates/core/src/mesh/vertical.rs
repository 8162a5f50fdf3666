//! Vertical extrusion: stretching functions and terrain-following level heights.

use crate::error::{DycoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerticalKind {
    Uniform,
    /// Quadratic stretching with parameter γ.
    Quadratic { gamma: f64 },
}

/// Model top, number of layers and stretching of the vertical mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalMeshSpec {
    pub kind: VerticalKind,
    /// Model top height z_T (m).
    pub top: f64,
    pub layers: usize,
}

impl VerticalMeshSpec {
    pub fn uniform(top: f64, layers: usize) -> Self {
        Self { kind: VerticalKind::Uniform, top, layers }
    }

    pub fn quadratic(top: f64, layers: usize, gamma: f64) -> Self {
        Self { kind: VerticalKind::Quadratic { gamma }, top, layers }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.top > 0.0) {
            return Err(DycoreError::Config(format!("model top must be positive, got {}", self.top)));
        }
        if self.layers == 0 {
            return Err(DycoreError::Config("at least one vertical layer is required".into()));
        }
        if let VerticalKind::Quadratic { gamma } = self.kind {
            if !(gamma > 0.0) {
                return Err(DycoreError::Config(format!("stretching γ must be positive, got {gamma}")));
            }
        }
        Ok(())
    }

    /// Non-dimensional level position ε_k, 0 at the surface and 1 at the top.
    pub fn epsilon(&self, k: usize) -> f64 {
        stretching(self.kind, k as f64 / self.layers as f64)
    }

    /// Level heights z_0..z_m above the sphere for a column with surface height `surface`.
    pub fn level_heights(&self, surface: f64) -> Result<Vec<f64>> {
        if !(surface >= 0.0 && surface < self.top) {
            return Err(DycoreError::DegenerateColumn { column: 0, surface, top: self.top });
        }
        Ok((0..=self.layers)
            .map(|k| {
                let e = self.epsilon(k);
                self.top * e + surface * (1.0 - e)
            })
            .collect())
    }
}

/// ε as a function of the fractional level index k/n.
pub fn stretching(kind: VerticalKind, frac: f64) -> f64 {
    match kind {
        VerticalKind::Uniform => frac,
        VerticalKind::Quadratic { gamma } => ((gamma * frac * frac + 1.0).sqrt() - 1.0) / ((gamma + 1.0).sqrt() - 1.0),
    }
}

/// Level heights for every column; errors name the offending column.
pub fn build_vertical_levels(spec: &VerticalMeshSpec, surfaces: &[f64]) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    surfaces
        .iter()
        .enumerate()
        .map(|(column, &zb)| {
            spec.level_heights(zb).map_err(|e| match e {
                DycoreError::DegenerateColumn { surface, top, .. } => DycoreError::DegenerateColumn { column, surface, top },
                other => other,
            })
        })
        .collect()
}
