//! Lowest-order Raviart–Thomas basis on the unit cube and the W2 Piola map.

use nalgebra::{Matrix3, Vector3};

/// Local face slots in basis order.
pub const LOCAL_FACES: [&str; 6] = ["W", "E", "S", "N", "B", "T"];

/// Outward-oriented RT0 basis function of a local face slot at χ̂.
///
/// Each has unit flux through its own face, zero through the others and
/// reference divergence +1.
pub fn reference_basis(slot: usize, c: [f64; 3]) -> Vector3<f64> {
    match slot {
        0 => Vector3::new(-(1.0 - c[0]), 0.0, 0.0),
        1 => Vector3::new(c[0], 0.0, 0.0),
        2 => Vector3::new(0.0, -(1.0 - c[1]), 0.0),
        3 => Vector3::new(0.0, c[1], 0.0),
        4 => Vector3::new(0.0, 0.0, -(1.0 - c[2])),
        5 => Vector3::new(0.0, 0.0, c[2]),
        _ => panic!("local face slot {slot} out of range"),
    }
}

/// Physical vector v = J v̂ / det J.
pub fn piola_push_w2(v: &Vector3<f64>, j: &Matrix3<f64>, det: f64) -> Vector3<f64> {
    j * v / det
}

/// Pull-back v̂ = det J · J⁻¹ v.
pub fn piola_pull_w2(v: &Vector3<f64>, j: &Matrix3<f64>, det: f64) -> Vector3<f64> {
    j.try_inverse().expect("singular Jacobian") * v * det
}
