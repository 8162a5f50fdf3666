//! Planet and gas constants.

/// Physical constants shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planet radius (m).
    pub radius: f64,
    /// Rotation rate about the polar (Z) axis (s⁻¹).
    pub omega: f64,
    /// Gravitational acceleration (m s⁻²).
    pub gravity: f64,
    /// Gas constant for dry air (J kg⁻¹ K⁻¹).
    pub rd: f64,
    /// Specific heat at constant pressure (J kg⁻¹ K⁻¹).
    pub cp: f64,
    /// Reference pressure (Pa).
    pub p0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { radius: 6_371_229.0, omega: 7.292e-5, gravity: 9.80616, rd: 287.05, cp: 1005.0, p0: 1.0e5 }
    }
}

impl PhysicalConstants {
    /// κ = R / c_p.
    pub fn kappa(&self) -> f64 {
        self.rd / self.cp
    }

    /// Exponent (1 − κ)/κ of the Exner pressure in the equation of state.
    pub fn eos_exponent(&self) -> f64 {
        (1.0 - self.kappa()) / self.kappa()
    }

    /// Exner pressure from pressure.
    pub fn exner(&self, p: f64) -> f64 {
        (p / self.p0).powf(self.kappa())
    }

    /// Pressure from Exner pressure.
    pub fn pressure(&self, exner: f64) -> f64 {
        self.p0 * exner.powf(1.0 / self.kappa())
    }

    /// Density consistent with the equation of state, Π^{(1−κ)/κ} = (R/p₀) ρ θ.
    pub fn density(&self, exner: f64, theta: f64) -> f64 {
        self.p0 * exner.powf(self.eos_exponent()) / (self.rd * theta)
    }

    /// Rotation vector Ω along +Z.
    pub fn rotation_vector(&self) -> [f64; 3] {
        [0.0, 0.0, self.omega]
    }
}
