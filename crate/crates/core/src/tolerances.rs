/// Numerical thresholds used by every analysis step.
///
/// Stratum membership is decided up to these tolerances, so they are kept in
/// one place and surfaced in configuration files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Singular values below `rank * sigma_max` count as zero.
    pub rank: f64,
    /// Relative gap below which eigenvalue magnitudes are merged.
    pub cluster: f64,
    /// Relative finite-difference step for the differential of the type.
    pub fd_step: f64,
    /// Angular spread (radians) under which the secondary type is constant.
    pub beta_const: f64,
    /// Absolute bound on `theta(E_j)` for frame vectors.
    pub frame: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-9,
            cluster: 1e-7,
            fd_step: 1e-5,
            beta_const: 1e-6,
            frame: 1e-9,
        }
    }
}
