use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by the validators.
///
/// Every field can be overridden from a JSON file; missing fields keep the
/// defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Hermiticity, max-norm of `A - A†`.
    pub herm: f64,
    /// Allowed negative eigenvalue for positivity checks.
    pub psd: f64,
    /// Allowed deviation of a density operator's trace from one.
    pub trace: f64,
    /// Unitarity defect `‖U†U - I‖_max` on exact (finite) systems.
    pub unitary: f64,
    /// Unitarity defect for truncated planar systems.
    pub unitary_planar: f64,
    /// Relative Cauchy tolerance between the last two domain sweeps.
    pub dom: f64,
    /// Final residual for quasicontinuity checks.
    pub qc: f64,
    /// Relative mass allowed to leave the window under a planar translation.
    pub mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            psd: 1e-9,
            trace: 1e-9,
            unitary: 1e-8,
            unitary_planar: 1e-6,
            dom: 1e-6,
            qc: 1e-6,
            mass: 1e-6,
        }
    }
}
