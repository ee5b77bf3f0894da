//! Displacement operators in the truncated harmonic-oscillator basis.

use nalgebra::{DMatrix, DVector};

use crate::operator::C64;

/// Complex amplitude of the phase-space point `(q, p)` under the identification
/// `W(q, p) = D((-q + i p) / √2)`. With this choice
/// `W(x) W(y) = exp(i/2 (q p' - p q')) W(x + y)` and
/// `|⟨0|W(q, p)|0⟩|² = exp(-(q² + p²)/2)`.
pub fn phase_space_to_alpha(q: f64, p: f64) -> C64 {
    C64::new(-q, p) * std::f64::consts::FRAC_1_SQRT_2
}

/// `⟨m|D(α)|0⟩` for `m < dim` (a truncated coherent state).
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[0] = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for m in 1..dim {
        v[m] = v[m - 1] * alpha / (m as f64).sqrt();
    }
    v
}

/// The `dim x dim` upper-left block of `D(α) = exp(α a† - α* a)`.
///
/// Entries are the exact matrix elements of the untruncated operator, built
/// column by column from `⟨m|D|n⟩ = (√m ⟨m-1|D|n-1⟩ - α* ⟨m|D|n-1⟩) / √n`,
/// which follows from `D a† = (a† - α*) D`.
pub fn displacement_matrix(alpha: C64, dim: usize) -> DMatrix<C64> {
    let mut d = DMatrix::zeros(dim, dim);
    d.set_column(0, &coherent_amplitudes(alpha, dim));
    let ac = alpha.conj();
    let sqrt: Vec<f64> = (0..dim).map(|k| (k as f64).sqrt()).collect();
    for n in 1..dim {
        for m in 0..dim {
            let up = if m > 0 {
                d[(m - 1, n - 1)] * sqrt[m]
            } else {
                C64::new(0.0, 0.0)
            };
            d[(m, n)] = (up - ac * d[(m, n - 1)]) / sqrt[n];
        }
    }
    d
}
