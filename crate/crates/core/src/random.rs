//! Seeded random operators and vectors for tests and verification suites.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::operator::{DensityOperator, Operator, C64};
use crate::tolerances::Tolerances;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Ginibre matrix.
pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| gaussian(rng))
}

pub fn random_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| gaussian(rng));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

pub fn random_operator<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    Operator::from_matrix_unchecked(ginibre(dim, rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    random_operator(dim, rng).hermitian_part()
}

/// `G G†` for a Ginibre `G`.
pub fn random_positive<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = ginibre(dim, rng);
    Operator::from_matrix_unchecked(&g * g.adjoint()).hermitian_part()
}

/// `G G† / Tr[G G†]`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    let p = random_positive(dim, rng);
    let tr = p.trace().re;
    DensityOperator::new(p.scale(C64::new(1.0 / tr, 0.0)), &Tolerances::default())
        .expect("normalized Gram matrix is a density operator")
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let qr = ginibre(dim, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
        let d = r[(i, i)];
        if d.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            d / d.norm()
        }
    }));
    Operator::from_matrix_unchecked(q * phases)
}
