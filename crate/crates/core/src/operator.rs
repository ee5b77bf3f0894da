//! Dense complex operators on a finite-dimensional Hilbert space.
//!
//! In finite dimension bounded and trace-class operators coincide, so a single
//! [`Operator`] type carries observables, states, kernels and effects alike.
//! [`DensityOperator`] and [`Effect`] are validated wrappers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

pub type C64 = Complex64;

/// A dense `dim x dim` complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::BadShape {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let z = m[(r, c)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFiniteEntry { row: r, col: c });
                }
            }
        }
        Ok(Self { m })
    }

    /// Skips validation; callers guarantee a square finite matrix.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { m }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::BadShape { rows: n, cols: r.len() });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::zeros(dim, dim))
    }

    pub fn diagonal(values: &[C64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    /// `|v⟩⟨v|` (not normalized).
    pub fn outer(v: &DVector<C64>) -> Result<Self> {
        Self::from_matrix(v * v.adjoint())
    }

    /// The projection `|k⟩⟨k|` onto a computational basis vector.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self::from_matrix_unchecked(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        self.m.singular_values().iter().sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.m.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_matrix_unchecked(&self.m * s)
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self::from_matrix_unchecked(&self.m + &other.m))
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self::from_matrix_unchecked(&self.m - &other.m))
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self::from_matrix_unchecked(&self.m * &other.m))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }

    /// `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_matrix_unchecked((&self.m + self.m.adjoint()) * C64::new(0.5, 0.0))
    }

    /// `‖U†U - I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.m.adjoint() * &self.m;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    fn require_hermitian(&self, herm_tol: f64) -> Result<()> {
        let residual = self.hermitian_residual();
        if residual > herm_tol {
            return Err(Error::NonHermitianInput {
                residual,
                tol: herm_tol,
            });
        }
        Ok(())
    }

    /// Ascending eigenvalues of the Hermitian symmetrization. Fails if the
    /// input is not Hermitian within `herm_tol`.
    pub fn eigenvalues(&self, herm_tol: f64) -> Result<Vec<f64>> {
        self.require_hermitian(herm_tol)?;
        let mut ev: Vec<f64> = self
            .hermitian_part()
            .m
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Eigenpairs `(λ_k, v_k)` of the Hermitian symmetrization, so that
    /// `A ≈ Σ λ_k |v_k⟩⟨v_k|`.
    pub fn eigen_decomposition(&self, herm_tol: f64) -> Result<Vec<(f64, DVector<C64>)>> {
        self.require_hermitian(herm_tol)?;
        let eig = SymmetricEigen::new(self.hermitian_part().m);
        Ok(eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &l)| (l, eig.eigenvectors.column(k).into_owned()))
            .collect())
    }

    pub fn min_eigenvalue(&self, herm_tol: f64) -> Result<f64> {
        Ok(self.eigenvalues(herm_tol)?[0])
    }

    /// True iff the smallest eigenvalue is at least `-tol`. Uses the default
    /// Hermiticity tolerance.
    pub fn is_positive(&self, tol: f64) -> Result<bool> {
        self.is_positive_with(tol, Tolerances::default().herm)
    }

    pub fn is_positive_with(&self, tol: f64, herm_tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue(herm_tol)? >= -tol)
    }

    /// `⟨ψ|A|φ⟩`.
    pub fn matrix_element(&self, psi: &DVector<C64>, phi: &DVector<C64>) -> C64 {
        psi.dotc(&(&self.m * phi))
    }
}

/// `U S U†`, with `U` checked for unitarity within `unitary_tol`.
pub fn conjugate(u: &Operator, s: &Operator, unitary_tol: f64) -> Result<Operator> {
    u.check_dim(s.dim())?;
    let defect = u.unitarity_defect();
    if defect > unitary_tol {
        return Err(Error::NonUnitaryConjugator {
            defect,
            tol: unitary_tol,
        });
    }
    Ok(Operator::from_matrix_unchecked(&u.m * &s.m * u.m.adjoint()))
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    dim: usize,
    data: Vec<Vec<[f64; 2]>>,
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let data = (0..n)
            .map(|i| (0..n).map(|j| [self.m[(i, j)].re, self.m[(i, j)].im]).collect())
            .collect();
        OperatorJson { dim: n, data }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = OperatorJson::deserialize(deserializer)?;
        if raw.data.len() != raw.dim {
            return Err(D::Error::custom(format!(
                "dim is {} but data has {} rows",
                raw.dim,
                raw.data.len()
            )));
        }
        let rows: Vec<Vec<C64>> = raw
            .data
            .iter()
            .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect();
        Operator::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// A positive trace-one operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    pub fn new(op: Operator, tol: &Tolerances) -> Result<Self> {
        let residual = op.hermitian_residual();
        if residual > tol.herm {
            return Err(Error::NotDensity(format!(
                "Hermitian residual {residual:.3e} exceeds {:.3e}",
                tol.herm
            )));
        }
        let min = op.min_eigenvalue(tol.herm)?;
        if min < -tol.psd {
            return Err(Error::NotDensity(format!("min eigenvalue {min:.3e}")));
        }
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol.trace {
            return Err(Error::NotDensity(format!("trace {tr} is not 1")));
        }
        Ok(Self { op })
    }

    /// The pure state `|v⟩⟨v| / ‖v‖²`.
    pub fn pure(v: &DVector<C64>) -> Result<Self> {
        let norm2 = v.norm_squared();
        if norm2 == 0.0 || !norm2.is_finite() {
            return Err(Error::NotDensity("zero or non-finite vector".into()));
        }
        let op = Operator::outer(&(v / C64::new(norm2.sqrt(), 0.0)))?;
        Self::new(op, &Tolerances::default())
    }

    /// `|k⟩⟨k|`.
    pub fn basis(dim: usize, k: usize) -> Self {
        Self {
            op: Operator::basis_projector(dim, k),
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let op = Operator::deserialize(deserializer)?;
        DensityOperator::new(op, &Tolerances::default()).map_err(D::Error::custom)
    }
}

/// A Hermitian operator with spectrum in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Effect {
    op: Operator,
}

impl Effect {
    pub fn new(op: Operator, tol: &Tolerances) -> Result<Self> {
        let ev = op.eigenvalues(tol.herm).map_err(|e| Error::NotEffect(e.to_string()))?;
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo < -tol.psd || hi > 1.0 + tol.psd {
            return Err(Error::NotEffect(format!(
                "spectrum [{lo:.3e}, {hi:.3e}] outside [0, 1]"
            )));
        }
        Ok(Self { op })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn trace_of_identity_and_projection() {
        assert_eq!(Operator::identity(3).trace(), c(3.0));
        assert_eq!(Operator::basis_projector(2, 0).trace(), c(1.0));
    }

    #[test]
    fn trace_norm_simple_cases() {
        assert!((Operator::identity(3).trace_norm() - 3.0).abs() < 1e-14);
        let d = Operator::diagonal(&[c(1.0), c(-2.0)]).unwrap();
        assert!((d.trace_norm() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn positivity_edge_cases() {
        assert!(Operator::identity(4).is_positive(0.0).unwrap());
        let d = Operator::diagonal(&[c(1.0), c(-1e-6)]).unwrap();
        assert!(!d.is_positive(1e-8).unwrap());
    }

    #[test]
    fn positivity_rejects_non_hermitian() {
        let m = Operator::from_rows(&[vec![c(0.0), c(1.0)], vec![c(0.0), c(0.0)]]).unwrap();
        assert!(matches!(m.is_positive(0.0), Err(Error::NonHermitianInput { .. })));
    }

    #[test]
    fn conjugate_by_identity_and_shift() {
        let s = Operator::from_rows(&[vec![c(0.3), C64::new(0.1, 0.2)], vec![C64::new(0.1, -0.2), c(0.7)]]).unwrap();
        let out = conjugate(&Operator::identity(2), &s, 1e-8).unwrap();
        assert_eq!(out, s);
        let x = Operator::from_rows(&[vec![c(0.0), c(1.0)], vec![c(1.0), c(0.0)]]).unwrap();
        let out = conjugate(&x, &Operator::basis_projector(2, 0), 1e-8).unwrap();
        assert_eq!(out, Operator::basis_projector(2, 1));
    }

    #[test]
    fn conjugate_rejects_non_unitary() {
        let u = Operator::diagonal(&[c(1.0), c(2.0)]).unwrap();
        assert!(matches!(
            conjugate(&u, &Operator::identity(2), 1e-8),
            Err(Error::NonUnitaryConjugator { .. })
        ));
    }

    #[test]
    fn rejects_nan_and_empty() {
        let m = DMatrix::from_element(2, 2, C64::new(f64::NAN, 0.0));
        assert!(matches!(Operator::from_matrix(m), Err(Error::NonFiniteEntry { .. })));
        assert!(matches!(
            Operator::from_matrix(DMatrix::zeros(0, 0)),
            Err(Error::BadShape { .. })
        ));
    }

    #[test]
    fn density_gate() {
        let tol = Tolerances::default();
        assert!(DensityOperator::new(Operator::basis_projector(3, 1), &tol).is_ok());
        let short = Operator::basis_projector(3, 1).scale(c(0.9));
        assert!(matches!(DensityOperator::new(short, &tol), Err(Error::NotDensity(_))));
        let neg = Operator::diagonal(&[c(1.1), c(-0.1)]).unwrap();
        assert!(DensityOperator::new(neg, &tol).is_err());
    }

    #[test]
    fn effect_gate() {
        let tol = Tolerances::default();
        assert!(Effect::new(Operator::identity(2), &tol).is_ok());
        assert!(Effect::new(Operator::identity(2).scale(c(1.5)), &tol).is_err());
    }

    #[test]
    fn json_layout() {
        let op = Operator::from_rows(&[vec![c(1.0), C64::new(0.0, -1.0)], vec![C64::new(0.0, 1.0), c(2.0)]]).unwrap();
        let s = serde_json::to_string(&op).unwrap();
        assert_eq!(s, r#"{"dim":2,"data":[[[1.0,0.0],[0.0,-1.0]],[[0.0,1.0],[2.0,0.0]]]}"#);
        let back: Operator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, op);
        assert!(serde_json::from_str::<Operator>(r#"{"dim":3,"data":[[[1,0]]]}"#).is_err());
    }
}
