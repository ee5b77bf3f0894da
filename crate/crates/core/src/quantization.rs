//! The covariant quantization map `Γ_T(f) = d⁻¹ ∫ f(g) β_g(T) dλ(g)`, its
//! preadjoint symbol map, identity residuals, and kernel recovery.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupCarrier, GroupElement, WeylSystem};
use crate::observable::{CarrierDescriptor, ClassicalObservable};
use crate::operator::{DensityOperator, Operator, C64};
use crate::summation::pairwise_sum;
use crate::tolerances::Tolerances;

/// Spectral factors `(λ_k, v_k)` with `A = Σ λ_k |v_k⟩⟨v_k|`; zero
/// eigenvalues are dropped.
#[derive(Clone, Debug)]
pub(crate) struct Factors(Vec<(f64, DVector<C64>)>);

impl Factors {
    pub(crate) fn of(a: &Operator, herm_tol: f64) -> Result<Self> {
        Ok(Self(
            a.eigen_decomposition(herm_tol)?
                .into_iter()
                .filter(|(l, _)| *l != 0.0)
                .collect(),
        ))
    }

    /// `W A W†`.
    pub(crate) fn conjugated(&self, w: &DMatrix<C64>) -> DMatrix<C64> {
        let n = w.nrows();
        let mut out = DMatrix::zeros(n, n);
        for (l, v) in &self.0 {
            let u = w * v;
            out.gerc(C64::new(*l, 0.0), &u, &u, C64::new(1.0, 0.0));
        }
        out
    }

    /// `Tr[S W A W†] = Σ λ_k ⟨W v_k|S|W v_k⟩`.
    pub(crate) fn trace_against(&self, s: &DMatrix<C64>, w: &DMatrix<C64>) -> C64 {
        self.0
            .iter()
            .map(|(l, v)| {
                let u = w * v;
                u.dotc(&(s * &u)) * *l
            })
            .sum()
    }

    /// `⟨ψ|W A W†|φ⟩`.
    pub(crate) fn matrix_element(&self, psi: &DVector<C64>, phi: &DVector<C64>, w: &DMatrix<C64>) -> C64 {
        Self::element_of(&self.transformed(w), psi, phi)
    }

    /// `(λ_k, W v_k)`, for evaluating many matrix elements at one `W`.
    pub(crate) fn transformed(&self, w: &DMatrix<C64>) -> Vec<(f64, DVector<C64>)> {
        self.0.iter().map(|(l, v)| (*l, w * v)).collect()
    }

    pub(crate) fn element_of(transformed: &[(f64, DVector<C64>)], psi: &DVector<C64>, phi: &DVector<C64>) -> C64 {
        transformed.iter().map(|(l, u)| psi.dotc(u) * u.dotc(phi) * *l).sum()
    }
}

/// The generating operator `T` of `Γ_T` and of the covariant POVM.
#[derive(Clone, Debug)]
pub struct QuantizationKernel {
    t: DensityOperator,
    factors: Factors,
}

impl QuantizationKernel {
    pub fn new(t: DensityOperator) -> Result<Self> {
        let factors = Factors::of(t.op(), Tolerances::default().herm)?;
        Ok(Self { t, factors })
    }

    pub fn from_operator(op: Operator, tol: &Tolerances) -> Result<Self> {
        Self::new(DensityOperator::new(op, tol)?)
    }

    /// The vacuum `|0⟩⟨0|`.
    pub fn vacuum(dim: usize) -> Self {
        Self::new(DensityOperator::basis(dim, 0)).expect("basis projector is a kernel")
    }

    pub fn density(&self) -> &DensityOperator {
        &self.t
    }

    pub fn op(&self) -> &Operator {
        self.t.op()
    }

    pub fn dim(&self) -> usize {
        self.t.dim()
    }

    pub(crate) fn factors(&self) -> &Factors {
        &self.factors
    }
}

fn check_system(system: &WeylSystem, kernel: &QuantizationKernel) -> Result<()> {
    if kernel.dim() != system.fock_dim() {
        return Err(Error::DimensionMismatch {
            expected: system.fock_dim(),
            found: kernel.dim(),
        });
    }
    Ok(())
}

fn check_carrier(system: &WeylSystem, carrier: &GroupCarrier) -> Result<()> {
    if system.carrier() != carrier {
        return Err(Error::CarrierMismatch);
    }
    Ok(())
}

/// `Γ(f) = d⁻¹ Σ_g w_g f(g) β_g(T)`, summed pairwise in enumeration order.
pub fn quantize(system: &WeylSystem, kernel: &QuantizationKernel, f: &ClassicalObservable) -> Result<Operator> {
    check_carrier(system, f.carrier())?;
    check_system(system, kernel)?;
    if f.declared_sup().is_none() && !f.l1_norm().is_finite() {
        return Err(Error::UnsummableFunction);
    }
    let car = system.carrier();
    let dim = system.fock_dim();
    let values = f.values();
    let zero = || DMatrix::<C64>::zeros(dim, dim);
    let sum = pairwise_sum(0..car.size(), &zero, &|i| {
        let fi = values[i];
        if fi == C64::new(0.0, 0.0) {
            return zero();
        }
        kernel.factors().conjugated(&system.unitary_matrix(car.element(i))) * fi
    });
    Operator::from_matrix(sum * C64::new(car.weight() / system.d_const(), 0.0))
}

/// `Γ(χ_B)` for a set of carrier indices.
pub(crate) fn quantize_indicator(system: &WeylSystem, kernel: &QuantizationKernel, indices: &[usize]) -> Operator {
    let car = system.carrier();
    let dim = system.fock_dim();
    let sum = crate::summation::pairwise_sum_over(indices, &|| DMatrix::<C64>::zeros(dim, dim), &|i| {
        kernel.factors().conjugated(&system.unitary_matrix(car.element(i)))
    });
    Operator::from_matrix_unchecked(sum * C64::new(car.weight() / system.d_const(), 0.0))
}

/// The symbol `g ↦ d⁻¹ Tr[S β_g(T)]`.
pub fn dual_symbol(system: &WeylSystem, kernel: &QuantizationKernel, s: &Operator) -> Result<ClassicalObservable> {
    check_system(system, kernel)?;
    if s.dim() != system.fock_dim() {
        return Err(Error::CarrierMismatch);
    }
    let car = system.carrier();
    let inv_d = 1.0 / system.d_const();
    let values: Vec<C64> = (0..car.size())
        .into_par_iter()
        .map(|i| {
            kernel
                .factors()
                .trace_against(s.matrix(), &system.unitary_matrix(car.element(i)))
                * inv_d
        })
        .collect();
    ClassicalObservable::new(car.clone(), values, None)
}

/// `Σ_g w_g f(g) h(g)`, pairwise.
pub(crate) fn pairing(f: &ClassicalObservable, h: &ClassicalObservable) -> C64 {
    let (fv, hv) = (f.values(), h.values());
    let s = pairwise_sum(0..fv.len(), &|| C64::new(0.0, 0.0), &|i| fv[i] * hv[i]);
    s * f.carrier().weight()
}

/// `|Tr[S Γ(f)] - Σ_g w_g f(g) Γ_*(S)(g)|`.
pub fn duality_residual(
    system: &WeylSystem,
    kernel: &QuantizationKernel,
    f: &ClassicalObservable,
    s: &Operator,
) -> Result<f64> {
    let gamma = quantize(system, kernel, f)?;
    let lhs = s.mul(&gamma)?.trace();
    let rhs = pairing(f, &dual_symbol(system, kernel, s)?);
    Ok((lhs - rhs).norm())
}

/// `(d⁻¹ Σ_g w_g Tr[A β_g(S)], Tr[A] Tr[S])` for positive `A`, `S`.
pub fn trace_identity_residual(
    system: &WeylSystem,
    a: &Operator,
    s: &Operator,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    for op in [a, s] {
        op.check_dim(system.fock_dim())?;
        let min_eigenvalue = op.min_eigenvalue(tol.herm)?;
        if min_eigenvalue < -tol.psd {
            return Err(Error::NotPositive { min_eigenvalue });
        }
    }
    let factors = Factors::of(s, tol.herm)?;
    let car = system.carrier();
    let sum = pairwise_sum(0..car.size(), &|| C64::new(0.0, 0.0), &|i| {
        factors.trace_against(a.matrix(), &system.unitary_matrix(car.element(i)))
    });
    let lhs = (sum * (car.weight() / system.d_const())).re;
    let rhs = (a.trace() * s.trace()).re;
    Ok((lhs, rhs))
}

/// `‖β_g*(Γ(f)) - Γ(f(g·))‖_max`.
pub fn covariance_residual(
    system: &WeylSystem,
    kernel: &QuantizationKernel,
    f: &ClassicalObservable,
    g: GroupElement,
    tol: &Tolerances,
) -> Result<f64> {
    check_carrier(system, f.carrier())?;
    let translated = f.translate(g, tol.mass)?;
    let lhs = system.beta_dual(g, &quantize(system, kernel, f)?)?;
    let rhs = quantize(system, kernel, &translated)?;
    Ok(lhs.max_abs_diff(&rhs))
}

/// Values `Γ(χ_{{g}})` of a covariant map on singletons, in enumeration order.
#[derive(Clone, Debug, PartialEq)]
pub struct MapTable {
    carrier: GroupCarrier,
    entries: Vec<Operator>,
}

impl MapTable {
    /// Builds a table from `(g, Γ(χ_{{g}}))` pairs; every carrier point must be
    /// present exactly once.
    pub fn from_entries(carrier: GroupCarrier, entries: Vec<(GroupElement, Operator)>) -> Result<Self> {
        let mut slots: Vec<Option<Operator>> = vec![None; carrier.size()];
        let mut dim = None;
        for (g, op) in entries {
            let d = *dim.get_or_insert(op.dim());
            op.check_dim(d)?;
            let i = carrier.index_of(g)?;
            slots[i] = Some(op);
        }
        let missing = slots.iter().filter(|s| s.is_none()).count();
        if missing > 0 {
            return Err(Error::IncompleteTable { missing });
        }
        Ok(Self {
            carrier,
            entries: slots.into_iter().map(|s| s.expect("checked")).collect(),
        })
    }

    /// The table of `Γ_T`: entry `d⁻¹ w_g β_g(T)` at `g`.
    pub fn from_kernel(system: &WeylSystem, kernel: &QuantizationKernel) -> Result<Self> {
        check_system(system, kernel)?;
        let car = system.carrier();
        let scale = C64::new(car.weight() / system.d_const(), 0.0);
        let entries = (0..car.size())
            .into_par_iter()
            .map(|i| {
                Operator::from_matrix_unchecked(
                    kernel.factors().conjugated(&system.unitary_matrix(car.element(i))) * scale,
                )
            })
            .collect();
        Ok(Self {
            carrier: car.clone(),
            entries,
        })
    }

    pub fn carrier(&self) -> &GroupCarrier {
        &self.carrier
    }

    pub fn entries(&self) -> &[Operator] {
        &self.entries
    }

    pub fn map_entries<F: FnMut(usize, &Operator) -> Operator>(&self, mut f: F) -> Self {
        Self {
            carrier: self.carrier.clone(),
            entries: self.entries.iter().enumerate().map(|(i, e)| f(i, e)).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TableEntryJson {
    g: [i64; 2],
    op: Operator,
}

#[derive(Serialize, Deserialize)]
struct MapTableJson {
    carrier: CarrierDescriptor,
    entries: Vec<TableEntryJson>,
}

impl Serialize for MapTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MapTableJson {
            carrier: CarrierDescriptor::of(&self.carrier),
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(i, op)| {
                    let g = self.carrier.element(i);
                    TableEntryJson {
                        g: [g.a, g.b],
                        op: op.clone(),
                    }
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MapTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MapTableJson::deserialize(d)?;
        let carrier = raw.carrier.to_carrier().map_err(D::Error::custom)?;
        let entries = raw
            .entries
            .into_iter()
            .map(|e| (GroupElement::new(e.g[0], e.g[1]), e.op))
            .collect();
        MapTable::from_entries(carrier, entries).map_err(D::Error::custom)
    }
}

/// Result of [`recover_kernel`].
#[derive(Clone, Debug)]
pub struct Recovery {
    pub kernel: QuantizationKernel,
    /// `max_g ‖s_g - mean‖_max` over the per-point candidates.
    pub max_deviation: f64,
}

/// Recovers `T` from the singleton values of a covariant map.
///
/// Each point yields a candidate `s_g = (d / w_g) β_g*(Γ(χ_{{g}}))`, which is
/// the same operator for every `g` when the map is covariant. The kernel is
/// the Hermitian part of the candidate mean, rescaled to trace one.
pub fn recover_kernel(system: &WeylSystem, table: &MapTable, tol: &Tolerances) -> Result<Recovery> {
    check_carrier(system, table.carrier())?;
    let car = system.carrier();
    let dim = system.fock_dim();
    if let Some(e) = table.entries().first() {
        e.check_dim(dim)?;
    }
    let scale = C64::new(system.d_const() / car.weight(), 0.0);
    let candidates: Vec<DMatrix<C64>> = (0..car.size())
        .into_par_iter()
        .map(|i| {
            let w = system.unitary_matrix(car.element(i));
            w.adjoint() * table.entries()[i].matrix() * &w * scale
        })
        .collect();
    let sum = pairwise_sum(0..candidates.len(), &|| DMatrix::<C64>::zeros(dim, dim), &|i| {
        candidates[i].clone()
    });
    let mean = sum / C64::new(candidates.len() as f64, 0.0);
    let max_deviation = candidates
        .par_iter()
        .map(|c| (c - &mean).iter().map(|z| z.norm()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    let herm = Operator::from_matrix(mean)?.hermitian_part();
    let tr = herm.trace().re;
    if !(tr.is_finite() && tr > 0.0) {
        return Err(Error::NotPositiveRecovered { min_eigenvalue: tr });
    }
    let t = herm.scale(C64::new(1.0 / tr, 0.0));
    let min_eigenvalue = t.min_eigenvalue(tol.herm)?;
    if min_eigenvalue < -tol.psd {
        return Err(Error::NotPositiveRecovered { min_eigenvalue });
    }
    Ok(Recovery {
        kernel: QuantizationKernel::from_operator(t, tol)?,
        max_deviation,
    })
}

/// Output of [`normality_surrogate_check`].
#[derive(Clone, Debug, Serialize)]
pub struct NormalityReport {
    /// `max_S |Tr[S Γ(f_k)] - Tr[S Γ(f)]|` for each `k`.
    pub residuals: Vec<f64>,
}

impl NormalityReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// First index from which every later residual stays at or below `tol`.
    pub fn converged_from(&self, tol: f64) -> Option<usize> {
        let last_bad = self.residuals.iter().rposition(|&r| r > tol);
        match last_bad {
            None => Some(0),
            Some(i) if i + 1 < self.residuals.len() => Some(i + 1),
            Some(_) => None,
        }
    }
}

/// Bounded pointwise convergence `f_k → f` seen through the factorization
/// `Tr[S Γ(f_k)] = ⟨Γ_*(S), f_k⟩` over a probe set of operators `S`.
pub fn normality_surrogate_check(
    system: &WeylSystem,
    kernel: &QuantizationKernel,
    f_sequence: &[ClassicalObservable],
    f_limit: &ClassicalObservable,
    probes: &[Operator],
) -> Result<NormalityReport> {
    check_carrier(system, f_limit.carrier())?;
    let bound = f_limit.sup_norm();
    for f in f_sequence {
        check_carrier(system, f.carrier())?;
        let sup = f.sup_norm();
        if sup > bound * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::UnboundedSequence { sup, bound });
        }
    }
    let symbols = probes
        .iter()
        .map(|s| dual_symbol(system, kernel, s))
        .collect::<Result<Vec<_>>>()?;
    let limits: Vec<C64> = symbols.iter().map(|sym| pairing(f_limit, sym)).collect();
    let residuals = f_sequence
        .iter()
        .map(|f| {
            symbols
                .iter()
                .zip(&limits)
                .map(|(sym, lim)| (pairing(f, sym) - lim).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(NormalityReport { residuals })
}
