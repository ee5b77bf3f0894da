//! Covariant POVMs `E(B) = d⁻¹ ∫_B β_g(T) dλ(g)`, their outcome statistics,
//! and the operator integral `⟨ψ|L(f, E)φ⟩ = ∫ f dE_{ψ,φ}`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{build_planar_weyl, GroupCarrier, GroupElement, WeylSystem};
use crate::observable::{CarrierDescriptor, ClassicalObservable};
use crate::operator::{DensityOperator, Effect, Operator, C64};
use crate::quantization::{quantize_indicator, Factors, QuantizationKernel};
use crate::random::random_vector;
use crate::summation::{pairwise_sum, pairwise_sum_over};
use crate::tolerances::Tolerances;

/// Normalization tolerance on exact (finite) carriers.
pub const FINITE_NORMALIZATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub indices: Vec<usize>,
}

/// A partition of the carrier into labelled cells.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomePartition {
    carrier: GroupCarrier,
    cells: Vec<Cell>,
}

impl OutcomePartition {
    /// Cells must be disjoint, nonempty and cover the carrier.
    pub fn new(carrier: GroupCarrier, cells: Vec<Cell>) -> Result<Self> {
        let mut owner = vec![usize::MAX; carrier.size()];
        for (c, cell) in cells.iter().enumerate() {
            if cell.indices.is_empty() {
                return Err(Error::InvalidPartition(format!("cell '{}' is empty", cell.label)));
            }
            for &i in &cell.indices {
                if i >= owner.len() {
                    return Err(Error::InvalidPartition(format!("index {i} is off the carrier")));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} is in cells '{}' and '{}'",
                        cells[owner[i]].label, cell.label
                    )));
                }
                owner[i] = c;
            }
        }
        let uncovered = owner.iter().filter(|&&o| o == usize::MAX).count();
        if uncovered > 0 {
            return Err(Error::InvalidPartition(format!(
                "{uncovered} carrier points are not covered"
            )));
        }
        Ok(Self { carrier, cells })
    }

    /// One cell per point, labelled `a,b`.
    pub fn singletons(carrier: &GroupCarrier) -> Self {
        let cells = (0..carrier.size())
            .map(|i| {
                let g = carrier.element(i);
                Cell {
                    label: format!("{},{}", g.a, g.b),
                    indices: vec![i],
                }
            })
            .collect();
        Self {
            carrier: carrier.clone(),
            cells,
        }
    }

    pub fn whole(carrier: &GroupCarrier) -> Self {
        Self {
            carrier: carrier.clone(),
            cells: vec![Cell {
                label: "G".into(),
                indices: (0..carrier.size()).collect(),
            }],
        }
    }

    /// The four sign quadrants of the grid window, labelled `q-p-`, `q-p+`,
    /// `q+p-`, `q+p+` (zero counts as `+`).
    pub fn quadrants(carrier: &GroupCarrier) -> Result<Self> {
        if carrier.is_finite() {
            return Err(Error::InvalidPartition("quadrants need a planar grid".into()));
        }
        let labels = ["q-p-", "q-p+", "q+p-", "q+p+"];
        let mut cells: Vec<Cell> = labels
            .iter()
            .map(|l| Cell {
                label: (*l).into(),
                indices: Vec::new(),
            })
            .collect();
        for i in 0..carrier.size() {
            let g = carrier.element(i);
            let k = 2 * usize::from(g.a >= 0) + usize::from(g.b >= 0);
            cells[k].indices.push(i);
        }
        Self::new(carrier.clone(), cells)
    }

    pub fn carrier(&self) -> &GroupCarrier {
        &self.carrier
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn is_singletons(&self) -> bool {
        self.cells.len() == self.carrier.size()
    }
}

/// A finite labelled family of effects over an [`OutcomePartition`].
#[derive(Clone, Debug)]
pub struct Povm {
    partition: OutcomePartition,
    effects: Vec<Effect>,
    d_const: f64,
    generator: Option<QuantizationKernel>,
    normalization_residual: f64,
}

fn normalization_residual(effects: &[Effect], dim: usize, block: usize) -> f64 {
    let sum = effects
        .iter()
        .fold(DMatrix::<C64>::zeros(dim, dim), |acc, e| acc + e.op().matrix());
    let mut worst: f64 = 0.0;
    for i in 0..block {
        for j in 0..block {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((sum[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

impl Povm {
    /// Assembles and validates a POVM. On a finite carrier the effects must
    /// sum to `I` within [`FINITE_NORMALIZATION_TOL`]; on a grid the defect is
    /// only recorded, since the window truncates the group.
    pub fn from_parts(
        partition: OutcomePartition,
        effects: Vec<Operator>,
        d_const: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        if effects.len() != partition.cells.len() {
            return Err(Error::InvalidPartition(format!(
                "{} cells but {} effects",
                partition.cells.len(),
                effects.len()
            )));
        }
        let dim = effects[0].dim();
        let effects = effects
            .into_iter()
            .map(|op| {
                op.check_dim(dim)?;
                Effect::new(op, tol)
            })
            .collect::<Result<Vec<_>>>()?;
        let residual = normalization_residual(&effects, dim, dim);
        if partition.carrier.is_finite() && residual > FINITE_NORMALIZATION_TOL {
            return Err(Error::NotNormalized { residual });
        }
        Ok(Self {
            partition,
            effects,
            d_const,
            generator: None,
            normalization_residual: residual,
        })
    }

    pub fn partition(&self) -> &OutcomePartition {
        &self.partition
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn d_const(&self) -> f64 {
        self.d_const
    }

    pub fn dim(&self) -> usize {
        self.effects[0].op().dim()
    }

    pub fn generator(&self) -> Option<&QuantizationKernel> {
        self.generator.as_ref()
    }

    /// `‖Σ_B E(B) - I‖_max`.
    pub fn normalization_residual(&self) -> f64 {
        self.normalization_residual
    }

    /// `‖Σ_B E(B) - I‖_max` restricted to the leading `block x block` entries.
    pub fn normalization_residual_on_block(&self, block: usize) -> f64 {
        normalization_residual(&self.effects, self.dim(), block.min(self.dim()))
    }

    pub fn effect(&self, label: &str) -> Option<&Effect> {
        self.partition
            .cells
            .iter()
            .position(|c| c.label == label)
            .map(|i| &self.effects[i])
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    carrier: Option<CarrierDescriptor>,
    cells: Vec<Cell>,
}

/// Serialized POVM. The partition records its carrier; files without one
/// need the carrier supplied when loading.
#[derive(Serialize, Deserialize)]
pub struct PovmJson {
    partition: PartitionJson,
    effects: Vec<Operator>,
    d: f64,
}

impl PovmJson {
    /// Validates and assembles the POVM. `carrier`, when given, must agree
    /// with the recorded one.
    pub fn into_povm(self, carrier: Option<&GroupCarrier>, tol: &Tolerances) -> Result<Povm> {
        let recorded = self.partition.carrier.as_ref().map(|c| c.to_carrier()).transpose()?;
        let carrier = match (recorded, carrier) {
            (Some(r), Some(c)) if r != *c => return Err(Error::CarrierMismatch),
            (Some(r), _) => r,
            (None, Some(c)) => c.clone(),
            (None, None) => return Err(Error::InvalidPartition("POVM file has no carrier".into())),
        };
        let partition = OutcomePartition::new(carrier, self.partition.cells)?;
        Povm::from_parts(partition, self.effects, self.d, tol)
    }

    pub fn effects_mut(&mut self) -> &mut Vec<Operator> {
        &mut self.effects
    }
}

impl From<&Povm> for PovmJson {
    fn from(p: &Povm) -> Self {
        Self {
            partition: PartitionJson {
                carrier: Some(CarrierDescriptor::of(&p.partition.carrier)),
                cells: p.partition.cells.clone(),
            },
            effects: p.effects.iter().map(|e| e.op().clone()).collect(),
            d: p.d_const,
        }
    }
}

/// `E(B) = d⁻¹ Σ_{g∈B} w_g β_g(T)` for every cell.
pub fn build_povm(
    system: &WeylSystem,
    kernel: &QuantizationKernel,
    partition: &OutcomePartition,
    tol: &Tolerances,
) -> Result<Povm> {
    if system.carrier() != partition.carrier() {
        return Err(Error::CarrierMismatch);
    }
    if kernel.dim() != system.fock_dim() {
        return Err(Error::DimensionMismatch {
            expected: system.fock_dim(),
            found: kernel.dim(),
        });
    }
    let effects: Vec<Operator> = partition
        .cells
        .par_iter()
        .map(|c| quantize_indicator(system, kernel, &c.indices))
        .collect();
    let mut povm = Povm::from_parts(partition.clone(), effects, system.d_const(), tol)?;
    povm.generator = Some(kernel.clone());
    Ok(povm)
}

/// `max_B |Tr[E(B)] - d⁻¹ λ(B)|`.
pub fn cell_trace_residual(povm: &Povm) -> f64 {
    let car = &povm.partition.carrier;
    povm.partition
        .cells
        .iter()
        .zip(&povm.effects)
        .map(|(c, e)| (e.op().trace().re - car.measure(c.indices.len()) / povm.d_const).abs())
        .fold(0.0, f64::max)
}

/// `max_{B,cell} ‖β_g*(E(B)) - E(B - g)‖_max`, with `E(B - g)` rebuilt from
/// the generating kernel. On a grid every shifted cell must stay inside the
/// window.
pub fn povm_covariance_residual(system: &WeylSystem, povm: &Povm, g: GroupElement) -> Result<f64> {
    let kernel = povm
        .generator()
        .ok_or_else(|| Error::InvalidPartition("POVM has no generating kernel".into()))?;
    let car = system.carrier();
    if car != povm.partition.carrier() {
        return Err(Error::CarrierMismatch);
    }
    let g_inv = car.inverse(g);
    let mut worst: f64 = 0.0;
    for (cell, e) in povm.partition.cells.iter().zip(&povm.effects) {
        let shifted = cell
            .indices
            .iter()
            .map(|&i| car.index_of(car.compose(car.element(i), g_inv)))
            .collect::<Result<Vec<_>>>()?;
        let lhs = system.beta_dual(g, e.op())?;
        let rhs = quantize_indicator(system, kernel, &shifted);
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    Ok(worst)
}

/// `p(B) = Tr[ρ E(B)]`, with round-off negatives clipped to zero.
pub fn probabilities(povm: &Povm, rho: &DensityOperator) -> Result<Vec<f64>> {
    povm.effects[0].op().check_dim(rho.dim())?;
    Ok(povm
        .effects
        .iter()
        .map(|e| {
            let p = rho.op().matrix().component_mul(&e.op().matrix().transpose()).sum().re;
            p.max(0.0)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub label: String,
    pub count: u64,
}

/// Multinomial draw of `shots` outcomes.
///
/// Each shot draws `u ~ U[0, Σp)` from a ChaCha20 stream seeded with `seed`
/// and picks the first cell (in partition order) whose cumulative
/// probability exceeds `u`.
pub fn sample(povm: &Povm, rho: &DensityOperator, shots: u64, seed: u64) -> Result<Vec<CellCount>> {
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    let p = probabilities(povm, rho)?;
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for x in &p {
        acc += x;
        cdf.push(acc);
    }
    let total = acc;
    let mut counts = vec![0u64; p.len()];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..shots {
        let u = rng.gen::<f64>() * total;
        let k = cdf.partition_point(|&c| c <= u).min(p.len() - 1);
        counts[k] += 1;
    }
    Ok(povm
        .partition
        .cells
        .iter()
        .zip(counts)
        .map(|(c, count)| CellCount {
            label: c.label.clone(),
            count,
        })
        .collect())
}

/// Writes `label,count` CSV with a header row.
pub fn counts_csv(counts: &[CellCount]) -> String {
    let mut out = String::from("label,count\n");
    for c in counts {
        let label = if c.label.contains([',', '"']) {
            format!("\"{}\"", c.label.replace('"', "\"\""))
        } else {
            c.label.clone()
        };
        out.push_str(&format!("{label},{}\n", c.count));
    }
    out
}

/// λ-density of the complex measure `B ↦ ⟨ψ|E(B)φ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMeasureTable {
    carrier: GroupCarrier,
    values: Vec<C64>,
}

impl ComplexMeasureTable {
    pub fn carrier(&self) -> &GroupCarrier {
        &self.carrier
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Density read off a singleton POVM: `⟨ψ|E({g})φ⟩ / w_g`.
    pub fn from_povm(povm: &Povm, psi: &DVector<C64>, phi: &DVector<C64>) -> Result<Self> {
        if !povm.partition.is_singletons() {
            return Err(Error::InvalidPartition("density needs a singleton partition".into()));
        }
        check_vec(povm.dim(), psi)?;
        check_vec(povm.dim(), phi)?;
        let car = povm.partition.carrier.clone();
        let mut values = vec![C64::new(0.0, 0.0); car.size()];
        let w = car.weight();
        for (c, e) in povm.partition.cells.iter().zip(&povm.effects) {
            values[c.indices[0]] = e.op().matrix_element(psi, phi) / w;
        }
        Ok(Self { carrier: car, values })
    }

    /// `Σ_{g∈B} w_g density(g)`.
    pub fn integrate(&self, indices: &[usize]) -> C64 {
        pairwise_sum_over(indices, &|| C64::new(0.0, 0.0), &|i| self.values[i]) * self.carrier.weight()
    }

    pub fn total(&self) -> C64 {
        pairwise_sum(0..self.values.len(), &|| C64::new(0.0, 0.0), &|i| self.values[i]) * self.carrier.weight()
    }
}

fn check_vec(dim: usize, v: &DVector<C64>) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    Ok(())
}

/// `g ↦ d⁻¹ ⟨ψ|β_g(T)φ⟩`.
pub fn complex_measure_density(
    system: &WeylSystem,
    kernel: &QuantizationKernel,
    psi: &DVector<C64>,
    phi: &DVector<C64>,
) -> Result<ComplexMeasureTable> {
    check_vec(system.fock_dim(), psi)?;
    check_vec(system.fock_dim(), phi)?;
    if kernel.dim() != system.fock_dim() {
        return Err(Error::DimensionMismatch {
            expected: system.fock_dim(),
            found: kernel.dim(),
        });
    }
    let car = system.carrier();
    let inv_d = 1.0 / system.d_const();
    let values = (0..car.size())
        .into_par_iter()
        .map(|i| {
            kernel
                .factors()
                .matrix_element(psi, phi, &system.unitary_matrix(car.element(i)))
                * inv_d
        })
        .collect();
    Ok(ComplexMeasureTable {
        carrier: car.clone(),
        values,
    })
}

/// `⟨ψ|L(f, E)φ⟩ = Σ_g w_g f(g) density(g)`. `verdict` is the outcome of
/// [`domain_check`] for `f` and `φ`; finite carriers are always in the domain.
pub fn operator_integral(
    density: &ComplexMeasureTable,
    f: &ClassicalObservable,
    verdict: DomainVerdict,
) -> Result<C64> {
    if verdict != DomainVerdict::InDomain {
        return Err(Error::NotInDomain);
    }
    if density.carrier != *f.carrier() {
        return Err(Error::CarrierMismatch);
    }
    let fv = f.values();
    let abs = pairwise_sum(0..fv.len(), &|| 0.0, &|i| fv[i].norm() * density.values[i].norm());
    if !abs.is_finite() {
        return Err(Error::NotInDomain);
    }
    Ok(pairwise_sum(0..fv.len(), &|| C64::new(0.0, 0.0), &|i| fv[i] * density.values[i]) * density.carrier.weight())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainVerdict {
    InDomain,
    /// Partial sums did not settle. This never certifies that `φ` is outside
    /// the domain.
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainReport {
    pub verdict: DomainVerdict,
    /// Window half-extents actually used.
    pub windows: Vec<f64>,
    /// `Σ_{window} w_g |f(g)| density_{φ,φ}(g)` per window.
    pub diagonal_sums: Vec<f64>,
    /// Worst relative change between the last two windows over `φ` and the
    /// probe vectors.
    pub cauchy_gap: f64,
    /// Relative change of the `ψ = φ` series alone.
    pub diagonal_gap: f64,
}

/// Number of random probe vectors added to the computational basis.
const RANDOM_PROBES: usize = 2;
const PROBE_SEED: u64 = 0x5eed;

/// Checks whether `f` is integrable against `E_{ψ,φ}` for a probe set of
/// `ψ` (computational basis plus two seeded random vectors) by sweeping
/// growing windows `[-L_k, L_k)²` at the system's step and truncation.
///
/// Finite carriers are always in the domain.
pub fn domain_check(
    system: &WeylSystem,
    kernel: &QuantizationKernel,
    f: &(dyn Fn(f64, f64) -> C64 + Sync),
    phi: &DVector<C64>,
    sweep: &[f64],
    tol: &Tolerances,
) -> Result<DomainReport> {
    check_vec(system.fock_dim(), phi)?;
    let step = match *system.carrier() {
        GroupCarrier::FiniteTorus { .. } => {
            let car = system.carrier();
            let dens = complex_measure_density(system, kernel, phi, phi)?;
            let total = (0..car.size())
                .map(|i| {
                    let (q, p) = car.coordinates(car.element(i));
                    f(q, p).norm() * dens.values[i].norm()
                })
                .sum::<f64>();
            return Ok(DomainReport {
                verdict: DomainVerdict::InDomain,
                windows: Vec::new(),
                diagonal_sums: vec![total],
                cauchy_gap: 0.0,
                diagonal_gap: 0.0,
            });
        }
        GroupCarrier::PlanarGrid { step, .. } => step,
    };
    let mut windows: Vec<f64> = sweep.to_vec();
    windows.sort_by(f64::total_cmp);
    windows.dedup();
    let largest = *windows.last().ok_or_else(|| Error::InvalidGrid("empty sweep".into()))?;
    for &l in &windows {
        GroupCarrier::planar(l, step)?;
    }
    let big = build_planar_weyl(system.fock_dim(), largest, step)?;
    let car = big.carrier().clone();
    let dim = system.fock_dim();

    let mut rng = ChaCha20Rng::seed_from_u64(PROBE_SEED);
    let mut probes: Vec<DVector<C64>> = (0..dim)
        .map(|k| {
            let mut e = DVector::zeros(dim);
            e[k] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    for _ in 0..RANDOM_PROBES {
        probes.push(random_vector(dim, &mut rng));
    }
    let nprobe = probes.len();
    let nlevels = windows.len();
    let inv_d = 1.0 / big.d_const();

    // per-point contributions bucketed by the smallest window containing it
    let level_of = |q: f64, p: f64| -> usize {
        let r = q.abs().max(p.abs());
        windows
            .iter()
            .position(|&l| q >= -l - 1e-9 * step && q < l - 1e-9 * step && p >= -l - 1e-9 * step && p < l - 1e-9 * step)
            .unwrap_or_else(|| panic!("point at radius {r} outside the largest window"))
    };
    let zero = || vec![0.0f64; (nprobe + 1) * nlevels];
    let buckets = pairwise_sum(0..car.size(), &|| Bucket(zero()), &|i| {
        let g = car.element(i);
        let (q, p) = car.coordinates(g);
        let weight = f(q, p).norm();
        let mut out = zero();
        if weight == 0.0 {
            return Bucket(out);
        }
        let lvl = level_of(q, p);
        let tf = kernel.factors().transformed(&big.unitary_matrix(g));
        let diag = Factors::element_of(&tf, phi, phi).norm() * inv_d;
        out[lvl] = weight * diag;
        for (k, psi) in probes.iter().enumerate() {
            let v = Factors::element_of(&tf, psi, phi).norm() * inv_d;
            out[(k + 1) * nlevels + lvl] = weight * v;
        }
        Bucket(out)
    })
    .0;
    let w = car.weight();
    let cumulative = |series: usize| -> Vec<f64> {
        let mut acc = 0.0;
        (0..nlevels)
            .map(|l| {
                acc += buckets[series * nlevels + l] * w;
                acc
            })
            .collect()
    };
    let diagonal_sums = cumulative(0);
    let scale = *diagonal_sums.last().expect("nonempty");
    let mut cauchy_gap: f64 = 0.0;
    let mut diagonal_gap: f64 = 0.0;
    let mut finite = true;
    for series in 0..=nprobe {
        let s = cumulative(series);
        finite &= s.iter().all(|x| x.is_finite());
        if nlevels >= 2 {
            let (a, b) = (s[nlevels - 2], s[nlevels - 1]);
            let denom = if series == 0 { b } else { scale.max(b) };
            let gap = if denom > 0.0 { (b - a).abs() / denom } else { 0.0 };
            cauchy_gap = cauchy_gap.max(gap);
            if series == 0 {
                diagonal_gap = gap;
            }
        }
    }
    let verdict = if finite && nlevels >= 2 && cauchy_gap <= tol.dom {
        DomainVerdict::InDomain
    } else {
        DomainVerdict::Undetermined
    };
    Ok(DomainReport {
        verdict,
        windows,
        diagonal_sums,
        cauchy_gap: nan_to_inf(cauchy_gap),
        diagonal_gap: nan_to_inf(diagonal_gap),
    })
}

fn nan_to_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

struct Bucket(Vec<f64>);

impl std::ops::Add for Bucket {
    type Output = Bucket;
    fn add(mut self, rhs: Bucket) -> Bucket {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasicontinuityReport {
    /// `|⟨ψ|L(f_n, E)φ⟩ - ⟨ψ|L(f, E)φ⟩|` per index.
    pub residuals: Vec<f64>,
    /// Residuals never increase by more than `1e-12`.
    pub monotone: bool,
    pub final_residual: f64,
    /// `monotone && final_residual <= qc_tol`.
    pub passed: bool,
}

/// Convergence of `⟨ψ|L(f_n, E)φ⟩` along an increasing sequence
/// `0 ≤ f_n ≤ f_{n+1} ≤ f`. `verdict` is the outcome of [`domain_check`] for
/// `f` and `φ`.
#[allow(clippy::too_many_arguments)]
pub fn quasicontinuity_check(
    system: &WeylSystem,
    kernel: &QuantizationKernel,
    f_increasing: &[ClassicalObservable],
    f_limit: &ClassicalObservable,
    psi: &DVector<C64>,
    phi: &DVector<C64>,
    verdict: DomainVerdict,
    tol: &Tolerances,
) -> Result<QuasicontinuityReport> {
    if verdict != DomainVerdict::InDomain {
        return Err(Error::NotInDomain);
    }
    if system.carrier() != f_limit.carrier() {
        return Err(Error::CarrierMismatch);
    }
    const SLACK: f64 = 1e-12;
    let limit = f_limit.values();
    let mut prev: Option<&[C64]> = None;
    for (n, f) in f_increasing.iter().enumerate() {
        if f.carrier() != f_limit.carrier() {
            return Err(Error::CarrierMismatch);
        }
        let ok = f.values().iter().enumerate().all(|(i, z)| {
            let lower = prev.map_or(0.0, |p| p[i].re);
            z.im == 0.0
                && limit[i].im == 0.0
                && z.re >= lower - SLACK
                && z.re <= limit[i].re + SLACK * limit[i].re.abs().max(1.0)
        });
        if !ok {
            return Err(Error::NotMonotone { index: n });
        }
        prev = Some(f.values());
    }
    let density = complex_measure_density(system, kernel, psi, phi)?;
    let target = operator_integral(&density, f_limit, verdict)?;
    let residuals = f_increasing
        .iter()
        .map(|f| Ok((operator_integral(&density, f, verdict)? - target).norm()))
        .collect::<Result<Vec<f64>>>()?;
    let monotone = residuals.windows(2).all(|w| w[1] <= w[0] + SLACK);
    let final_residual = residuals.last().copied().unwrap_or(0.0);
    Ok(QuasicontinuityReport {
        passed: monotone && final_residual <= tol.qc,
        residuals,
        monotone,
        final_residual,
    })
}
