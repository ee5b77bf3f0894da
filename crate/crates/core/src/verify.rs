//! Verification suites: every identity the library relies on, evaluated
//! numerically and collected into a self-describing report.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{build_planar_weyl, GroupCarrier, GroupElement, SystemDescriptor, WeylSystem};
use crate::observable::ClassicalObservable;
use crate::operator::{DensityOperator, Operator, C64};
use crate::povm::{
    build_povm, cell_trace_residual, domain_check, povm_covariance_residual, quasicontinuity_check, Cell,
    OutcomePartition,
};
use crate::quantization::{
    covariance_residual, dual_symbol, quantize, recover_kernel, trace_identity_residual, MapTable, QuantizationKernel,
};
use crate::random::{random_density, random_positive};
use crate::tolerances::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    FiniteExact,
    PlanarQuadrature,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finite-exact" => Ok(Self::FiniteExact),
            "planar-quadrature" => Ok(Self::PlanarQuadrature),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidFunction(format!("unknown suite '{other}'"))),
        }
    }
}

/// One evaluated identity. Rejection checks (where the expected outcome is
/// an error) record `0` when the input was rejected and `1` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub reference: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn new(id: impl Into<String>, reference: &str, residual: f64, tolerance: f64) -> Self {
        // NaN or infinite residuals fail and are stored as +inf
        let residual = if residual.is_nan() {
            f64::INFINITY
        } else {
            residual.abs()
        };
        Self {
            id: id.into(),
            reference: reference.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    fn failed(id: impl Into<String>, reference: &str, tolerance: f64) -> Self {
        Self::new(id, reference, f64::INFINITY, tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub systems: Vec<SystemDescriptor>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub random_kernels: usize,
    pub supplied_kernels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: Suite,
    pub records: Vec<CheckRecord>,
    pub environment: Environment,
    pub pass: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// Inputs of a verification run.
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub suite: Suite,
    /// Systems to check; empty selects the default sweep of the suite
    /// (tori of order 2..=5, and the `M=40, L=6, h=0.1` grid).
    pub systems: Vec<SystemDescriptor>,
    /// Kernels read from files; they first pass the density-operator gate.
    pub kernels: Vec<Operator>,
    /// Random kernels (and random states) per finite system.
    pub random_kernels: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            systems: Vec::new(),
            kernels: Vec::new(),
            random_kernels: 20,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

pub const DEFAULT_PLANAR: SystemDescriptor = SystemDescriptor::Planar {
    m: 40,
    l: 6.0,
    h: 0.1,
    d: None,
};
const REFINED_PLANAR: (usize, f64, f64) = (60, 8.0, 0.05);
/// Windows swept by the domain check on the grid.
const DOMAIN_SWEEP: [f64; 3] = [8.0, 10.0, 12.0];

const FINITE_EXACT_TOL: f64 = 1e-12;
const FINITE_TOL: f64 = 1e-10;
const RECOVER_TOL: f64 = 1e-9;
/// Deviation above which a recovery counts as rejected.
const REJECT_DEVIATION: f64 = 1e-6;
const SQUARE_INTEGRABILITY_REL: f64 = 1e-3;
const HUSIMI_ORIGIN_TOL: f64 = 1e-6;
const HUSIMI_MASS_TOL: f64 = 1e-3;
const ANTI_WICK_TOL: f64 = 5e-3;
const ANTI_WICK_LEVELS: usize = 10;
const QUASI_STEPS: usize = 50;
const COVARIANCE_PLANAR_TOL: f64 = 1e-4;

/// Runs the requested suite.
pub fn run(config: &VerifyConfig) -> Result<VerificationReport> {
    let tol = &config.tolerances;
    let want_finite = matches!(config.suite, Suite::FiniteExact | Suite::All);
    let want_planar = matches!(config.suite, Suite::PlanarQuadrature | Suite::All);
    let mut systems = config.systems.clone();
    if systems.is_empty() {
        if want_finite {
            systems.extend((2..=5).map(|n| SystemDescriptor::Finite { n, d: None }));
        }
        if want_planar {
            systems.push(DEFAULT_PLANAR);
        }
    }

    let mut records = Vec::new();
    let mut gated = Vec::new();
    for (i, k) in config.kernels.iter().enumerate() {
        let (record, kernel) = kernel_gate(&format!("kernel-gate[{i}]"), k, tol);
        records.push(record);
        gated.extend(kernel);
    }

    let mut used = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    for desc in &systems {
        let system = WeylSystem::from_descriptor(desc)?;
        let kernels: Vec<_> = gated.iter().filter(|k| k.dim() == system.fock_dim()).cloned().collect();
        if system.carrier().is_finite() {
            if !want_finite {
                return Err(Error::InvalidGrid("the planar suite needs a planar system".into()));
            }
            records.extend(finite_suite(&system, &kernels, config.random_kernels, &mut rng, tol)?);
        } else {
            if !want_planar {
                return Err(Error::InvalidGrid("the finite suite needs a finite system".into()));
            }
            records.extend(planar_suite(&system, &kernels, tol)?);
        }
        used.push(system.descriptor());
    }

    let pass = records.iter().all(|r| r.pass);
    Ok(VerificationReport {
        suite: config.suite,
        records,
        environment: Environment {
            systems: used,
            tolerances: *tol,
            seed: config.seed,
            random_kernels: config.random_kernels,
            supplied_kernels: config.kernels.len(),
        },
        pass,
    })
}

/// Density-operator gate for a supplied kernel. The residual is the worst of
/// the Hermiticity, trace and negativity defects.
fn kernel_gate(id: &str, op: &Operator, tol: &Tolerances) -> (CheckRecord, Option<QuantizationKernel>) {
    const REF: &str = "kernel is a density operator";
    let herm = op.hermitian_residual();
    let trace = (op.trace() - C64::new(1.0, 0.0)).norm();
    let neg = op
        .min_eigenvalue(f64::INFINITY)
        .map(|m| (-m).max(0.0))
        .unwrap_or(f64::INFINITY);
    let residual = herm.max(trace).max(neg);
    match DensityOperator::new(op.clone(), tol) {
        Ok(rho) => (
            CheckRecord {
                pass: true,
                ..CheckRecord::new(id, REF, residual, tol.trace)
            },
            QuantizationKernel::new(rho).ok(),
        ),
        Err(_) => (
            CheckRecord {
                pass: false,
                ..CheckRecord::new(id, REF, residual.max(tol.trace * (1.0 + f64::EPSILON)), tol.trace)
            },
            None,
        ),
    }
}

fn tag(system: &WeylSystem) -> String {
    match system.descriptor() {
        SystemDescriptor::Finite { n, .. } => format!("N={n}"),
        SystemDescriptor::Planar { m, l, h, .. } => format!("M={m},L={l},h={h}"),
    }
}

fn max_over<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    it.into_iter().try_fold(0.0, |acc, r| Ok(f64::max(acc, r?)))
}

fn record_or_fail(id: String, reference: &str, residual: Result<f64>, tolerance: f64) -> CheckRecord {
    match residual {
        Ok(r) => CheckRecord::new(id, reference, r, tolerance),
        Err(_) => CheckRecord::failed(id, reference, tolerance),
    }
}

/// Exact identities on a finite torus, for the supplied kernels plus
/// `random_kernels` random ones.
pub fn finite_suite<R: Rng>(
    system: &WeylSystem,
    supplied: &[QuantizationKernel],
    random_kernels: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let t = tag(system);
    let n = system.fock_dim();
    let car = system.carrier().clone();
    let d = system.d_const();
    let mut out = Vec::new();

    let si = max_over((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| {
        let v = system.check_square_integrability(
            &Operator::basis_projector(n, i),
            &Operator::basis_projector(n, j),
            tol,
        )?;
        Ok((v - d).abs())
    }));
    out.push(record_or_fail(
        format!("square-integrability[{t}]"),
        "sum_g Tr[P1 beta_g(P2)] = d",
        si,
        FINITE_TOL,
    ));

    let mut kernels: Vec<QuantizationKernel> = supplied.to_vec();
    for _ in 0..random_kernels {
        kernels.push(QuantizationKernel::new(random_density(n, rng))?);
    }

    let mut trace_id: f64 = 0.0;
    for _ in 0..kernels.len().max(1) {
        let a = random_positive(n, rng);
        let s = random_positive(n, rng);
        let (lhs, rhs) = trace_identity_residual(system, &a, &s, tol)?;
        trace_id = trace_id.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    out.push(CheckRecord::new(
        format!("trace-identity[{t}]"),
        "d^-1 sum_g Tr[A beta_g(S)] = Tr[A] Tr[S]",
        trace_id,
        FINITE_TOL,
    ));

    let one = ClassicalObservable::constant(car.clone(), C64::new(1.0, 0.0));
    let (mut unit, mut neg, mut cov, mut tn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut norm, mut cells, mut pcov, mut rec, mut dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut rejected = true;
    for k in &kernels {
        unit = unit.max(quantize(system, k, &one)?.max_abs_diff(&Operator::identity(n)));

        let f_pos = ClassicalObservable::real(
            car.clone(),
            &(0..car.size()).map(|_| rng.gen::<f64>()).collect::<Vec<_>>(),
        )?;
        let gamma = quantize(system, k, &f_pos)?;
        neg = neg.max((-gamma.min_eigenvalue(tol.herm)?).max(0.0));
        tn = tn.max((gamma.trace_norm() - f_pos.l1_norm() / d).abs());

        let f_cx = ClassicalObservable::new(
            car.clone(),
            (0..car.size())
                .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
            None,
        )?;
        for i in 0..car.size() {
            cov = cov.max(covariance_residual(system, k, &f_cx, car.element(i), tol)?);
        }

        let coarse_partition = random_partition(&car, 3, rng)?;
        match (
            build_povm(system, k, &OutcomePartition::singletons(&car), tol),
            build_povm(system, k, &coarse_partition, tol),
        ) {
            (Ok(singles), Ok(coarse)) => {
                norm = norm.max(singles.normalization_residual());
                cells = cells
                    .max(cell_trace_residual(&singles))
                    .max(cell_trace_residual(&coarse));
                for i in 0..car.size() {
                    pcov = pcov.max(povm_covariance_residual(system, &coarse, car.element(i))?);
                }
            }
            (Err(Error::NotNormalized { residual }), _) | (_, Err(Error::NotNormalized { residual })) => {
                norm = norm.max(residual);
                cells = f64::INFINITY;
                pcov = f64::INFINITY;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }

        let table = MapTable::from_kernel(system, k)?;
        match recover_kernel(system, &table, tol) {
            Ok(r) => {
                rec = rec.max(r.kernel.op().max_abs_diff(k.op()));
                dev = dev.max(r.max_deviation);
            }
            Err(_) => rec = f64::INFINITY,
        }
        let constant = MapTable::from_entries(
            car.clone(),
            (0..car.size())
                .map(|i| (car.element(i), random_density(n, rng).into_op()))
                .collect(),
        )?;
        if let Ok(r) = recover_kernel(system, &constant, tol) {
            rejected &= r.max_deviation > REJECT_DEVIATION;
        }
    }
    out.push(CheckRecord::new(
        format!("unit-to-identity[{t}]"),
        "Gamma(1) = I",
        unit,
        FINITE_EXACT_TOL,
    ));
    out.push(CheckRecord::new(
        format!("positivity[{t}]"),
        "f >= 0 implies Gamma(f) >= 0",
        neg,
        tol.psd,
    ));
    out.push(CheckRecord::new(
        format!("covariance[{t}]"),
        "beta_g*(Gamma(f)) = Gamma(f(g.))",
        cov,
        FINITE_EXACT_TOL,
    ));
    out.push(CheckRecord::new(
        format!("povm-normalization[{t}]"),
        "sum_B E(B) = I",
        norm,
        FINITE_TOL,
    ));
    out.push(CheckRecord::new(
        format!("povm-cell-trace[{t}]"),
        "Tr E(B) = d^-1 lambda(B)",
        cells,
        FINITE_TOL,
    ));
    out.push(CheckRecord::new(
        format!("povm-covariance[{t}]"),
        "beta_g*(E(B)) = E(B - g)",
        pcov,
        FINITE_EXACT_TOL,
    ));
    out.push(CheckRecord::new(
        format!("recover-round-trip[{t}]"),
        "kernel recovered from Gamma",
        rec,
        RECOVER_TOL,
    ));
    out.push(CheckRecord::new(
        format!("recover-deviation[{t}]"),
        "covariant table has one candidate",
        dev,
        FINITE_TOL,
    ));
    out.push(CheckRecord::new(
        format!("recover-rejects-noncovariant[{t}]"),
        "non-covariant table is not accepted",
        if rejected { 0.0 } else { 1.0 },
        0.0,
    ));
    out.push(CheckRecord::new(
        format!("trace-norm[{t}]"),
        "||Gamma(f)||_tr = d^-1 ||f||_1 for f >= 0",
        tn,
        FINITE_TOL,
    ));
    Ok(out)
}

/// Random partition into at most `cells` nonempty cells.
fn random_partition<R: Rng>(car: &GroupCarrier, cells: usize, rng: &mut R) -> Result<OutcomePartition> {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); cells];
    for i in 0..car.size() {
        groups[rng.gen_range(0..cells)].push(i);
    }
    let cells = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .enumerate()
        .map(|(c, indices)| Cell {
            label: format!("cell{c}"),
            indices,
        })
        .collect();
    OutcomePartition::new(car.clone(), cells)
}

/// `Σ_{window} h² f(q,p) Q_n(q,p)` with the closed-form Husimi function
/// `Q_n = e^{-x} xⁿ / (n! 2π)`, `x = (q²+p²)/2`, of the Fock state `|n⟩`.
pub fn anti_wick_reference(n: usize, half_extent: f64, step: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let k = (half_extent / step).round() as i64;
    let ln_fact: f64 = (1..=n).map(|j| (j as f64).ln()).sum();
    let mut total = 0.0;
    for a in -k..k {
        let q = a as f64 * step;
        for b in -k..k {
            let p = b as f64 * step;
            let x = 0.5 * (q * q + p * p);
            let q_n = if x == 0.0 {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (-x + n as f64 * x.ln() - ln_fact).exp()
            };
            total += f(q, p) * q_n;
        }
    }
    total * step * step / (2.0 * PI)
}

fn harmonic(q: f64, p: f64) -> f64 {
    0.5 * (q * q + p * p)
}

/// Quadrature checks on a planar grid. Checks tied to `T = |0⟩⟨0|` use the
/// vacuum kernel; supplied kernels enter the covariance check.
pub fn planar_suite(
    system: &WeylSystem,
    supplied: &[QuantizationKernel],
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let t = tag(system);
    let m = system.fock_dim();
    let car = system.carrier().clone();
    let vacuum = QuantizationKernel::vacuum(m);
    let p0 = Operator::basis_projector(m, 0);
    let mut out = Vec::new();

    let si = system.check_square_integrability(&p0, &p0, tol)?;
    let si_rel = (si / (2.0 * PI) - 1.0).abs();
    out.push(CheckRecord::new(
        format!("square-integrability-vacuum[{t}]"),
        "sum_g Tr[P0 beta_g(P0)] = 2 pi",
        si_rel,
        SQUARE_INTEGRABILITY_REL,
    ));
    let (rm, rl, rh) = REFINED_PLANAR;
    let refined = build_planar_weyl(rm, rl, rh)?;
    let rp0 = Operator::basis_projector(rm, 0);
    let si_ref = (refined.check_square_integrability(&rp0, &rp0, tol)? / (2.0 * PI) - 1.0).abs();
    // the refined residual may not exceed the base one
    out.push(CheckRecord::new(
        format!("square-integrability-refines[M={rm},L={rl},h={rh}]"),
        "refined grid tightens sum_g Tr[P0 beta_g(P0)] = 2 pi",
        (si_ref - si_rel).max(0.0),
        0.0,
    ));

    let husimi = dual_symbol(system, &vacuum, &p0)?;
    let origin = car.index_of(GroupElement::IDENTITY)?;
    out.push(CheckRecord::new(
        format!("husimi-origin[{t}]"),
        "Q_0(0) = 1 / (2 pi)",
        (husimi.values()[origin].re - 1.0 / (2.0 * PI)).abs(),
        HUSIMI_ORIGIN_TOL,
    ));
    let mass: f64 = husimi.values().iter().map(|z| z.re).sum::<f64>() * car.weight();
    out.push(CheckRecord::new(
        format!("husimi-mass[{t}]"),
        "sum_g w_g Q_0(g) = 1",
        (mass - 1.0).abs(),
        HUSIMI_MASS_TOL,
    ));

    let f = ClassicalObservable::from_fn(car.clone(), |q, p| C64::new(harmonic(q, p), 0.0))?;
    let gamma = quantize(system, &vacuum, &f)?;
    for n in 0..=ANTI_WICK_LEVELS.min(m - 1) {
        let reference = anti_wick_reference(n, rl, rh, harmonic);
        out.push(CheckRecord::new(
            format!("anti-wick[n={n},{t}]"),
            "<n|Gamma((q^2+p^2)/2)|n> = n + 1",
            (gamma.matrix()[(n, n)].re - reference).abs(),
            ANTI_WICK_TOL,
        ));
    }

    let mut e0 = DVector::zeros(m);
    e0[0] = C64::new(1.0, 0.0);
    let domain = domain_check(
        system,
        &vacuum,
        &|q, p| C64::new(harmonic(q, p), 0.0),
        &e0,
        &DOMAIN_SWEEP,
        tol,
    )?;
    out.push(CheckRecord::new(
        format!("domain-harmonic-vacuum[{t}]"),
        "|0> in the domain of L((q^2+p^2)/2, E)",
        domain.cauchy_gap,
        tol.dom,
    ));
    let sequence = (1..=QUASI_STEPS)
        .map(|k| f.map_values(|z| C64::new(z.re.min(k as f64), 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let qc = quasicontinuity_check(system, &vacuum, &sequence, &f, &e0, &e0, domain.verdict, tol);
    out.push(match qc {
        Ok(r) if r.monotone => CheckRecord::new(
            format!("quasicontinuity[{t}]"),
            "<0|L(min(f,n), E)|0> increases to <0|L(f, E)|0>",
            r.final_residual,
            tol.qc,
        ),
        _ => CheckRecord::failed(
            format!("quasicontinuity[{t}]"),
            "<0|L(min(f,n), E)|0> increases to <0|L(f, E)|0>",
            tol.qc,
        ),
    });

    let bump = ClassicalObservable::from_fn(car.clone(), |q, p| C64::new((-(q * q + p * p)).exp(), 0.0))?;
    let step = match car {
        GroupCarrier::PlanarGrid { step, .. } => step,
        GroupCarrier::FiniteTorus { .. } => unreachable!(),
    };
    let unit = (0.5 / step).round().max(1.0) as i64;
    let shifts = [(unit, 0), (0, unit), (-unit, unit), (2 * unit, -2 * unit), (-3, 7)];
    let mut kernels = vec![vacuum.clone()];
    kernels.extend(supplied.iter().cloned());
    let cov = max_over(
        kernels
            .iter()
            .flat_map(|k| shifts.iter().map(move |&(a, b)| (k, GroupElement::new(a, b))))
            .map(|(k, g)| covariance_residual(system, k, &bump, g, tol)),
    );
    out.push(record_or_fail(
        format!("covariance-gauss-bump[{t}]"),
        "beta_g*(Gamma(f)) = Gamma(f(g.))",
        cov,
        COVARIANCE_PLANAR_TOL,
    ));
    Ok(out)
}
