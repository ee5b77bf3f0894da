//! Python bindings. Matrices cross the boundary as nested lists of
//! `complex`, functions on the carrier as flat lists in enumeration order.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use covquant::group::{build_finite_weyl, build_planar_weyl, GroupElement, SystemDescriptor, WeylSystem};
use covquant::observable::{ClassicalObservable, FunctionSpec};
use covquant::operator::{DensityOperator, Operator};
use covquant::povm::{self, OutcomePartition, Povm as CorePovm, PovmJson};
use covquant::quantization::{self, MapTable, QuantizationKernel};
use covquant::tolerances::Tolerances;
use covquant::verify::{self, Suite, VerifyConfig};

type Matrix = Vec<Vec<Complex64>>;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_rows(op: &Operator) -> Matrix {
    let m = op.matrix();
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: Matrix) -> PyResult<Operator> {
    Operator::from_rows(&rows).map_err(err)
}

/// A Weyl system: a finite torus `Z_N x Z_N` or a truncated planar grid.
#[pyclass(frozen, name = "System")]
struct PySystem(WeylSystem);

#[pymethods]
impl PySystem {
    #[staticmethod]
    fn finite(n: usize) -> PyResult<Self> {
        build_finite_weyl(n).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (m, l, h))]
    fn planar(m: usize, l: f64, h: f64) -> PyResult<Self> {
        build_planar_weyl(m, l, h).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let desc: SystemDescriptor = serde_json::from_str(text).map_err(err)?;
        WeylSystem::from_descriptor(&desc).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0.descriptor()).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.fock_dim()
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.carrier().size()
    }

    #[getter]
    fn d(&self) -> f64 {
        self.0.d_const()
    }

    /// `(q, p)` of the carrier point with the given index.
    fn coordinates(&self, index: usize) -> PyResult<(f64, f64)> {
        let car = self.0.carrier();
        if index >= car.size() {
            return Err(err("index out of range"));
        }
        Ok(car.coordinates(car.element(index)))
    }

    /// Matrix of `W(a, b)`.
    fn weyl(&self, a: i64, b: i64) -> PyResult<Matrix> {
        Ok(to_rows(&*self.0.weyl_operator(GroupElement::new(a, b)).map_err(err)?))
    }
}

/// A quantization kernel `T` (density operator).
#[pyclass(frozen, name = "Kernel")]
struct PyKernel(QuantizationKernel);

#[pymethods]
impl PyKernel {
    #[new]
    fn new(rows: Matrix) -> PyResult<Self> {
        QuantizationKernel::from_operator(from_rows(rows)?, &Tolerances::default())
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn vacuum(dim: usize) -> Self {
        Self(QuantizationKernel::vacuum(dim))
    }

    #[staticmethod]
    #[pyo3(signature = (dim, seed=0))]
    fn random(dim: usize, seed: u64) -> PyResult<Self> {
        let rho = covquant::random::random_density(dim, &mut ChaCha20Rng::seed_from_u64(seed));
        QuantizationKernel::new(rho).map(Self).map_err(err)
    }

    fn matrix(&self) -> Matrix {
        to_rows(self.0.op())
    }
}

fn observable(system: &WeylSystem, f: &Bound<'_, PyAny>) -> PyResult<ClassicalObservable> {
    if let Ok(spec) = f.extract::<String>() {
        let spec = FunctionSpec::parse(&spec).map_err(err)?;
        return spec.observable(system.carrier()).map_err(err);
    }
    let values: Vec<Complex64> = f.extract()?;
    ClassicalObservable::new(system.carrier().clone(), values, None).map_err(err)
}

/// `Γ(f)` for a builtin spec string or a list of values.
#[pyfunction]
fn quantize(system: &PySystem, kernel: &PyKernel, f: &Bound<'_, PyAny>) -> PyResult<Matrix> {
    let f = observable(&system.0, f)?;
    Ok(to_rows(&quantization::quantize(&system.0, &kernel.0, &f).map_err(err)?))
}

/// `g ↦ d⁻¹ Tr[S β_g(T)]` as a list in enumeration order.
#[pyfunction]
fn dual_symbol(system: &PySystem, kernel: &PyKernel, s: Matrix) -> PyResult<Vec<Complex64>> {
    let sym = quantization::dual_symbol(&system.0, &kernel.0, &from_rows(s)?).map_err(err)?;
    Ok(sym.values().to_vec())
}

/// `‖β_g*(Γ(f)) - Γ(f(g·))‖_max`.
#[pyfunction]
fn covariance_residual(system: &PySystem, kernel: &PyKernel, f: &Bound<'_, PyAny>, a: i64, b: i64) -> PyResult<f64> {
    let f = observable(&system.0, f)?;
    quantization::covariance_residual(
        &system.0,
        &kernel.0,
        &f,
        GroupElement::new(a, b),
        &Tolerances::default(),
    )
    .map_err(err)
}

/// A POVM over a partition of the carrier.
#[pyclass(frozen, name = "Povm")]
struct PyPovm(CorePovm);

fn density(rows: Matrix) -> PyResult<DensityOperator> {
    DensityOperator::new(from_rows(rows)?, &Tolerances::default()).map_err(err)
}

#[pymethods]
impl PyPovm {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.partition().cells().iter().map(|c| c.label.clone()).collect()
    }

    #[getter]
    fn normalization_residual(&self) -> f64 {
        self.0.normalization_residual()
    }

    fn effects(&self) -> Vec<Matrix> {
        self.0.effects().iter().map(|e| to_rows(e.op())).collect()
    }

    fn cell_trace_residual(&self) -> f64 {
        povm::cell_trace_residual(&self.0)
    }

    fn probabilities(&self, rho: Matrix) -> PyResult<Vec<f64>> {
        povm::probabilities(&self.0, &density(rho)?).map_err(err)
    }

    /// `[(label, count), ...]` in partition order.
    #[pyo3(signature = (rho, shots, seed=0))]
    fn sample(&self, rho: Matrix, shots: u64, seed: u64) -> PyResult<Vec<(String, u64)>> {
        let counts = povm::sample(&self.0, &density(rho)?, shots, seed).map_err(err)?;
        Ok(counts.into_iter().map(|c| (c.label, c.count)).collect())
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&PovmJson::from(&self.0)).map_err(err)
    }
}

/// Builds `E(B)` for `partition` in `singletons`, `whole`, `quadrants`.
#[pyfunction]
#[pyo3(signature = (system, kernel, partition="singletons"))]
fn build_povm(system: &PySystem, kernel: &PyKernel, partition: &str) -> PyResult<PyPovm> {
    let car = system.0.carrier();
    let partition = match partition {
        "singletons" => OutcomePartition::singletons(car),
        "whole" => OutcomePartition::whole(car),
        "quadrants" => OutcomePartition::quadrants(car).map_err(err)?,
        other => return Err(err(format!("unknown partition '{other}'"))),
    };
    povm::build_povm(&system.0, &kernel.0, &partition, &Tolerances::default())
        .map(PyPovm)
        .map_err(err)
}

/// Recovers `(T, max_deviation)` from a singleton POVM.
#[pyfunction]
fn recover(system: &PySystem, p: &PyPovm) -> PyResult<(Matrix, f64)> {
    let car = system.0.carrier();
    if !p.0.partition().is_singletons() {
        return Err(err("recover needs a singleton POVM"));
    }
    let entries =
        p.0.partition()
            .cells()
            .iter()
            .zip(p.0.effects())
            .map(|(c, e)| (car.element(c.indices[0]), e.op().clone()))
            .collect();
    let table = MapTable::from_entries(car.clone(), entries).map_err(err)?;
    let rec = quantization::recover_kernel(&system.0, &table, &Tolerances::default()).map_err(err)?;
    Ok((to_rows(rec.kernel.op()), rec.max_deviation))
}

/// Runs a verification suite; returns `(pass, report_json)`.
#[pyfunction]
#[pyo3(signature = (suite="finite-exact", system=None, random_kernels=20, seed=0))]
fn run_verify(suite: &str, system: Option<&PySystem>, random_kernels: usize, seed: u64) -> PyResult<(bool, String)> {
    let suite: Suite = suite.parse().map_err(err)?;
    let config = VerifyConfig {
        suite,
        systems: system.map(|s| vec![s.0.descriptor()]).unwrap_or_default(),
        random_kernels,
        seed,
        ..Default::default()
    };
    let report = verify::run(&config).map_err(err)?;
    Ok((report.pass, serde_json::to_string(&report).map_err(err)?))
}

#[pymodule]
fn covquant_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PyPovm>()?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(dual_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(covariance_residual, m)?)?;
    m.add_function(wrap_pyfunction!(build_povm, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
