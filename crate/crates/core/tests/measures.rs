//! POVMs, complex measures and operator integrals on both carrier kinds.

use std::f64::consts::PI;

use covquant::error::Error;
use covquant::group::{build_finite_weyl, build_planar_weyl};
use covquant::observable::ClassicalObservable;
use covquant::operator::{DensityOperator, C64};
use covquant::povm::*;
use covquant::quantization::QuantizationKernel;
use covquant::random::{random_density, random_vector};
use covquant::tolerances::Tolerances;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn basis(dim: usize, k: usize) -> DVector<C64> {
    let mut e = DVector::zeros(dim);
    e[k] = C64::new(1.0, 0.0);
    e
}

fn harmonic(q: f64, p: f64) -> C64 {
    C64::new(0.5 * (q * q + p * p), 0.0)
}

#[test]
fn finite_density_is_positive_on_the_diagonal_and_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 2..=5 {
        let sys = build_finite_weyl(n).unwrap();
        let k = QuantizationKernel::new(random_density(n, &mut rng)).unwrap();
        let psi = random_vector(n, &mut rng);
        let phi = random_vector(n, &mut rng);
        let diag = complex_measure_density(&sys, &k, &psi, &psi).unwrap();
        assert!(diag.values().iter().all(|z| z.re >= -1e-12 && z.im.abs() < 1e-12));
        let off = complex_measure_density(&sys, &k, &psi, &phi).unwrap();
        assert!((off.total() - psi.dotc(&phi)).norm() < 1e-10);

        let one = ClassicalObservable::constant(sys.carrier().clone(), C64::new(1.0, 0.0));
        let v = operator_integral(&off, &one, DomainVerdict::InDomain).unwrap();
        assert!((v - psi.dotc(&phi)).norm() < 1e-10);

        // real f gives a symmetric form
        let f = ClassicalObservable::real(
            sys.carrier().clone(),
            &(0..n * n).map(|i| (i as f64).cos()).collect::<Vec<_>>(),
        )
        .unwrap();
        let swapped = complex_measure_density(&sys, &k, &phi, &psi).unwrap();
        let a = operator_integral(&off, &f, DomainVerdict::InDomain).unwrap();
        let b = operator_integral(&swapped, &f, DomainVerdict::InDomain).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
        assert!(matches!(
            operator_integral(&off, &f, DomainVerdict::Undetermined),
            Err(Error::NotInDomain)
        ));
    }
}

#[test]
fn finite_quasicontinuity_by_exhaustion() {
    let n = 3;
    let sys = build_finite_weyl(n).unwrap();
    let k = QuantizationKernel::new(random_density(n, &mut ChaCha8Rng::seed_from_u64(8))).unwrap();
    let vals: Vec<f64> = (0..n * n).map(|i| 1.0 + i as f64).collect();
    let f = ClassicalObservable::real(sys.carrier().clone(), &vals).unwrap();
    let seq: Vec<_> = (1..=n * n)
        .map(|m| {
            let v: Vec<f64> = vals
                .iter()
                .enumerate()
                .map(|(i, x)| if i < m { *x } else { 0.0 })
                .collect();
            ClassicalObservable::real(sys.carrier().clone(), &v).unwrap()
        })
        .collect();
    let e0 = basis(n, 0);
    let verdict = domain_check(&sys, &k, &harmonic, &e0, &[], &Tolerances::default())
        .unwrap()
        .verdict;
    let rep = quasicontinuity_check(&sys, &k, &seq, &f, &e0, &e0, verdict, &Tolerances::default()).unwrap();
    assert!(rep.monotone);
    assert_eq!(rep.final_residual, 0.0);
}

#[test]
fn planar_quadrants() {
    let tol = Tolerances::default();
    let sys = build_planar_weyl(40, 6.0, 0.1).unwrap();
    let povm = build_povm(
        &sys,
        &QuantizationKernel::vacuum(40),
        &OutcomePartition::quadrants(sys.carrier()).unwrap(),
        &tol,
    )
    .unwrap();
    for e in povm.effects() {
        assert!(e.op().hermitian_residual() < 1e-12);
        assert!(e.op().min_eigenvalue(1e-10).unwrap() > -1e-9);
    }
    // normalization holds on the Fock levels whose Husimi mass stays in the window
    assert!(povm.normalization_residual_on_block(8) < 1e-3);
    assert!(povm.normalization_residual() > 0.5);

    let p = probabilities(&povm, &DensityOperator::basis(40, 0)).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-3);
    // the mirror (a, b) -> (b, a) swaps the mixed quadrants exactly; the axes
    // belong to the "+" side, so the others differ by the axis mass
    assert!((p[1] - p[2]).abs() < 1e-14);
    for x in &p {
        assert!((x - 0.25).abs() < 0.03, "{p:?}");
    }
}

#[test]
fn planar_cell_traces_need_enough_fock_levels() {
    let tol = Tolerances::default();
    let bound = 1e-3 * 36.0 / (2.0 * PI);
    let residual = |m| {
        let sys = build_planar_weyl(m, 6.0, 0.1).unwrap();
        let povm = build_povm(
            &sys,
            &QuantizationKernel::vacuum(m),
            &OutcomePartition::quadrants(sys.carrier()).unwrap(),
            &tol,
        )
        .unwrap();
        cell_trace_residual(&povm)
    };
    assert!(residual(60) <= bound);
    assert!(residual(40) > bound);
}

#[test]
fn planar_domain_sweeps() {
    let tol = Tolerances::default();
    let m = 40;
    let sys = build_planar_weyl(m, 6.0, 0.1).unwrap();
    let k = QuantizationKernel::vacuum(m);
    let e0 = basis(m, 0);

    let near = domain_check(&sys, &k, &harmonic, &e0, &[4.0, 6.0, 8.0], &tol).unwrap();
    assert!(near.diagonal_gap < tol.dom);
    // high Fock probes have not settled yet at L = 8
    assert_eq!(near.verdict, DomainVerdict::Undetermined);
    let far = domain_check(&sys, &k, &harmonic, &e0, &[8.0, 10.0, 12.0], &tol).unwrap();
    assert_eq!(far.verdict, DomainVerdict::InDomain);
    assert!((far.diagonal_sums[2] - 1.0).abs() < 1e-12);

    let growth = |q: f64, p: f64| C64::new((q * q + p * p).exp(), 0.0);
    for sweep in [[4.0, 6.0, 8.0], [8.0, 10.0, 12.0]] {
        let r = domain_check(&sys, &k, &growth, &e0, &sweep, &tol).unwrap();
        assert_eq!(r.verdict, DomainVerdict::Undetermined);
        assert!(r.diagonal_sums.windows(2).all(|w| w[1] > 10.0 * w[0]));
    }
}

#[test]
fn planar_truncated_moments() {
    let tol = Tolerances::default();
    let (m, l, h) = (40, 6.0, 0.1);
    let sys = build_planar_weyl(m, l, h).unwrap();
    let k = QuantizationKernel::vacuum(m);
    let e0 = basis(m, 0);
    let car = sys.carrier();
    let f = ClassicalObservable::from_fn(car.clone(), harmonic).unwrap();
    let verdict = domain_check(&sys, &k, &harmonic, &e0, &[8.0, 10.0, 12.0], &tol)
        .unwrap()
        .verdict;
    let seq: Vec<_> = (1..=50)
        .map(|n| f.map_values(|z| C64::new(z.re.min(n as f64), 0.0)).unwrap())
        .collect();
    let rep = quasicontinuity_check(&sys, &k, &seq, &f, &e0, &e0, verdict, &tol).unwrap();
    assert!(rep.monotone && rep.final_residual <= 1e-6);

    // lattice sum of min(x, n) e^{-x} / 2π with x = (q² + p²)/2, which tends to
    // ∫ min(x, n) e^{-x} dx = 1 - e^{-n}
    let dens = complex_measure_density(&sys, &k, &e0, &e0).unwrap();
    let kk = (l / h) as i64;
    for (n, fn_) in seq.iter().enumerate().take(6) {
        let cap = n as f64 + 1.0;
        let lattice: f64 = (-kk..kk)
            .flat_map(|a| (-kk..kk).map(move |b| (a as f64 * h, b as f64 * h)))
            .map(|(q, p)| {
                let x = 0.5 * (q * q + p * p);
                x.min(cap) * (-x).exp()
            })
            .sum::<f64>()
            * h
            * h
            / (2.0 * PI);
        let got = operator_integral(&dens, fn_, verdict).unwrap().re;
        assert!((got - lattice).abs() < 1e-12, "n={cap}: {got} vs {lattice}");
        assert!((got - (1.0 - (-cap).exp())).abs() < 1e-3);
    }
}

#[test]
fn planar_anti_wick_diagonal() {
    let (m, l, h) = (40, 6.0, 0.1);
    let sys = build_planar_weyl(m, l, h).unwrap();
    let k = QuantizationKernel::vacuum(m);
    let f = ClassicalObservable::from_fn(sys.carrier().clone(), harmonic).unwrap();
    let mut errors = Vec::new();
    for n in 0..=10 {
        let e = basis(m, n);
        let dens = complex_measure_density(&sys, &k, &e, &e).unwrap();
        let v = operator_integral(&dens, &f, DomainVerdict::InDomain).unwrap();
        errors.push((v.re - (n as f64 + 1.0)).abs());
    }
    // the [-6, 6)² window holds the Husimi mass of |n> well only for small n
    assert!(errors[..=5].iter().all(|&e| e < 5e-3), "{errors:?}");
    assert!(errors.windows(2).skip(1).all(|w| w[1] > w[0]), "{errors:?}");
}
