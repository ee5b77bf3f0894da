use covquant::group::build_finite_weyl;
use covquant::povm::{build_povm, probabilities, sample, OutcomePartition};
use covquant::quantization::QuantizationKernel;
use covquant::random::random_density;
use covquant::tolerances::Tolerances;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn counts_fall_in_multinomial_bands() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let sys = build_finite_weyl(3).unwrap();
    let k = QuantizationKernel::new(random_density(3, &mut rng)).unwrap();
    let rho = random_density(3, &mut rng);
    let povm = build_povm(
        &sys,
        &k,
        &OutcomePartition::singletons(sys.carrier()),
        &Tolerances::default(),
    )
    .unwrap();
    let shots = 100_000u64;
    let p = probabilities(&povm, &rho).unwrap();
    let counts = sample(&povm, &rho, shots, 42).unwrap();
    assert_eq!(counts.iter().map(|c| c.count).sum::<u64>(), shots);
    for (c, &pi) in counts.iter().zip(&p) {
        let mean = shots as f64 * pi;
        let sigma = (shots as f64 * pi * (1.0 - pi)).sqrt();
        assert!(
            (c.count as f64 - mean).abs() <= 4.0 * sigma.max(1.0),
            "{}: {} vs {mean}",
            c.label,
            c.count
        );
    }
    assert_eq!(counts, sample(&povm, &rho, shots, 42).unwrap());
    assert_ne!(counts, sample(&povm, &rho, shots, 43).unwrap());
}

#[test]
fn zero_probability_cells_are_never_drawn() {
    let sys = build_finite_weyl(2).unwrap();
    let povm = build_povm(
        &sys,
        &QuantizationKernel::vacuum(2),
        &OutcomePartition::singletons(sys.carrier()),
        &Tolerances::default(),
    )
    .unwrap();
    let rho = covquant::operator::DensityOperator::basis(2, 0);
    // W(0,1) = Z keeps |0⟩, so only the b-column a = 0 carries weight
    let counts = sample(&povm, &rho, 10_000, 1).unwrap();
    assert_eq!(counts[2].count + counts[3].count, 0);
}
