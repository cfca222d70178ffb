use std::f64::consts::PI;

use num_complex::Complex64;
use pasdfs::fock::pasdfs_oracle;
use pasdfs::phase::{phase_density, phase_distribution};
use pasdfs::witnesses::{hong_mandel, klyshko};
use pasdfs::{pasdfs_amplitudes, q_function, FockAmplitudes, StateSpec, DEFAULT_EPS};
use proptest::prelude::*;

fn build(k: usize, q: usize, n: usize, r: f64, theta: f64) -> Option<FockAmplitudes> {
    pasdfs_amplitudes(&StateSpec::polar(k, q, n, r, theta), DEFAULT_EPS).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_and_phase_free(k in 0usize..4, q in 0usize..4, n in 0usize..4,
                                 r in 0.05f64..2.5, theta in -PI..PI, phi in -PI..PI) {
        let Some(psi) = build(k, q, n, r, theta) else { return Ok(()) };
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let rot = psi.with_global_phase(phi);
        let beta = Complex64::from_polar(r, theta + 0.3);
        prop_assert!((q_function(&psi, beta).unwrap() - q_function(&rot, beta).unwrap()).abs() < 1e-13);
        prop_assert!((phase_density(&psi, phi) - phase_density(&rot, phi)).abs() < 1e-12);
    }

    #[test]
    fn squeezing_is_pi_periodic_and_even_in_theta(k in 0usize..3, q in 0usize..3, n in 0usize..3,
                                                 r in 0.1f64..1.5, theta in 0.0..PI) {
        let Some(a) = build(k, q, n, r, theta) else { return Ok(()) };
        let b = build(k, q, n, r, theta + PI).unwrap();
        let c = build(k, q, n, r, -theta).unwrap();
        for l in [2, 4] {
            let sa = hong_mandel(&a, l).unwrap().value;
            prop_assert!((sa - hong_mandel(&b, l).unwrap().value).abs() < 1e-9 * (1.0 + sa.abs()));
            prop_assert!((sa - hong_mandel(&c, l).unwrap().value).abs() < 1e-9 * (1.0 + sa.abs()));
        }
    }

    #[test]
    fn displacement_phase_shifts_the_phase_distribution(r in 0.3f64..2.0, phi in -PI..PI, theta in 0.0..2.0 * PI) {
        let base = build(0, 0, 0, r, 0.0).unwrap();
        let turned = build(0, 0, 0, r, phi).unwrap();
        prop_assert!((phase_density(&turned, theta) - phase_density(&base, theta - phi)).abs() < 1e-12);
    }
}

#[test]
fn klyshko_matches_oracle_photon_statistics() {
    let spec = StateSpec::new(1, 2, 1, Complex64::new(0.8, 0.2));
    let psi = pasdfs_amplitudes(&spec, DEFAULT_EPS).unwrap();
    let slow = pasdfs_oracle(&spec).unwrap();
    for z in 0..10 {
        let p = |w: usize| slow.probability(w);
        let want = (z + 2) as f64 * p(z) * p(z + 2) - (z + 1) as f64 * p(z + 1).powi(2);
        assert!((klyshko(&psi, z).value - want).abs() < 1e-12);
    }
}

#[test]
fn coherent_phase_peaks_at_argument() {
    let psi = build(0, 0, 0, 1.5, 1.0).unwrap();
    let d = phase_distribution(&psi, 1024).unwrap();
    let (theta, _) = d
        .pairs()
        .fold((0.0, f64::MIN), |best, (t, v)| if v > best.1 { (t, v) } else { best });
    assert!((theta - 1.0).abs() <= d.step());
}
