mod common;

use std::f64::consts::PI;

use cvtomo::analysis;
use cvtomo::channel::{self, LossChannelSpec};
use cvtomo::fock::{self, SqueezedStateParams};
use cvtomo::homodyne;
use cvtomo::linalg::{self, max_abs_diff};
use proptest::prelude::*;

use common::random_state;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn squeezed_thermal_is_valid(sq in -6.0..-0.1f64, extra in 0.0..4.0f64, theta0 in 0.0..PI) {
        let anti = -sq + extra;
        let p = SqueezedStateParams::from_db(sq, anti, theta0).unwrap();
        let built = fock::squeezed_thermal(&p, 12).unwrap();
        built.rho.validate().unwrap();
        prop_assert!(built.truncation_deficit >= 0.0);
    }

    #[test]
    fn heisenberg_violations_are_rejected(sq in -6.0..-0.5f64, short in 0.1..0.4f64) {
        prop_assert!(SqueezedStateParams::from_db(sq, -sq - short, 0.0).is_err());
    }

    #[test]
    fn variance_is_a_two_theta_sinusoid(seed in any::<u64>()) {
        let rho = random_state(seed, 8, 3);
        let thetas: Vec<f64> = (0..24).map(|k| PI * k as f64 / 24.0).collect();
        let v: Vec<f64> = thetas.iter().map(|&t| fock::variance(&rho, t)).collect();
        let n = v.len() as f64;
        let c0 = v.iter().sum::<f64>() / n;
        let c = thetas.iter().zip(&v).map(|(t, v)| v * (2.0 * t).cos()).sum::<f64>() * 2.0 / n;
        let s = thetas.iter().zip(&v).map(|(t, v)| v * (2.0 * t).sin()).sum::<f64>() * 2.0 / n;
        for (t, v) in thetas.iter().zip(&v) {
            prop_assert!((c0 + c * (2.0 * t).cos() + s * (2.0 * t).sin() - v).abs() < 1e-10);
        }
    }

    #[test]
    fn phase_rotation_preserves_spectrum_and_populations(seed in any::<u64>(), phi in -7.0..7.0f64) {
        let rho = random_state(seed, 7, 4);
        let rot = fock::phase_rotate(&rho, phi);
        let a = rho.eigenvalues();
        let b = rot.eigenvalues();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in rho.populations().iter().zip(rot.populations()) {
            prop_assert!((x - y).abs() < 1e-15);
        }
        prop_assert!((fock::variance(&rot, 0.3 + phi) - fock::variance(&rho, 0.3)).abs() < 1e-12);
    }

    #[test]
    fn kraus_and_unitary_routes_agree(seed in any::<u64>(), eta in 0.0..=1.0f64) {
        let rho = random_state(seed, 6, 6);
        let spec = LossChannelSpec::for_dim(eta, 6).unwrap();
        let u = channel::apply_loss_unitary(&rho, &spec).unwrap();
        let k = channel::apply_loss_kraus(&rho, eta).unwrap();
        prop_assert!(max_abs_diff(u.matrix(), k.matrix()) < 1e-10);
    }

    #[test]
    fn loss_composes(seed in any::<u64>(), e1 in 0.0..=1.0f64, e2 in 0.0..=1.0f64) {
        let rho = random_state(seed, 8, 2);
        let twice = channel::apply_loss(&channel::apply_loss(&rho, e1).unwrap(), e2).unwrap();
        let once = channel::apply_loss(&rho, e1 * e2).unwrap();
        prop_assert!(max_abs_diff(twice.matrix(), once.matrix()) < 1e-9);
    }

    #[test]
    fn beam_splitter_phase_drops_out(seed in any::<u64>(), eta in 0.0..=1.0f64, phi in -3.2..3.2f64) {
        let rho = random_state(seed, 5, 3);
        let a = channel::apply_loss_unitary(&rho, &LossChannelSpec::new(eta, 0.0, 5).unwrap()).unwrap();
        let b = channel::apply_loss_unitary(&rho, &LossChannelSpec::new(eta, phi, 5).unwrap()).unwrap();
        prop_assert!(max_abs_diff(a.matrix(), b.matrix()) < 1e-10);
    }

    #[test]
    fn loss_follows_variance_law(sq in -6.0..-0.5f64, extra in 0.0..3.0f64, eta in 0.0..=1.0f64) {
        let p = SqueezedStateParams::from_db(sq, -sq + extra, 0.0).unwrap();
        let rho = fock::squeezed_thermal(&p, 16).unwrap().rho;
        let out = channel::apply_loss(&rho, eta).unwrap();
        for theta in [0.0, 0.4, PI / 2.0] {
            let want = eta * fock::variance(&rho, theta) + (1.0 - eta) * 0.5;
            prop_assert!((fock::variance(&out, theta) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn pdf_is_normalized_and_pi_symmetric(seed in any::<u64>(), theta in 0.0..PI) {
        let rho = random_state(seed, 6, 2);
        // Simpson over [−12, 12]
        let steps = 2400;
        let h = 24.0 / steps as f64;
        let mass: f64 = (0..=steps)
            .map(|i| {
                let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * homodyne::quadrature_pdf(&rho, theta, -12.0 + i as f64 * h)
            })
            .sum::<f64>() * h / 3.0;
        prop_assert!((mass - 1.0).abs() < 1e-10);
        for x in [-1.3, 0.2, 2.1] {
            let a = homodyne::quadrature_pdf(&rho, theta + PI, x);
            let b = homodyne::quadrature_pdf(&rho, theta, -x);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_state(s1, 6, 2);
        let b = random_state(s2, 6, 5);
        let f = analysis::fidelity(&a, &b).unwrap();
        let g = analysis::fidelity(&b, &a).unwrap();
        prop_assert!((f - g).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(f < 1.0 - 1e-6);
    }

    #[test]
    fn squeezing_axis_moves_with_rotation(phi in 0.0..3.0f64) {
        let rho = common::reference_state(16);
        let a = analysis::squeezing_metrics(&rho);
        let b = analysis::squeezing_metrics(&fock::phase_rotate(&rho, phi));
        prop_assert!((a.db_min - b.db_min).abs() < 1e-10 && (a.db_max - b.db_max).abs() < 1e-10);
        let d = (b.theta_min - a.theta_min - phi).rem_euclid(PI);
        prop_assert!(d.min(PI - d) < 1e-9);
    }

    #[test]
    fn digitizer_output_sits_on_levels(bits in 2u32..=12, seed in any::<u64>()) {
        let rho = fock::vacuum(4).unwrap();
        let ds = homodyne::sample_at_phase(&rho, 0.0, 200, seed).unwrap();
        let range = 2.0;
        let q = homodyne::digitize(&ds, bits, range).unwrap();
        let step = 2.0 * range / (1u64 << bits) as f64;
        for r in &q.records {
            let k = (r.value + range) / step - 0.5;
            prop_assert!((k - k.round()).abs() < 1e-9);
            prop_assert!(r.value.abs() < range);
        }
    }
}

#[test]
fn fidelity_is_one_only_for_equal_states() {
    for seed in 0..10 {
        let a = random_state(seed, 6, 3);
        assert!((analysis::fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-10);
        let b = fock::phase_rotate(&a, 1e-3);
        let diff = linalg::max_abs_diff(a.matrix(), b.matrix());
        assert!(diff > 1e-8);
        assert!(analysis::fidelity(&a, &b).unwrap() < 1.0);
    }
}

#[test]
fn eta_sweep_curve_is_continuous() {
    let rho = common::reference_state(16);
    let target = channel::apply_loss(&rho, 0.4).unwrap();
    let res =
        analysis::eta_sweep(&rho, &target, &analysis::eta_grid(0.001).unwrap(), true).unwrap();
    let f = &res.fidelities;
    for k in 1..f.len() - 1 {
        let jump = (f[k + 1] - f[k]).abs();
        let local = (f[k] - f[k - 1]).abs().max(1e-9);
        assert!(jump <= 10.0 * local + 1e-6, "jump at eta {}", res.etas[k]);
    }
}
