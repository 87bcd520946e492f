//! Analytic kernels against independent numerical oracles.

use proptest::prelude::*;
use smallcell::special::{hyp2f1, rho, Hyp2F1Args};
use smallcell::network::{pmf_cutoff, user_count_pmf, void_probability};
use smallcell::rate::user_share;

// Euler integral with t = s^{1/b}: ₂F₁(1, b; b+1; −T) = ∫₀¹ ds / (1 + T s^{1/b}),
// then s = w⁴ to smooth the origin. Composite Simpson with Richardson
// extrapolation.
fn kernel_oracle(threshold: f64, alpha: f64) -> f64 {
    let inv_b = alpha / (alpha - 2.0);
    let simpson = |n: usize| {
        let h = 1.0 / n as f64;
        let f = |w: f64| 4.0 * w.powi(3) / (1.0 + threshold * w.powf(4.0 * inv_b));
        let mut acc = f(0.0) + f(1.0);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let (coarse, fine) = (simpson(1 << 16), simpson(1 << 17));
    fine + (fine - coarse) / 15.0
}

fn rho_oracle(threshold: f64, alpha: f64) -> f64 {
    2.0 * threshold / (alpha - 2.0) * kernel_oracle(threshold, alpha)
}

#[test]
fn rho_matches_euler_integral() {
    for alpha in [2.5, 3.0, 3.67, 4.0, 5.5] {
        for threshold in [1e-3, 0.1, 0.5, 1.0, 3.162_277_660_168_379_5, 10.0, 100.0, 1e4] {
            let got = rho(threshold, alpha).unwrap();
            let want = rho_oracle(threshold, alpha);
            assert!(((got - want) / want).abs() < 1e-9, "alpha {alpha} T {threshold}: {got} vs {want}");
        }
    }
}

#[test]
fn rho_alpha_four_closed_form() {
    for threshold in [1e-4, 0.3, 1.0, 7.0, 1e3, 1e8] {
        let root = f64::sqrt(threshold);
        let got = rho(threshold, 4.0).unwrap();
        assert!(((got - root * root.atan()) / got).abs() < 1e-12);
    }
}

#[test]
fn frozen_fixtures() {
    let cases = [
        (0.3, 0.919_970_710_415_330_3),
        (0.75, 0.834_299_128_566_681_2),
        (2.0, 0.692_913_038_191_536_3),
        (10.0, 0.425_692_667_910_707_05),
        (1000.0, 0.061_456_130_172_151_72),
        (1e8, 3.305_284_350_261_336e-4),
    ];
    let b = 1.0 - 2.0 / 3.67;
    for (t, want) in cases {
        let got = hyp2f1(Hyp2F1Args::new(1.0, b, b + 1.0, -t)).unwrap();
        assert!(((got - want) / want).abs() < 1e-12, "T {t}: {got}");
    }
    let got = rho(10f64.sqrt(), 3.67).unwrap();
    assert!((got / 2.332_508_447_411_866_6 - 1.0).abs() < 1e-12);
}

#[test]
fn pmf_zero_is_void_probability() {
    for mu in [1e-3, 0.25, 0.5, 1.0, 2.0, 4.0, 50.0] {
        assert!((user_count_pmf(0, mu) - void_probability(mu)).abs() < 1e-14);
    }
}

proptest! {
    #[test]
    fn pmf_normalised_with_mean_mu(mu in 0.01f64..40.0) {
        let cutoff = pmf_cutoff(mu);
        let (mut mass, mut mean) = (0.0, 0.0);
        for n in 0..=cutoff {
            let p = user_count_pmf(n, mu);
            mass += p;
            mean += n as f64 * p;
        }
        prop_assert!((mass - 1.0).abs() < 1e-10);
        prop_assert!((mean - mu).abs() < 1e-8 * mu.max(1.0));
    }

    #[test]
    fn user_share_decreases_from_one(mu in 1e-6f64..100.0, step in 1e-3f64..10.0) {
        let s = user_share(mu);
        prop_assert!(s < 1.0 && s > 0.0);
        prop_assert!(user_share(mu + step) < s);
    }

    #[test]
    fn rho_oracle_agreement_random(threshold in 1e-3f64..1e3, alpha in 2.2f64..6.0) {
        let got = rho(threshold, alpha).unwrap();
        let want = rho_oracle(threshold, alpha);
        prop_assert!(((got - want) / want).abs() < 1e-8);
    }
}

#[test]
fn user_share_limit_is_one() {
    assert_eq!(user_share(0.0), 1.0);
    assert!((user_share(1e-9) - 1.0).abs() < 1e-9);
    assert!((user_share(1e-4) - 1.0).abs() < 1e-4);
}
