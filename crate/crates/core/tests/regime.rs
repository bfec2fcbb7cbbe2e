use hardy_blowup::regime::{threshold_margins, verdict_from_mu_star, verdict_from_p_star};
use hardy_blowup::{characteristic_roots, critical_mu, existence_verdict, ProblemParams, ProblemParamsF32, Verdict};
use proptest::prelude::*;

/// Roots of `beta^2 - beta + mu = 0` by the quadratic formula.
fn quadratic_roots(mu: f64) -> (f64, f64) {
    let disc = 1.0 - 4.0 * mu;
    ((1.0 - disc.sqrt()) / 2.0, (1.0 + disc.sqrt()) / 2.0)
}

#[test]
fn roots_match_quadratic_formula() {
    for mu in [-2.0, -0.75, 0.0, 0.1, 0.25] {
        let r = characteristic_roots(mu).unwrap();
        let (lo, hi) = quadratic_roots(mu);
        assert!((r.beta_minus - lo).abs() < 1e-14 && (r.beta_plus - hi).abs() < 1e-14);
        for b in [r.beta_minus, r.beta_plus] {
            assert!((b * (b - 1.0) + mu).abs() < 1e-14);
        }
    }
    let q = characteristic_roots(0.25).unwrap();
    assert!(q.degenerate && q.beta_minus == 0.5 && q.beta_plus == 0.5);
    assert!(characteristic_roots(0.3).is_none());
}

#[test]
fn verdicts_on_reference_points() {
    let v = |mu, p, s| existence_verdict(ProblemParams::new(mu, p, s).unwrap());
    assert_eq!(v(0.0, 3.0, 0.0).verdict, Verdict::Existence);
    assert_eq!(v(0.0, 3.0, 2.0).verdict, Verdict::Nonexistence);
    let quarter = v(0.25, 3.0, 3.0);
    assert_eq!(quarter.verdict, Verdict::Nonexistence);
    assert_eq!(quarter.threshold_s, Some(3.0));
    let r = v(-0.75, 2.0, 1.0);
    let (lo, _) = quadratic_roots(-0.75);
    assert!((r.threshold_s.unwrap() - (lo + 2.0)).abs() < 1e-14);
    assert_eq!(r.verdict, Verdict::Existence);
    assert_eq!(v(0.3, 2.0, 0.0).verdict, Verdict::NoSuperharmonics);
}

#[test]
fn critical_mu_reference_points() {
    assert!(critical_mu(3.0f64, 2.0).abs() < 1e-15);
    assert!((critical_mu(3.0f64, 3.0) - 0.25).abs() < 1e-15);
    let m = critical_mu(2.0f64, 0.0);
    assert!((m + 6.0).abs() < 1e-13);
    // beta_-(mu*) equals the boundary exponent (s-2)/(p-1) = -2.
    assert!((quadratic_roots(m).0 + 2.0).abs() < 1e-13);
}

#[test]
fn single_precision_agrees() {
    let r = existence_verdict(ProblemParamsF32::new(0.0, 3.0, 0.0).unwrap());
    assert_eq!(r.verdict, Verdict::Existence);
    assert_eq!(r.threshold_s, Some(2.0f32));
}

proptest! {
    #[test]
    fn three_parameterizations_agree(mu in -3.0f64..=0.25, p in 1.001f64..=5.0, s in -2.0f64..=5.0) {
        let prm = ProblemParams::new(mu, p, s).unwrap();
        let (ms, mp, mm) = threshold_margins(prm).unwrap();
        prop_assume!(ms.abs() > 1e-10 && mp.abs() > 1e-10 && mm.map_or(true, |m| m.abs() > 1e-10));
        let by_s = existence_verdict(prm).verdict;
        prop_assert_eq!(by_s, verdict_from_p_star(prm));
        prop_assert_eq!(by_s, verdict_from_mu_star(prm));
    }

    #[test]
    fn existence_iff_exponent_below_beta_minus(mu in -3.0f64..0.25, p in 1.01f64..5.0, s in -2.0f64..5.0) {
        let prm = ProblemParams::new(mu, p, s).unwrap();
        let b = (s - 2.0) / (p - 1.0);
        let lo = quadratic_roots(mu).0;
        prop_assume!((b - lo).abs() > 1e-9);
        prop_assert_eq!(existence_verdict(prm).verdict == Verdict::Existence, b < lo);
    }
}
