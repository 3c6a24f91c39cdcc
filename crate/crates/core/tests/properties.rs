use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unsharp_ks::colouring::Colour;
use unsharp_ks::density::{DensityFamily, ErrorDensity};
use unsharp_ks::ksets::{
    colourability_search, colourability_search_with_order, load_ks_set, verify_colouring, ExactRay, KsSet, Q2Scalar,
};
use unsharp_ks::linalg3::{CVector3, UnitVector3};
use unsharp_ks::montecarlo::DirectionSampler;
use unsharp_ks::povm::{alpha_profile, build_povm, effect_bounds, outcome_probability};
use unsharp_ks::quadrature::QuadratureSpec;
use unsharp_ks::spin::{sharp_probabilities, Outcome};

fn arb_family() -> impl Strategy<Value = DensityFamily> {
    prop_oneof![Just(DensityFamily::UniformCap), Just(DensityFamily::TruncatedGaussian)]
}

fn arb_direction() -> impl Strategy<Value = UnitVector3> {
    (0.0..PI, 0.0..2.0 * PI).prop_map(|(t, p)| UnitVector3::from_spherical(t, p))
}

fn arb_state() -> impl Strategy<Value = CVector3> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let psi = CVector3::new(
                Complex64::new(v[0], v[1]),
                Complex64::new(v[2], v[3]),
                Complex64::new(v[4], v[5]),
            );
            let n = psi.norm();
            psi.unscale(n)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn effects_are_bounded_and_sum_to_identity(
        fam in arb_family(), eps in 0.02f64..PI, n in arb_direction(), psi in arb_state(),
    ) {
        let povm = build_povm(&n, &fam.build(eps).unwrap(), &QuadratureSpec::default()).unwrap();
        let (lo, hi) = effect_bounds(&povm);
        prop_assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
        prop_assert!(povm.identity_residual() < 1e-10);
        let total: f64 = Outcome::ALL.iter().map(|&o| outcome_probability(&psi, &povm, o).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn alpha_sum_rules(fam in arb_family(), eps in 0.001f64..PI) {
        let a = alpha_profile(&fam.build(eps).unwrap(), &QuadratureSpec::default()).unwrap();
        let (r1, r2) = a.sum_rule_residuals();
        prop_assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9);
        for v in a.as_array() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn sharp_probabilities_form_a_distribution(n in arb_direction(), psi in arb_state()) {
        let p = sharp_probabilities(&n, &psi);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ray_canonicalization(x in -4i64..5, y in -4i64..5, z in -4i64..5, a in -3i64..4, b in -3i64..4) {
        prop_assume!((x, y, z) != (0, 0, 0) && (a, b) != (0, 0));
        let comps = [Q2Scalar::from_ints(x, 1), Q2Scalar::from_ints(y, 0), Q2Scalar::from_ints(z, -1)];
        let r = ExactRay::new(comps.clone()).unwrap();
        prop_assert_eq!(&ExactRay::new(r.components().clone()).unwrap(), &r);
        let neg = comps.clone().map(|c| -c);
        prop_assert_eq!(&ExactRay::new(neg).unwrap(), &r);
        let s = Q2Scalar::from_ints(a, b);
        let scaled = comps.map(|c| &c * &s);
        prop_assert_eq!(&ExactRay::new(scaled).unwrap(), &r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Random subsets of Peres-33: SAT verdicts verify, UNSAT verdicts are
    /// reproduced under a shuffled order.
    #[test]
    fn solver_soundness_on_subsets(mask in any::<u64>(), shuffle_seed in any::<u64>()) {
        let peres = load_ks_set("peres33").unwrap();
        let rays: Vec<ExactRay> = peres
            .rays
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1 || mask >> 33 & 1 == 1)
            .map(|(_, r)| r.clone())
            .collect();
        let ks = KsSet::from_rays("subset", rays).unwrap();
        ks.verify().unwrap();
        let v = colourability_search(&ks);
        if v.satisfiable {
            prop_assert!(verify_colouring(&ks, v.assignment.as_ref().unwrap()).unwrap());
        } else {
            let mut order: Vec<usize> = (0..ks.rays.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
            prop_assert!(!colourability_search_with_order(&ks, &order).satisfiable);
        }
    }
}

#[test]
fn every_peres33_assignment_fails_on_samples() {
    let p = load_ks_set("peres33").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let c: Vec<Colour> = (0..33)
            .map(|_| if rand::Rng::gen_bool(&mut rng, 0.3) { Colour::AT } else { Colour::AF })
            .collect();
        assert!(!verify_colouring(&p, &c).unwrap());
    }
}

/// Kolmogorov–Smirnov distance of the sampled polar angles against the
/// density's own cone-mass CDF.
fn ks_distance(w: &ErrorDensity, n: usize, seed: u64) -> f64 {
    let axis = UnitVector3::normalize(-0.2, 0.7, 0.4).unwrap();
    let sampler = DirectionSampler::new(w, &axis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut thetas: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng).angle_to(&axis)).collect();
    thetas.sort_by(f64::total_cmp);
    thetas
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = w.mass_within(t).unwrap();
            (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampled_angles_pass_kolmogorov_smirnov() {
    let n = 4000;
    let bound = 1.63 / (n as f64).sqrt();
    for w in [
        ErrorDensity::uniform_cap(0.3).unwrap(),
        ErrorDensity::uniform_cap(2.0).unwrap(),
        ErrorDensity::truncated_gaussian(0.25).unwrap(),
        ErrorDensity::truncated_gaussian(1.5).unwrap(),
    ] {
        let d = ks_distance(&w, n, 5);
        assert!(d <= bound, "{:?}: D = {d}, bound {bound}", w);
    }
}

#[test]
fn full_sphere_has_zero_mean_z() {
    let w = ErrorDensity::uniform_cap(PI).unwrap();
    let s = DirectionSampler::new(&w, &UnitVector3::Z);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 1_000_000;
    let mean: f64 = (0..n).map(|_| s.sample(&mut rng).z()).sum::<f64>() / n as f64;
    // Var(z) = 1/3 on the uniform sphere.
    assert!(mean.abs() <= 3.0 * (1.0 / 3.0 / n as f64).sqrt(), "{mean}");
}

#[test]
fn ray_set_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("unsharp-ks-props-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("peres.rays");
    let p = load_ks_set("peres33").unwrap();
    let text: String = p.rays.iter().map(|r| format!("{r}\n")).collect();
    std::fs::write(&path, text).unwrap();
    let q = KsSet::from_file(&path).unwrap();
    assert_eq!((q.rays, q.pairs, q.triads), (p.rays, p.pairs, p.triads));
    std::fs::remove_dir_all(&dir).unwrap();
}
