//! Composition of the unsharp-colouring hypotheses with the exact
//! colourability verdict on a ray set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{colourability_search, load_ks_set, ColourabilityVerdict, KsSet};
use crate::colouring::{classify, hypothesis_check, TripodColouring, UnsharpnessTolerance};
use crate::density::DensityFamily;
use crate::error::Result;
use crate::linalg3::{Rotation3, UnitVector3};
use crate::povm::{alpha_profile, check_covariance, AlphaProfile};
use crate::quadrature::QuadratureSpec;
use crate::spin::Outcome;

/// Number of random `(n, R)` pairs used for the covariance check.
pub const COVARIANCE_SAMPLES: usize = 3;
/// Seed of the covariance sample stream.
pub const COVARIANCE_SEED: u64 = 20_240_601;
/// Largest accepted covariance residual.
pub const COVARIANCE_TOLERANCE: f64 = 1e-6;

/// Colours forced on one tripod of the set, for each observed outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriadDerivation {
    pub triad: (usize, usize, usize),
    pub colourings: Vec<TripodColouring>,
    /// One AT and two AF for every outcome.
    pub definite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub family: DensityFamily,
    pub epsilon: f64,
    pub delta: UnsharpnessTolerance,
    pub set: String,
    pub covariance_residual: f64,
    pub covariance_ok: bool,
    pub alphas: AlphaProfile,
    pub hypotheses_ok: bool,
    pub triads: Vec<TriadDerivation>,
    pub verdict: ColourabilityVerdict,
    pub conclusion: String,
}

/// Runs the demonstration on a registry set.
pub fn theorem1_demonstration(
    family: DensityFamily,
    epsilon: f64,
    delta: UnsharpnessTolerance,
    ks_name: &str,
    q: &QuadratureSpec,
) -> Result<Theorem1Report> {
    let ks = load_ks_set(ks_name)?;
    theorem1_on_set(family, epsilon, delta, &ks, q)
}

/// Runs the demonstration on an already loaded set.
pub fn theorem1_on_set(
    family: DensityFamily,
    epsilon: f64,
    delta: UnsharpnessTolerance,
    ks: &KsSet,
    q: &QuadratureSpec,
) -> Result<Theorem1Report> {
    let w = family.build(epsilon)?;

    let mut rng = ChaCha8Rng::seed_from_u64(COVARIANCE_SEED);
    let mut covariance_residual = 0.0f64;
    for _ in 0..COVARIANCE_SAMPLES {
        let n = UnitVector3::random(&mut rng);
        let r = Rotation3::random(&mut rng);
        covariance_residual = covariance_residual.max(check_covariance(&w, &n, &r, q)?);
    }
    let covariance_ok = covariance_residual <= COVARIANCE_TOLERANCE;

    let alphas = alpha_profile(&w, q)?;
    let hypotheses_ok = hypothesis_check(&alphas, delta);

    let triads = ks
        .triads
        .iter()
        .map(|&triad| {
            let colourings: Vec<TripodColouring> =
                Outcome::ALL.iter().map(|&o| classify(&alphas, o, delta)).collect();
            let definite = colourings.iter().all(TripodColouring::is_definite);
            TriadDerivation {
                triad,
                colourings,
                definite,
            }
        })
        .collect();

    let verdict = colourability_search(ks);
    // A colourable set never yields a contradiction, whatever the hypotheses.
    let conclusion = if verdict.satisfiable {
        "no contradiction (colourable)"
    } else if !(covariance_ok && hypotheses_ok) {
        "hypotheses not met"
    } else {
        "contradiction established"
    };

    Ok(Theorem1Report {
        family,
        epsilon,
        delta,
        set: ks.name.clone(),
        covariance_residual,
        covariance_ok,
        alphas,
        hypotheses_ok,
        triads,
        verdict,
        conclusion: conclusion.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(eps: f64, set: &str) -> Theorem1Report {
        theorem1_demonstration(
            DensityFamily::UniformCap,
            eps,
            UnsharpnessTolerance::DEFAULT,
            set,
            &QuadratureSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn peres33_below_threshold_is_contradictory() {
        let r = run(0.4, "peres33");
        assert_eq!(r.conclusion, "contradiction established");
        assert!(r.triads.iter().all(|t| t.definite));
        assert_eq!(r.triads.len(), 16);
    }

    #[test]
    fn wide_cap_fails_hypotheses() {
        let r = run(1.0, "peres33");
        assert_eq!(r.conclusion, "hypotheses not met");
        assert!(r.alphas.alpha4 < 0.9);
    }

    #[test]
    fn coordinate_triad_never_contradicts() {
        assert_eq!(run(0.4, "coordinate-triad").conclusion, "no contradiction (colourable)");
        assert_eq!(run(1.0, "coordinate-triad").conclusion, "no contradiction (colourable)");
    }
}
