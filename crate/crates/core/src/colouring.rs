//! Threshold colouring of eigenrays (almost-true / almost-false) and the
//! critical inaccuracy below which every tripod gets one AT and two AF.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::density::ErrorDensity;
use crate::error::{Error, Result};
use crate::povm::{alpha_profile, AlphaProfile};
use crate::quadrature::QuadratureSpec;
use crate::spin::Outcome;

/// Unsharpness tolerance `δ ∈ [0, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnsharpnessTolerance(f64);

impl UnsharpnessTolerance {
    pub const DEFAULT: UnsharpnessTolerance = UnsharpnessTolerance(0.1);

    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && (0.0..0.5).contains(&delta)) {
            return Err(Error::validation(format!(
                "unsharpness tolerance δ = {delta} must satisfy 0 ≤ δ < 0.5"
            )));
        }
        Ok(UnsharpnessTolerance(delta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for UnsharpnessTolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colour {
    /// Almost true.
    AT,
    /// Almost false.
    AF,
    Uncoloured,
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Colour::AT => "AT",
            Colour::AF => "AF",
            Colour::Uncoloured => "uncoloured",
        })
    }
}

/// Colours of the three eigenrays of `S_n` (ordered +1, 0, −1) after
/// outcome `outcome` was observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripodColouring {
    pub outcome: Outcome,
    pub eigenvalues: [f64; 3],
    pub colours: [Colour; 3],
}

impl TripodColouring {
    pub fn count(&self, colour: Colour) -> usize {
        self.colours.iter().filter(|&&c| c == colour).count()
    }

    /// One AT and two AF.
    pub fn is_definite(&self) -> bool {
        self.count(Colour::AT) == 1 && self.count(Colour::AF) == 2
    }
}

/// Eigenvalue `≥ 1 − δ` gives AT, `≤ δ` gives AF, anything between is left
/// uncoloured.
pub fn classify(alphas: &AlphaProfile, outcome: Outcome, delta: UnsharpnessTolerance) -> TripodColouring {
    let d = delta.value();
    let eigenvalues = alphas.effect_eigenvalues(outcome);
    let colours = eigenvalues.map(|v| {
        if v >= 1.0 - d {
            Colour::AT
        } else if v <= d {
            Colour::AF
        } else {
            Colour::Uncoloured
        }
    });
    TripodColouring {
        outcome,
        eigenvalues,
        colours,
    }
}

/// Which inequality of the hypothesis check is involved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `α₁ ≥ 1 − δ`
    Alpha1Lower,
    /// `α₂ ≤ δ`
    Alpha2Upper,
    /// `α₃ ≤ δ`
    Alpha3Upper,
    /// `α₄ ≥ 1 − δ`
    Alpha4Lower,
}

impl Constraint {
    const ALL: [Constraint; 4] = [
        Constraint::Alpha1Lower,
        Constraint::Alpha2Upper,
        Constraint::Alpha3Upper,
        Constraint::Alpha4Lower,
    ];

    /// Signed slack; non-negative when satisfied.
    pub fn slack(self, alphas: &AlphaProfile, delta: UnsharpnessTolerance) -> f64 {
        let d = delta.value();
        match self {
            Constraint::Alpha1Lower => alphas.alpha1 - (1.0 - d),
            Constraint::Alpha2Upper => d - alphas.alpha2,
            Constraint::Alpha3Upper => d - alphas.alpha3,
            Constraint::Alpha4Lower => alphas.alpha4 - (1.0 - d),
        }
    }
}

/// `min(α₁, α₄) ≥ 1 − δ` and `max(α₂, α₃) ≤ δ`.
pub fn hypothesis_check(alphas: &AlphaProfile, delta: UnsharpnessTolerance) -> bool {
    Constraint::ALL.iter().all(|c| c.slack(alphas, delta) >= 0.0)
}

fn violated(alphas: &AlphaProfile, delta: UnsharpnessTolerance) -> Option<Constraint> {
    Constraint::ALL
        .iter()
        .copied()
        .min_by(|a, b| a.slack(alphas, delta).total_cmp(&b.slack(alphas, delta)))
        .filter(|c| c.slack(alphas, delta) < 0.0)
}

/// Result of the critical-inaccuracy search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEpsilon {
    /// Largest ε (radians) for which the hypothesis holds for every scanned
    /// ε up to it.
    pub epsilon: f64,
    pub degrees: f64,
    /// The first constraint to fail just above `epsilon`; `None` when the
    /// hypothesis holds on all of `(0, π]`.
    pub binding: Option<Constraint>,
    pub alphas_at_critical: AlphaProfile,
    pub grid_step: f64,
    pub bisection_tolerance: f64,
}

pub const GRID_STEP: f64 = 1e-3;
pub const BISECTION_TOL: f64 = 1e-6;

/// Grid scan of `(0, π]` at step `1e-3`, then bisection to `1e-6` on the
/// first failing interval.
///
/// When the first grid point already fails, the scan continues by halving
/// below it so that small tolerances still resolve a positive threshold.
pub fn critical_epsilon<F>(delta: UnsharpnessTolerance, family: F, q: &QuadratureSpec) -> Result<CriticalEpsilon>
where
    F: Fn(f64) -> Result<ErrorDensity>,
{
    let holds = |eps: f64| -> Result<(bool, AlphaProfile)> {
        let alphas = alpha_profile(&family(eps)?, q)?;
        Ok((hypothesis_check(&alphas, delta), alphas))
    };

    let pi = std::f64::consts::PI;
    let steps = (pi / GRID_STEP).floor() as usize;
    let mut grid: Vec<f64> = (1..=steps).map(|k| k as f64 * GRID_STEP).collect();
    if grid.last().is_some_and(|&g| g < pi) {
        grid.push(pi);
    }

    let (mut good, mut bad) = match holds(grid[0])? {
        (true, _) => {
            let mut last_good = grid[0];
            let mut first_bad = None;
            for &eps in &grid[1..] {
                if holds(eps)?.0 {
                    last_good = eps;
                } else {
                    first_bad = Some(eps);
                    break;
                }
            }
            match first_bad {
                Some(b) => (last_good, b),
                None => {
                    let (_, alphas) = holds(pi)?;
                    return Ok(CriticalEpsilon {
                        epsilon: pi,
                        degrees: 180.0,
                        binding: None,
                        alphas_at_critical: alphas,
                        grid_step: GRID_STEP,
                        bisection_tolerance: BISECTION_TOL,
                    });
                }
            }
        }
        (false, _) => {
            let mut upper = grid[0];
            let mut found = None;
            for _ in 0..40 {
                let lower = 0.5 * upper;
                if holds(lower)?.0 {
                    found = Some(lower);
                    break;
                }
                upper = lower;
            }
            match found {
                Some(lower) => (lower, upper),
                None => {
                    return Err(Error::Domain(format!(
                        "hypothesis never satisfied for ε down to {upper:e} at δ = {}",
                        delta.value()
                    )))
                }
            }
        }
    };

    while bad - good > BISECTION_TOL * good.clamp(1e-3, 1.0) {
        let mid = 0.5 * (good + bad);
        if holds(mid)?.0 {
            good = mid;
        } else {
            bad = mid;
        }
    }
    let (_, alphas_bad) = holds(bad)?;
    let (_, alphas_good) = holds(good)?;
    Ok(CriticalEpsilon {
        epsilon: good,
        degrees: good.to_degrees(),
        binding: violated(&alphas_bad, delta),
        alphas_at_critical: alphas_good,
        grid_step: GRID_STEP,
        bisection_tolerance: BISECTION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityFamily;
    use crate::povm::uniform_cap_alphas;
    use std::f64::consts::PI;

    fn delta(d: f64) -> UnsharpnessTolerance {
        UnsharpnessTolerance::new(d).unwrap()
    }

    #[test]
    fn tolerance_range() {
        assert!(UnsharpnessTolerance::new(0.5).is_err());
        assert!(UnsharpnessTolerance::new(-0.01).is_err());
        assert!(UnsharpnessTolerance::new(0.0).is_ok());
        assert!(UnsharpnessTolerance::new(0.4999).is_ok());
    }

    #[test]
    fn classify_examples() {
        let a = uniform_cap_alphas(0.3).unwrap();
        let c = classify(&a, Outcome::Zero, delta(0.1));
        assert_eq!(c.colours, [Colour::AF, Colour::AT, Colour::AF]);

        let a = uniform_cap_alphas(PI).unwrap();
        for o in Outcome::ALL {
            assert_eq!(classify(&a, o, delta(0.1)).count(Colour::Uncoloured), 3);
        }

        let sharp = AlphaProfile::SHARP;
        assert_eq!(classify(&sharp, Outcome::Plus, delta(0.0)).colours, [Colour::AT, Colour::AF, Colour::AF]);
        assert_eq!(classify(&sharp, Outcome::Minus, delta(0.0)).colours, [Colour::AF, Colour::AF, Colour::AT]);
    }

    #[test]
    fn hypothesis_examples() {
        assert!(hypothesis_check(&uniform_cap_alphas(0.4).unwrap(), delta(0.1)));
        assert!(!hypothesis_check(&uniform_cap_alphas(0.5).unwrap(), delta(0.1)));
        for eps in [1e-9, 1e-6, 0.1, 1.0] {
            assert!(!hypothesis_check(&uniform_cap_alphas(eps).unwrap(), delta(0.0)));
        }
    }

    #[test]
    fn colours_disjoint_and_definite_under_hypothesis() {
        for k in 1..=300 {
            let eps = PI * k as f64 / 300.0;
            let a = uniform_cap_alphas(eps).unwrap();
            for d in [0.0, 0.05, 0.1, 0.3, 0.49] {
                let d = delta(d);
                let pass = hypothesis_check(&a, d);
                for o in Outcome::ALL {
                    let c = classify(&a, o, d);
                    for (v, col) in c.eigenvalues.iter().zip(c.colours) {
                        if col == Colour::AT {
                            assert!(*v > d.value());
                        }
                    }
                    if pass {
                        assert!(c.is_definite());
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_monotonicity() {
        // α₁ and α₃ are monotone on all of (0, π]; α₂ and α₄ turn at
        // cos ε = −1/2, i.e. ε = 2π/3, where α₄ reaches its minimum 1/4.
        let turn = 2.0 * PI / 3.0;
        let mut prev = uniform_cap_alphas(PI / 1000.0).unwrap();
        let mut prev_eps = PI / 1000.0;
        for k in 2..=1000 {
            let eps = PI * k as f64 / 1000.0;
            let a = uniform_cap_alphas(eps).unwrap();
            assert!(a.alpha1 <= prev.alpha1 && a.alpha3 >= prev.alpha3);
            if eps <= turn {
                assert!(a.alpha4 <= prev.alpha4 && a.alpha2 >= prev.alpha2);
            } else if prev_eps >= turn {
                assert!(a.alpha4 >= prev.alpha4 && a.alpha2 <= prev.alpha2);
            }
            prev = a;
            prev_eps = eps;
        }
        let bottom = uniform_cap_alphas(turn).unwrap();
        assert!((bottom.alpha4 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn threshold_for_uniform_cap() {
        let q = QuadratureSpec::default();
        let c = critical_epsilon(delta(0.1), |e| DensityFamily::UniformCap.build(e), &q).unwrap();
        assert!((c.epsilon - 0.459).abs() < 1e-3, "{}", c.epsilon);
        assert_eq!(c.binding, Some(Constraint::Alpha4Lower));
        // Closed-form root of α₄ = 0.9: cos ε = (−1 + √7.8)/2.
        let exact = ((-1.0 + 7.8f64.sqrt()) / 2.0).acos();
        assert!((c.epsilon - exact).abs() < 1e-6);
    }

    #[test]
    fn threshold_shrinks_with_delta() {
        let q = QuadratureSpec::default();
        let mut last = f64::INFINITY;
        for d in [1e-2, 1e-4, 1e-6, 1e-8] {
            let c = critical_epsilon(delta(d), |e| DensityFamily::UniformCap.build(e), &q).unwrap();
            assert!(c.epsilon < last);
            last = c.epsilon;
        }
        assert!(last < 1e-3);
        assert!(matches!(
            critical_epsilon(delta(0.0), |e| DensityFamily::UniformCap.build(e), &q),
            Err(Error::Domain(_))
        ));
    }
}
