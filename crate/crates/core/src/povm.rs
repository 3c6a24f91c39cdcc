//! Unsharp spin observables `F^{n,ε}(i) = ∫ dΩ(m) w_{n,ε}(m) P_{m,i}`.
//!
//! Two independent construction routes are provided:
//!
//! * [`build_povm`] reduces the integral to the four radial moments of
//!   [`AlphaProfile`], places them on the diagonal in the frame where `n` is
//!   the pole, and carries the result to `n` with `D¹`;
//! * [`build_povm_direct`] integrates the sharp projectors over a product
//!   grid (Gauss-Legendre in `cos θ`, trapezoid in `φ`) around `n` with no
//!   use of `D¹` at all.
//!
//! Each route is the other's oracle.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{DensityKind, ErrorDensity};
use crate::error::{Error, Result};
use crate::linalg3::{
    eig_hermitian3, frobenius, wigner_d1, CMatrix3, CVector3, HermitianOp3, Rotation3, UnitVector3,
};
use crate::quadrature::{converge, converge_with_order, QuadratureSpec};
use crate::spin::{sharp_projectors, spin_operator, Outcome};

/// The four eigenvalue moments of a covariant density.
///
/// In the frame where the intended direction is the pole the effects are
/// `F(+1) = diag(α₁, α₂, α₃)`, `F(0) = diag(α₂, α₄, α₂)` and
/// `F(−1) = diag(α₃, α₂, α₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaProfile {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
}

impl AlphaProfile {
    /// The sharp limit `ε → 0`.
    pub const SHARP: AlphaProfile = AlphaProfile {
        alpha1: 1.0,
        alpha2: 0.0,
        alpha3: 0.0,
        alpha4: 1.0,
    };

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.alpha3, self.alpha4]
    }

    /// Eigenvalues of `F(i)` in the (+1, 0, −1) eigenbasis of `S_n`.
    pub fn effect_eigenvalues(&self, outcome: Outcome) -> [f64; 3] {
        let AlphaProfile {
            alpha1: a1,
            alpha2: a2,
            alpha3: a3,
            alpha4: a4,
        } = *self;
        match outcome {
            Outcome::Plus => [a1, a2, a3],
            Outcome::Zero => [a2, a4, a2],
            Outcome::Minus => [a3, a2, a1],
        }
    }

    /// Residuals of `α₁ + α₂ + α₃ = 1` and `2α₂ + α₄ = 1`.
    pub fn sum_rule_residuals(&self) -> (f64, f64) {
        (
            (self.alpha1 + self.alpha2 + self.alpha3 - 1.0).abs(),
            (2.0 * self.alpha2 + self.alpha4 - 1.0).abs(),
        )
    }
}

/// Radial moments by 1-D quadrature in `cos θ`, converged by order doubling.
pub fn alpha_profile(w: &ErrorDensity, q: &QuadratureSpec) -> Result<AlphaProfile> {
    q.validate()?;
    let v = converge(q.theta_points, q.tolerance, "alpha profile", |order| {
        let mut acc = [0.0f64; 4];
        for (theta, x, f) in w.weighted_nodes(order) {
            // cos²(θ/2), sin²(θ/2) and sin²θ without cancellation near θ = 0.
            let down = (0.5 * theta).sin().powi(2);
            let up = 1.0 - down;
            let sin2 = theta.sin().powi(2);
            acc[0] += f * up * up;
            acc[1] += f * 0.5 * sin2;
            acc[2] += f * down * down;
            acc[3] += f * x * x;
        }
        acc.iter().map(|a| 2.0 * PI * a).collect()
    })?;
    Ok(AlphaProfile {
        alpha1: v[0],
        alpha2: v[1],
        alpha3: v[2],
        alpha4: v[3],
    })
}

/// Closed-form moments of the uniform cap of half-angle `ε`.
pub fn uniform_cap_alphas(epsilon: f64) -> Result<AlphaProfile> {
    if !(epsilon.is_finite() && epsilon > 0.0 && epsilon <= PI) {
        return Err(Error::validation(format!(
            "width parameter ε = {epsilon} must satisfy 0 < ε ≤ π"
        )));
    }
    let (c1, c2) = (epsilon.cos(), (2.0 * epsilon).cos());
    let s2 = (0.5 * epsilon).sin().powi(2);
    Ok(AlphaProfile {
        alpha1: (15.0 + 8.0 * c1 + c2) / 24.0,
        alpha2: (2.0 + c1) * s2 / 3.0,
        alpha3: s2 * s2 / 3.0,
        alpha4: (3.0 + 2.0 * c1 + c2) / 6.0,
    })
}

/// A three-outcome unsharp spin observable.
#[derive(Debug, Clone)]
pub struct SpinPovm {
    pub direction: UnitVector3,
    /// Effects in (+1, 0, −1) order.
    pub effects: [HermitianOp3; 3],
    pub density: ErrorDensity,
    pub quadrature: QuadratureSpec,
}

impl SpinPovm {
    pub fn effect(&self, outcome: Outcome) -> &HermitianOp3 {
        &self.effects[outcome.index()]
    }

    /// Frobenius distance of `Σ F(i)` from the identity.
    pub fn identity_residual(&self) -> f64 {
        let sum = self.effects.iter().fold(HermitianOp3::zero(), |a, f| a.add(f));
        sum.frobenius_distance(&HermitianOp3::identity())
    }

    pub fn export(&self) -> PovmExport {
        PovmExport {
            direction: self.direction.as_array(),
            kind: self.density.kind(),
            epsilon: self.density.epsilon(),
            quadrature: self.quadrature,
            effects: EffectsExport {
                plus: self.effects[0].to_pairs(),
                zero: self.effects[1].to_pairs(),
                minus: self.effects[2].to_pairs(),
            },
        }
    }
}

/// JSON shape of an exported observable: complex entries as `[re, im]`,
/// row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmExport {
    pub direction: [f64; 3],
    pub kind: DensityKind,
    pub epsilon: f64,
    pub quadrature: QuadratureSpec,
    pub effects: EffectsExport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsExport {
    #[serde(rename = "+1")]
    pub plus: [[[f64; 2]; 3]; 3],
    #[serde(rename = "0")]
    pub zero: [[[f64; 2]; 3]; 3],
    #[serde(rename = "-1")]
    pub minus: [[[f64; 2]; 3]; 3],
}

/// Effects in the frame where the intended direction is the pole.
pub fn polar_effects(alphas: &AlphaProfile) -> [HermitianOp3; 3] {
    Outcome::ALL.map(|o| HermitianOp3::diagonal(alphas.effect_eigenvalues(o)))
}

/// Rotation `R` with `R⁻¹ ẑ = n`, so that `D¹(R) F^{z} D¹(R)⁻¹ = F^{n}`.
fn pole_rotation(n: &UnitVector3) -> Rotation3 {
    Rotation3::geodesic(&UnitVector3::Z, n).inverse()
}

/// Polar-frame reduction followed by `D¹` conjugation.
pub fn build_povm(n: &UnitVector3, w: &ErrorDensity, q: &QuadratureSpec) -> Result<SpinPovm> {
    let alphas = alpha_profile(w, q)?;
    let d = wigner_d1(&pole_rotation(n));
    let effects = polar_effects(&alphas).map(|f| d.conjugate(&f));
    Ok(SpinPovm {
        direction: *n,
        effects,
        density: w.clone(),
        quadrature: *q,
    })
}

fn accumulate_direct(
    n: &UnitVector3,
    w: &ErrorDensity,
    theta_order: usize,
    phi_order: usize,
) -> [CMatrix3; 3] {
    let (e1, e2) = n.orthonormal_frame();
    let nv = n.as_vector();
    let phi_weight = 2.0 * PI / phi_order as f64;
    let azimuths: Vec<(f64, f64)> = (0..phi_order)
        .map(|k| (2.0 * PI * k as f64 / phi_order as f64).sin_cos())
        .collect();
    let mut acc = [CMatrix3::zeros(); 3];
    for (theta, x, wt) in w.weighted_nodes(theta_order) {
        let st = theta.sin();
        let weight = Complex64::new(wt * phi_weight, 0.0);
        for &(sp, cp) in &azimuths {
            let m: Vector3<f64> = e1 * (st * cp) + e2 * (st * sp) + nv * x;
            let m = UnitVector3::from_vector(&m).expect("unit by construction");
            let p = sharp_projectors(&m);
            for (a, proj) in acc.iter_mut().zip(p.projectors.iter()) {
                *a += proj.matrix() * weight;
            }
        }
    }
    acc
}

fn flatten(effects: &[CMatrix3; 3]) -> Vec<f64> {
    effects
        .iter()
        .flat_map(|m| m.iter().flat_map(|c| [c.re, c.im]))
        .collect()
}

/// Direct product quadrature of the sharp projectors around `n`.
pub fn build_povm_direct(n: &UnitVector3, w: &ErrorDensity, q: &QuadratureSpec) -> Result<SpinPovm> {
    q.validate()?;
    // Polar order first at fixed azimuthal order, then the azimuthal order.
    let (theta_order, _) = converge_with_order(q.theta_points, q.tolerance, "direct polar quadrature", |order| {
        flatten(&accumulate_direct(n, w, order, q.phi_points))
    })?;
    let flat = converge(q.phi_points, q.tolerance, "direct azimuthal quadrature", |order| {
        flatten(&accumulate_direct(n, w, theta_order, order))
    })?;
    let mut effects = [HermitianOp3::zero(); 3];
    for (k, effect) in effects.iter_mut().enumerate() {
        let m = CMatrix3::from_fn(|r, c| {
            let idx = k * 18 + 2 * (c * 3 + r);
            Complex64::new(flat[idx], flat[idx + 1])
        });
        *effect = HermitianOp3::from_matrix_hermitized(m);
    }
    Ok(SpinPovm {
        direction: *n,
        effects,
        density: w.clone(),
        quadrature: *q,
    })
}

/// `tr(P_ψ F(i)) = ⟨ψ|F(i)|ψ⟩` for a normalized state.
pub fn outcome_probability(psi: &CVector3, povm: &SpinPovm, outcome: Outcome) -> Result<f64> {
    let norm2 = psi.norm_squared();
    if !norm2.is_finite() || (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::validation(format!(
            "state is not normalized (‖ψ‖² = {norm2})"
        )));
    }
    Ok(povm.effect(outcome).expectation(psi).clamp(0.0, 1.0))
}

/// Largest Frobenius distance between `D¹(R) F^{n}(i) D¹(R)⁻¹` and
/// `F^{R⁻¹n}(i)`, both built by direct quadrature.
pub fn check_covariance(
    w: &ErrorDensity,
    n: &UnitVector3,
    rotation: &Rotation3,
    q: &QuadratureSpec,
) -> Result<f64> {
    let here = build_povm_direct(n, w, q)?;
    let there = build_povm_direct(&rotation.inverse().apply(n), w, q)?;
    let d = wigner_d1(rotation);
    Ok(here
        .effects
        .iter()
        .zip(there.effects.iter())
        .map(|(f, g)| d.conjugate(f).frobenius_distance(g))
        .fold(0.0, f64::max))
}

/// Residuals for shared eigenvectors between the effects and `S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharedEigenvectorResidual {
    /// Largest off-diagonal modulus of any effect in the `S_n` eigenbasis.
    pub off_diagonal: f64,
    /// Largest Frobenius norm of `[F(i), F(j)]`.
    pub commutator: f64,
}

impl SharedEigenvectorResidual {
    pub fn max(&self) -> f64 {
        self.off_diagonal.max(self.commutator)
    }
}

pub fn check_shared_eigenvectors(povm: &SpinPovm) -> SharedEigenvectorResidual {
    let pairs = eig_hermitian3(&spin_operator(&povm.direction));
    let basis = CMatrix3::from_columns(&[pairs[0].vector, pairs[1].vector, pairs[2].vector]);
    let mut off_diagonal = 0.0f64;
    for f in &povm.effects {
        let g = basis.adjoint() * f.matrix() * basis;
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    off_diagonal = off_diagonal.max(g[(r, c)].norm());
                }
            }
        }
    }
    let mut commutator = 0.0f64;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let (a, b) = (&povm.effects[i], &povm.effects[j]);
            commutator = commutator.max(frobenius(&(a.mul(b) - b.mul(a))));
        }
    }
    SharedEigenvectorResidual {
        off_diagonal,
        commutator,
    }
}

/// Largest deviation between each effect's sorted spectrum and the sorted
/// pattern predicted by `alphas`.
pub fn spectrum_residual(povm: &SpinPovm, alphas: &AlphaProfile) -> f64 {
    Outcome::ALL
        .iter()
        .map(|&o| {
            let got = eig_hermitian3(povm.effect(o)).map(|p| p.value);
            let mut want = alphas.effect_eigenvalues(o);
            want.sort_by(|a, b| b.total_cmp(a));
            got.iter()
                .zip(want.iter())
                .map(|(g, w)| (g - w).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Smallest and largest effect eigenvalues across all outcomes.
pub fn effect_bounds(povm: &SpinPovm) -> (f64, f64) {
    povm.effects
        .iter()
        .flat_map(|f| eig_hermitian3(f).map(|p| p.value))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::z_eigenstate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn closed_form_examples() {
        let a = uniform_cap_alphas(PI).unwrap();
        for v in a.as_array() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let a = uniform_cap_alphas(1e-9).unwrap();
        for (v, s) in a.as_array().iter().zip(AlphaProfile::SHARP.as_array()) {
            assert!((v - s).abs() < 1e-15);
        }
        // ε = 0.459 evaluated independently to four places.
        let a = uniform_cap_alphas(0.459).unwrap();
        assert!((a.alpha4 - 0.900).abs() < 5e-4, "{}", a.alpha4);
        assert!((a.alpha1 - 0.949).abs() < 5e-4, "{}", a.alpha1);
        assert!((a.alpha2 - 0.050).abs() < 5e-4, "{}", a.alpha2);
        assert!((a.alpha3 - 0.0009).abs() < 5e-5, "{}", a.alpha3);
        assert!(uniform_cap_alphas(0.0).is_err());
        assert!(uniform_cap_alphas(4.0).is_err());
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for eps in [0.3, 1e-3, 1.0, 2.0, PI] {
            let w = ErrorDensity::uniform_cap(eps).unwrap();
            let a = alpha_profile(&w, &q()).unwrap();
            let b = uniform_cap_alphas(eps).unwrap();
            for (x, y) in a.as_array().iter().zip(b.as_array()) {
                assert!((x - y).abs() < 1e-9, "ε = {eps}: {x} vs {y}");
            }
        }
        let a = alpha_profile(&ErrorDensity::uniform_cap(1e-3).unwrap(), &q()).unwrap();
        assert!(a.alpha1 >= 1.0 - 1e-5 && a.alpha4 >= 1.0 - 1e-5);
        assert!(a.alpha2 <= 1e-5 && a.alpha3 <= 1e-5);
    }

    #[test]
    fn sum_rules_for_gaussian() {
        for eps in [0.01, 0.2, 1.0, PI] {
            let a = alpha_profile(&ErrorDensity::truncated_gaussian(eps).unwrap(), &q()).unwrap();
            let (r1, r2) = a.sum_rule_residuals();
            assert!(r1 < 1e-8 && r2 < 1e-8);
            for v in a.as_array() {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn polar_frame_patterns() {
        let w = ErrorDensity::uniform_cap(0.3).unwrap();
        let a = uniform_cap_alphas(0.3).unwrap();
        let povm = build_povm_direct(&UnitVector3::Z, &w, &q()).unwrap();
        for o in Outcome::ALL {
            let want = HermitianOp3::diagonal(a.effect_eigenvalues(o));
            assert!(povm.effect(o).frobenius_distance(&want) < 1e-10);
        }
        let r = check_shared_eigenvectors(&povm);
        assert!(r.off_diagonal < 1e-10 && r.commutator < 1e-10);
    }

    #[test]
    fn routes_agree_for_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let n = UnitVector3::random(&mut rng);
            let eps = rng.gen_range(0.05..3.0);
            for w in [
                ErrorDensity::uniform_cap(eps).unwrap(),
                ErrorDensity::truncated_gaussian(eps).unwrap(),
            ] {
                let a = build_povm(&n, &w, &q()).unwrap();
                let b = build_povm_direct(&n, &w, &q()).unwrap();
                for o in Outcome::ALL {
                    assert!(a.effect(o).frobenius_distance(b.effect(o)) < 1e-8);
                }
                assert!(a.identity_residual() < 1e-8);
                let alphas = alpha_profile(&w, &q()).unwrap();
                assert!(spectrum_residual(&b, &alphas) < 1e-8);
                let (lo, hi) = effect_bounds(&b);
                assert!(lo >= -1e-8 && hi <= 1.0 + 1e-8);
            }
        }
    }

    #[test]
    fn probabilities_examples() {
        let eps = 0.3;
        let w = ErrorDensity::uniform_cap(eps).unwrap();
        let a = uniform_cap_alphas(eps).unwrap();
        let povm = build_povm(&UnitVector3::Z, &w, &q()).unwrap();
        let p0 = outcome_probability(&z_eigenstate(Outcome::Zero), &povm, Outcome::Zero).unwrap();
        assert!((p0 - a.alpha4).abs() < 1e-10);
        let p1 = outcome_probability(&z_eigenstate(Outcome::Plus), &povm, Outcome::Plus).unwrap();
        assert!((p1 - a.alpha1).abs() < 1e-10);

        let full = build_povm(&UnitVector3::X, &ErrorDensity::uniform_cap(PI).unwrap(), &q()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut psi = CVector3::from_fn(|_, _| Complex64::new(rng.gen(), rng.gen()));
        psi /= Complex64::new(psi.norm(), 0.0);
        let mut total = 0.0;
        for o in Outcome::ALL {
            let p = outcome_probability(&psi, &full, o).unwrap();
            assert!((p - 1.0 / 3.0).abs() < 1e-10);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-10);

        let bad = psi * Complex64::new(2.0, 0.0);
        assert!(outcome_probability(&bad, &full, Outcome::Plus).is_err());
    }

    #[test]
    fn covariance_identity_rotation_is_exact() {
        let w = ErrorDensity::uniform_cap(0.3).unwrap();
        let n = UnitVector3::normalize(0.2, -0.5, 0.7).unwrap();
        let r = check_covariance(&w, &n, &Rotation3::identity(), &q()).unwrap();
        assert!(r <= 1e-12);
    }

    #[test]
    fn sharp_limit_is_monotone() {
        let mut last = f64::INFINITY;
        for eps in [0.5, 0.25, 0.1, 0.01] {
            let povm = build_povm(&UnitVector3::Z, &ErrorDensity::uniform_cap(eps).unwrap(), &q()).unwrap();
            let sharp = sharp_projectors(&UnitVector3::Z);
            let d = Outcome::ALL
                .iter()
                .map(|&o| povm.effect(o).frobenius_distance(sharp.projector(o)))
                .fold(0.0, f64::max);
            assert!(d < last);
            last = d;
        }
        assert!(last <= 1e-4);
    }

    #[test]
    fn export_keeps_outcome_order() {
        let povm = build_povm(&UnitVector3::Z, &ErrorDensity::uniform_cap(0.3).unwrap(), &q()).unwrap();
        let json = serde_json::to_string(&povm.export()).unwrap();
        let (p, z, m) = (json.find("\"+1\"").unwrap(), json.find("\"0\"").unwrap(), json.find("\"-1\"").unwrap());
        assert!(p < z && z < m);
        assert!(json.contains("\"uniform-cap\""));
    }
}
