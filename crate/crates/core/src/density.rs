//! Rotation-covariant misalignment densities.
//!
//! A covariant density `w_n(m)` depends on `m` only through the angle
//! `θ = ∠(n, m)`, so it is stored as a radial profile on `[0, π]`. The
//! profile is a probability density per unit solid angle:
//! `2π ∫₀^π w(θ) sin θ dθ = 1`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg3::UnitVector3;
use crate::quadrature::{converge, polar_nodes};

const NORMALIZATION_TOL: f64 = 1e-13;
const GRID_CHECK_POINTS: usize = 10_000;

/// Family tag of a density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    UniformCap,
    TruncatedGaussian,
    CustomRadial,
}

impl fmt::Display for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DensityKind::UniformCap => "uniform-cap",
            DensityKind::TruncatedGaussian => "truncated-gaussian",
            DensityKind::CustomRadial => "custom-radial",
        })
    }
}

impl std::str::FromStr for DensityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-cap" => Ok(DensityKind::UniformCap),
            "truncated-gaussian" => Ok(DensityKind::TruncatedGaussian),
            "custom-radial" => Ok(DensityKind::CustomRadial),
            other => Err(Error::Lookup {
                kind: "density family",
                name: other.to_string(),
            }),
        }
    }
}

/// A one-parameter family of covariant densities, `ε ↦ w_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityFamily {
    UniformCap,
    TruncatedGaussian,
}

impl DensityFamily {
    pub fn build(self, epsilon: f64) -> Result<ErrorDensity> {
        match self {
            DensityFamily::UniformCap => ErrorDensity::uniform_cap(epsilon),
            DensityFamily::TruncatedGaussian => ErrorDensity::truncated_gaussian(epsilon),
        }
    }

    pub fn kind(self) -> DensityKind {
        match self {
            DensityFamily::UniformCap => DensityKind::UniformCap,
            DensityFamily::TruncatedGaussian => DensityKind::TruncatedGaussian,
        }
    }
}

impl std::str::FromStr for DensityFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<DensityKind>()? {
            DensityKind::UniformCap => Ok(DensityFamily::UniformCap),
            DensityKind::TruncatedGaussian => Ok(DensityFamily::TruncatedGaussian),
            DensityKind::CustomRadial => Err(Error::validation(
                "custom-radial densities are not a parametrized family",
            )),
        }
    }
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Cap,
    Gaussian,
    Custom(Profile),
}

/// Normalized covariant misalignment density.
#[derive(Clone)]
pub struct ErrorDensity {
    kind: DensityKind,
    epsilon: f64,
    shape: Shape,
    scale: f64,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for ErrorDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ErrorDensity")
            .field("kind", &self.kind)
            .field("epsilon", &self.epsilon)
            .field("scale", &self.scale)
            .finish()
    }
}

impl Serialize for ErrorDensity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ErrorDensity", 2)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("epsilon", &self.epsilon)?;
        st.end()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0 && epsilon <= PI) {
        return Err(Error::validation(format!(
            "width parameter ε = {epsilon} must satisfy 0 < ε ≤ π"
        )));
    }
    Ok(())
}

/// `1 − cos θ`, accurate for small angles.
pub(crate) fn versine(theta: f64) -> f64 {
    2.0 * (0.5 * theta).sin().powi(2)
}

impl ErrorDensity {
    /// Uniform density on the cap of half-angle `ε` around the intended
    /// direction, `w = 1/A` with `A = 2π(1 − cos ε)`.
    pub fn uniform_cap(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let area = 2.0 * PI * versine(epsilon);
        let mut breakpoints = vec![0.0, epsilon];
        if epsilon < PI {
            breakpoints.push(PI);
        }
        Ok(ErrorDensity {
            kind: DensityKind::UniformCap,
            epsilon,
            shape: Shape::Cap,
            scale: 1.0 / area,
            breakpoints,
        })
    }

    /// `w(θ) ∝ exp(−θ²/(2ε²))` on `[0, π]`, normalized numerically.
    pub fn truncated_gaussian(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let mut breakpoints = vec![0.0];
        breakpoints.extend(
            [1.0, 2.0, 4.0, 8.0, 16.0]
                .iter()
                .map(|k| k * epsilon)
                .take_while(|&t| t < PI),
        );
        breakpoints.push(PI);
        Self::normalized(DensityKind::TruncatedGaussian, epsilon, Shape::Gaussian, breakpoints)
    }

    /// User-supplied radial profile, normalized automatically.
    ///
    /// `breakpoints` are optional interior angles where the profile has
    /// kinks or jumps; they keep the quadrature panels smooth.
    pub fn custom_radial<F>(epsilon: f64, profile: F, breakpoints: &[f64]) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_epsilon(epsilon)?;
        let mut bp: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|t| t.is_finite() && *t > 0.0 && *t < PI)
            .collect();
        bp.push(0.0);
        bp.push(PI);
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        let profile: Profile = Arc::new(profile);
        for k in 0..=GRID_CHECK_POINTS {
            let theta = PI * k as f64 / GRID_CHECK_POINTS as f64;
            let v = profile(theta);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(format!(
                    "radial profile is negative or non-finite at θ = {theta} (value {v})"
                )));
            }
        }
        Self::normalized(DensityKind::CustomRadial, epsilon, Shape::Custom(profile), bp)
    }

    fn normalized(kind: DensityKind, epsilon: f64, shape: Shape, breakpoints: Vec<f64>) -> Result<Self> {
        let mut density = ErrorDensity {
            kind,
            epsilon,
            shape,
            scale: 1.0,
            breakpoints,
        };
        let raw = density.integrate_radial(64, NORMALIZATION_TOL, |_, _| 1.0)?;
        if !(raw.is_finite() && raw > 0.0) {
            return Err(Error::validation(format!(
                "radial profile has zero or non-finite mass ({raw})"
            )));
        }
        density.scale = 1.0 / raw;
        Ok(density)
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Angular panel boundaries used by the quadratures, from 0 to π.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    fn raw(&self, theta: f64) -> f64 {
        match &self.shape {
            Shape::Cap => {
                if theta < self.epsilon || self.epsilon >= PI {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Gaussian => (-0.5 * (theta / self.epsilon).powi(2)).exp(),
            Shape::Custom(f) => f(theta),
        }
    }

    /// Density per unit solid angle at polar angle `theta` from the
    /// intended direction.
    pub fn radial(&self, theta: f64) -> f64 {
        if !(0.0..=PI).contains(&theta) {
            return 0.0;
        }
        self.scale * self.raw(theta)
    }

    /// `w_n(m)`.
    pub fn density_at(&self, n: &UnitVector3, m: &UnitVector3) -> f64 {
        self.radial(n.angle_to(m))
    }

    /// `2π ∫ w(θ) g(θ, cos θ) sin θ dθ` to the given tolerance.
    pub fn integrate_radial<G>(&self, start_order: usize, tolerance: f64, g: G) -> Result<f64>
    where
        G: Fn(f64, f64) -> f64,
    {
        let v = converge(start_order, tolerance, "radial integral", |order| {
            let s: f64 = self
                .weighted_nodes(order)
                .iter()
                .map(|&(theta, x, wt)| wt * g(theta, x))
                .sum();
            vec![2.0 * PI * s]
        })?;
        Ok(v[0])
    }

    /// Quadrature nodes `(θ, cos θ, weight × w(θ))` over all panels.
    ///
    /// Panels never straddle a jump of the profile, so each panel is
    /// evaluated with its interior value.
    pub(crate) fn weighted_nodes(&self, order: usize) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for (k, pair) in self.breakpoints.windows(2).enumerate() {
            for (theta, x, wt) in polar_nodes(pair, order) {
                let v = self.panel_value(k, theta);
                if v != 0.0 {
                    out.push((theta, x, wt * v));
                }
            }
        }
        out
    }

    fn panel_value(&self, panel: usize, theta: f64) -> f64 {
        match &self.shape {
            Shape::Cap => {
                if panel == 0 {
                    self.scale
                } else {
                    0.0
                }
            }
            _ => self.scale * self.raw(theta),
        }
    }

    /// Probability mass within angle `angle` of the intended direction.
    pub fn mass_within(&self, angle: f64) -> Result<f64> {
        let angle = angle.clamp(0.0, PI);
        if let Shape::Cap = self.shape {
            return Ok((versine(angle.min(self.epsilon)) / versine(self.epsilon)).min(1.0));
        }
        let mut panels: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|&t| t < angle)
            .collect();
        panels.push(angle);
        if panels.len() < 2 {
            return Ok(0.0);
        }
        let v = converge(64, NORMALIZATION_TOL, "cone mass", |order| {
            let s: f64 = polar_nodes(&panels, order)
                .iter()
                .map(|&(theta, _, wt)| wt * self.scale * self.raw(theta))
                .sum();
            vec![2.0 * PI * s]
        })?;
        Ok(v[0].min(1.0))
    }

    /// Polar angle beyond which the remaining mass is below roughly `1e-14`.
    pub fn effective_support(&self) -> f64 {
        match self.shape {
            Shape::Cap => self.epsilon,
            Shape::Gaussian => (8.0 * self.epsilon).min(PI),
            Shape::Custom(_) => PI,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg3::Rotation3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: composite Simpson rule in θ with `n` panels per
    /// breakpoint interval.
    fn simpson_mass(w: &ErrorDensity, n: usize) -> f64 {
        let mut total = 0.0;
        for pair in w.breakpoints().windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let h = (b - a) / n as f64;
            let f = |t: f64| w.radial(t) * t.sin();
            let nudge = 1e-12 * (b - a);
            let mut s = f(a + nudge) + f(b - nudge);
            for k in 1..n {
                let t = a + k as f64 * h;
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(t);
            }
            total += s * h / 3.0;
        }
        2.0 * PI * total
    }

    #[test]
    fn cap_full_sphere_and_hemisphere() {
        let w = ErrorDensity::uniform_cap(PI).unwrap();
        for t in [0.0, 1.0, 2.0, PI] {
            assert!((w.radial(t) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        }
        let w = ErrorDensity::uniform_cap(PI / 2.0).unwrap();
        assert!((w.radial(0.3) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(w.radial(2.0), 0.0);
    }

    #[test]
    fn normalization_against_simpson_oracle() {
        let w = ErrorDensity::uniform_cap(0.459).unwrap();
        assert!((simpson_mass(&w, 2000) - 1.0).abs() < 1e-10);
        for eps in [0.01, 0.05, 0.2, 0.7, 1.5, PI] {
            let g = ErrorDensity::truncated_gaussian(eps).unwrap();
            assert!((simpson_mass(&g, 4000) - 1.0).abs() < 1e-8, "ε = {eps}");
        }
    }

    #[test]
    fn gaussian_concentration_and_positivity() {
        for eps in [0.001, 0.01, 0.05] {
            let g = ErrorDensity::truncated_gaussian(eps).unwrap();
            assert!(g.mass_within(3.0 * eps).unwrap() > 0.98);
        }
        let g = ErrorDensity::truncated_gaussian(PI).unwrap();
        for k in 0..=1000 {
            assert!(g.radial(PI * k as f64 / 1000.0) > 0.0);
        }
    }

    #[test]
    fn epsilon_range_is_validated() {
        for bad in [0.0, -0.1, 3.5, f64::NAN] {
            assert!(ErrorDensity::uniform_cap(bad).is_err());
            assert!(ErrorDensity::truncated_gaussian(bad).is_err());
        }
    }

    #[test]
    fn custom_profile_normalized_and_validated() {
        let w = ErrorDensity::custom_radial(0.5, |t| if t < 0.5 { 1.0 - t } else { 0.0 }, &[0.5]).unwrap();
        assert!((simpson_mass(&w, 4000) - 1.0).abs() < 1e-10);
        assert!(ErrorDensity::custom_radial(0.5, |_| 0.0, &[]).is_err());
        assert!(ErrorDensity::custom_radial(0.5, |t| t - 1.0, &[]).is_err());
        assert!(ErrorDensity::custom_radial(0.5, |_| f64::NAN, &[]).is_err());
    }

    #[test]
    fn density_at_support_and_pole() {
        let w = ErrorDensity::uniform_cap(0.3).unwrap();
        let n = UnitVector3::Z;
        assert_eq!(w.density_at(&n, &n), w.radial(0.0));
        let far = UnitVector3::from_spherical(0.31, 1.0);
        assert_eq!(w.density_at(&n, &far), 0.0);
    }

    #[test]
    fn structural_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let dens = [
            ErrorDensity::uniform_cap(1.2).unwrap(),
            ErrorDensity::truncated_gaussian(0.4).unwrap(),
        ];
        for _ in 0..100 {
            let r = Rotation3::random(&mut rng);
            let n = UnitVector3::random(&mut rng);
            let m = UnitVector3::random(&mut rng);
            for w in &dens {
                let a = w.density_at(&n, &m);
                let b = w.density_at(&r.apply(&n), &r.apply(&m));
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300) || a == b);
            }
        }
    }

    #[test]
    fn delta_limit_mass_concentrates() {
        let cone = 0.05;
        let mut last = 0.0;
        for eps in [1.0, 0.1, 0.01] {
            let m = ErrorDensity::uniform_cap(eps).unwrap().mass_within(cone).unwrap();
            assert!(m >= last);
            last = m;
        }
        assert_eq!(last, 1.0);
        let g = ErrorDensity::truncated_gaussian(0.005).unwrap();
        assert!(g.mass_within(cone).unwrap() > 1.0 - 1e-9);
    }
}
