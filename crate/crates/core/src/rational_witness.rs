//! Exact check that a quarter-right-angle rotation does not preserve
//! rational directions, so a misalignment model supported on rational
//! directions cannot be rotation covariant.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ksets::Q2Scalar;

/// A direction with rational coordinates, kept unnormalized.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalVector3 {
    components: [BigRational; 3],
}

impl RationalVector3 {
    pub fn new(components: [BigRational; 3]) -> Result<Self> {
        if components.iter().all(Zero::is_zero) {
            return Err(Error::validation("rational vector must be nonzero"));
        }
        Ok(RationalVector3 { components })
    }

    pub fn from_ints(x: i64, y: i64, z: i64) -> Result<Self> {
        RationalVector3::new([x, y, z].map(|v| BigRational::from_integer(v.into())))
    }

    pub fn components(&self) -> &[BigRational; 3] {
        &self.components
    }

    pub fn dot(&self, other: &RationalVector3) -> BigRational {
        self.components
            .iter()
            .zip(&other.components)
            .fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
    }

    pub fn norm_squared(&self) -> BigRational {
        self.dot(self)
    }

    fn lift(&self) -> [Q2Scalar; 3] {
        self.components.clone().map(Q2Scalar::rational)
    }
}

impl fmt::Display for RationalVector3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = &self.components;
        write!(f, "({x}, {y}, {z})")
    }
}

impl fmt::Debug for RationalVector3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for RationalVector3 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.components.iter().map(|c| c.to_string()).collect::<Vec<_>>().serialize(s)
    }
}

fn integer_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

/// Square root of a non-negative rational inside ℚ(√2), if it lies there.
pub fn sqrt_in_q2(r: &BigRational) -> Option<Q2Scalar> {
    let (p, q) = (r.numer(), r.denom());
    let pq = p * q;
    if let Some(s) = integer_sqrt(&pq) {
        return Some(Q2Scalar::rational(BigRational::new(s, q.clone())));
    }
    let s = integer_sqrt(&(BigInt::from(2) * &pq))?;
    Some(Q2Scalar::new(BigRational::zero(), BigRational::new(s, BigInt::from(2) * q)))
}

fn cross(a: &[Q2Scalar; 3], b: &[Q2Scalar; 3]) -> [Q2Scalar; 3] {
    [
        &(&a[1] * &b[2]) - &(&a[2] * &b[1]),
        &(&a[2] * &b[0]) - &(&a[0] * &b[2]),
        &(&a[0] * &b[1]) - &(&a[1] * &b[0]),
    ]
}

fn dot(a: &[Q2Scalar; 3], b: &[Q2Scalar; 3]) -> Q2Scalar {
    a.iter().zip(b).fold(Q2Scalar::zero(), |acc, (x, y)| &acc + &(x * y))
}

/// Unit axis `k/|k|` in ℚ(√2) coordinates.
fn unit_axis(axis: &RationalVector3) -> Result<[Q2Scalar; 3]> {
    let norm = sqrt_in_q2(&axis.norm_squared()).ok_or_else(|| {
        Error::validation(format!(
            "axis {axis} has length √({}) outside ℚ(√2); use an axis whose squared length is a square or twice a square",
            axis.norm_squared()
        ))
    })?;
    let inv = norm.inverse().expect("nonzero axis");
    Ok(axis.lift().map(|c| &c * &inv))
}

/// Rodrigues rotation of `v` about the unit axis `k` with the given cosine
/// and sine.
fn rodrigues(v: &[Q2Scalar; 3], k: &[Q2Scalar; 3], cos: &Q2Scalar, sin: &Q2Scalar) -> [Q2Scalar; 3] {
    let kxv = cross(k, v);
    let along = &dot(k, v) * &(&Q2Scalar::one() - cos);
    [0, 1, 2].map(|i| &(&(&v[i] * cos) + &(&kxv[i] * sin)) + &(&k[i] * &along))
}

fn check_pair(m: &RationalVector3, axis: &RationalVector3) -> Result<[Q2Scalar; 3]> {
    if !m.dot(axis).is_zero() {
        return Err(Error::validation(format!("axis {axis} is not orthogonal to {m}")));
    }
    unit_axis(axis)
}

/// `R m` for the rotation by π/4 about `axis`, computed exactly. The result
/// has the same length as `m`.
pub fn rotate_pi4_exact(m: &RationalVector3, axis: &RationalVector3) -> Result<[Q2Scalar; 3]> {
    let k = check_pair(m, axis)?;
    let c = Q2Scalar::half_sqrt2();
    Ok(rodrigues(&m.lift(), &k, &c, &c))
}

/// `R m` for the rotation by π/2 about `axis`; the rotation matrix is
/// rational whenever the axis length is.
pub fn rotate_pi2_exact(m: &RationalVector3, axis: &RationalVector3) -> Result<[Q2Scalar; 3]> {
    let k = check_pair(m, axis)?;
    Ok(rodrigues(&m.lift(), &k, &Q2Scalar::zero(), &Q2Scalar::one()))
}

/// π/4 rotation of an already exact vector about `axis` (no orthogonality
/// requirement), used to check composition.
pub fn rotate_pi4_q2(v: &[Q2Scalar; 3], axis: &RationalVector3) -> Result<[Q2Scalar; 3]> {
    let k = unit_axis(axis)?;
    let c = Q2Scalar::half_sqrt2();
    Ok(rodrigues(v, &k, &c, &c))
}

/// An irrational ratio `v[numerator] / v[denominator]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioWitness {
    pub numerator: usize,
    pub denominator: usize,
    #[serde(serialize_with = "as_string")]
    pub ratio: Q2Scalar,
}

/// An irrational coordinate `v[index]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentWitness {
    pub index: usize,
    #[serde(serialize_with = "as_string")]
    pub value: Q2Scalar,
}

fn as_string<S: Serializer>(v: &Q2Scalar, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionRationality {
    pub rational: bool,
    pub witness: Option<RatioWitness>,
}

/// Whether some nonzero multiple of `v` has rational coordinates, i.e.
/// every ratio of coordinates is rational. The witness is the first
/// irrational ratio against the first nonzero coordinate.
pub fn is_rational_direction(v: &[Q2Scalar; 3]) -> Result<DirectionRationality> {
    let pivot = v
        .iter()
        .position(|c| !c.is_zero())
        .ok_or_else(|| Error::validation("zero vector has no direction"))?;
    for (i, c) in v.iter().enumerate() {
        let ratio = c.checked_div(&v[pivot]).expect("nonzero pivot");
        if !ratio.is_rational() {
            return Ok(DirectionRationality {
                rational: false,
                witness: Some(RatioWitness {
                    numerator: i,
                    denominator: pivot,
                    ratio,
                }),
            });
        }
    }
    Ok(DirectionRationality {
        rational: true,
        witness: None,
    })
}

/// First coordinate with a nonzero √2 part, if any.
pub fn irrational_component(v: &[Q2Scalar; 3]) -> Option<ComponentWitness> {
    v.iter().enumerate().find(|(_, c)| !c.is_rational()).map(|(index, c)| ComponentWitness {
        index,
        value: c.clone(),
    })
}

/// One battery entry: a direction and an orthogonal rotation axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSample {
    pub direction: RationalVector3,
    pub axis: RationalVector3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub direction: RationalVector3,
    pub axis: RationalVector3,
    #[serde(serialize_with = "vec_as_strings")]
    pub image: [Q2Scalar; 3],
    /// Projective rationality of the π/4 image.
    pub image_direction: DirectionRationality,
    /// For unit-length directions (rational length after scaling), the
    /// first irrational coordinate of the normalized image.
    pub unit_image_witness: Option<ComponentWitness>,
    /// `m · Rm / |m|²`, the cosine of the rotation angle.
    #[serde(serialize_with = "as_string")]
    pub cosine_check: Q2Scalar,
    #[serde(serialize_with = "vec_as_strings")]
    pub control_pi2_image: [Q2Scalar; 3],
    pub control_pi2_rational: bool,
}

fn vec_as_strings<S: Serializer>(v: &[Q2Scalar; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceViolationReport {
    pub samples: Vec<SampleOutcome>,
    pub non_rational_images: usize,
    pub conclusion: Option<String>,
}

/// Rotates every sample by π/4 (and by π/2 as a control) and reports which
/// images leave the rational directions.
pub fn covariance_violation_report(samples: &[WitnessSample]) -> Result<CovarianceViolationReport> {
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        let image = rotate_pi4_exact(&s.direction, &s.axis)?;
        let image_direction = is_rational_direction(&image)?;
        let n2 = s.direction.norm_squared();
        let unit_image_witness = sqrt_in_q2(&n2)
            .filter(Q2Scalar::is_rational)
            .and_then(|len| {
                let inv = len.inverse().expect("nonzero");
                irrational_component(&image.clone().map(|c| &c * &inv))
            });
        let cosine_check = &dot(&s.direction.lift(), &image) * &Q2Scalar::rational(n2.recip());
        let control = rotate_pi2_exact(&s.direction, &s.axis)?;
        let control_pi2_rational = is_rational_direction(&control)?.rational;
        out.push(SampleOutcome {
            direction: s.direction.clone(),
            axis: s.axis.clone(),
            image,
            image_direction,
            unit_image_witness,
            cosine_check,
            control_pi2_image: control,
            control_pi2_rational,
        });
    }
    let non_rational_images = out.iter().filter(|o| !o.image_direction.rational).count();
    let conclusion = if out.is_empty() {
        None
    } else if non_rational_images > 0 {
        Some(format!(
            "{non_rational_images} of {} rational directions have a non-rational image under a π/4 rotation; \
             a misalignment density supported on rational directions is not covariant under these rotations",
            out.len()
        ))
    } else {
        Some(format!("all {} images are rational directions; no violation found in this battery", out.len()))
    };
    Ok(CovarianceViolationReport {
        samples: out,
        non_rational_images,
        conclusion,
    })
}

/// Parses a battery: rational coordinates, three per line, lines taken in
/// pairs (direction, axis); `#` starts a comment.
pub fn parse_battery(text: &str) -> Result<Vec<WitnessSample>> {
    let mut vectors = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        last_line = line;
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 coordinates, found {}", fields.len()),
            });
        }
        let mut comps = Vec::with_capacity(3);
        for f in fields {
            let v: Q2Scalar = f.parse().map_err(|message| Error::Parse { line, message })?;
            if !v.is_rational() {
                return Err(Error::Parse {
                    line,
                    message: format!("coordinate `{f}` is not rational"),
                });
            }
            comps.push(v.rational_part().clone());
        }
        let v = RationalVector3::new(comps.try_into().expect("three"))
            .map_err(|_| Error::Parse { line, message: "zero vector".into() })?;
        vectors.push(v);
    }
    if vectors.len() % 2 != 0 {
        return Err(Error::Parse {
            line: last_line,
            message: "direction without a rotation axis".into(),
        });
    }
    Ok(vectors
        .chunks(2)
        .map(|p| WitnessSample {
            direction: p[0].clone(),
            axis: p[1].clone(),
        })
        .collect())
}

/// The built-in ten-sample battery.
pub fn default_battery() -> Vec<WitnessSample> {
    parse_battery(include_str!("../data/meyer_battery.rays")).expect("bundled battery parses")
}
