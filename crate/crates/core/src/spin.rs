//! Sharp spin-1 observables `S_n = n·S` and their eigenprojectors.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg3::{CMatrix3, CVector3, HermitianOp3, UnitVector3};

/// Measurement outcome of a spin-1 component, ordered (+1, 0, −1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "-1")]
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Plus, Outcome::Zero, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Zero => 0,
            Outcome::Minus => -1,
        }
    }

    /// Position in the (+1, 0, −1) basis.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Zero => 1,
            Outcome::Minus => 2,
        }
    }

    pub fn from_value(v: i64) -> Option<Outcome> {
        match v {
            1 => Some(Outcome::Plus),
            0 => Some(Outcome::Zero),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Plus => write!(f, "+1"),
            Outcome::Zero => write!(f, "0"),
            Outcome::Minus => write!(f, "-1"),
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The three spin-1 component matrices `(S_x, S_y, S_z)`.
pub fn spin_matrices() -> [CMatrix3; 3] {
    let h = FRAC_1_SQRT_2;
    let o = c(0.0, 0.0);
    let sx = CMatrix3::new(o, c(h, 0.0), o, c(h, 0.0), o, c(h, 0.0), o, c(h, 0.0), o);
    let sy = CMatrix3::new(o, c(0.0, -h), o, c(0.0, h), o, c(0.0, -h), o, c(0.0, h), o);
    let sz = CMatrix3::new(c(1.0, 0.0), o, o, o, o, o, o, o, c(-1.0, 0.0));
    [sx, sy, sz]
}

/// `S_n = n_x S_x + n_y S_y + n_z S_z`.
pub fn spin_operator(n: &UnitVector3) -> HermitianOp3 {
    let [sx, sy, sz] = spin_matrices();
    let m = sx * c(n.x(), 0.0) + sy * c(n.y(), 0.0) + sz * c(n.z(), 0.0);
    HermitianOp3::from_matrix_hermitized(m)
}

/// Eigenprojectors of `S_n`, indexed by outcome in (+1, 0, −1) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpSpinTriple {
    pub direction: UnitVector3,
    pub projectors: [HermitianOp3; 3],
}

impl SharpSpinTriple {
    pub fn projector(&self, outcome: Outcome) -> &HermitianOp3 {
        &self.projectors[outcome.index()]
    }
}

/// Projectors from `P₀ = I − S_n²` and `P±₁ = (S_n² ± S_n)/2`.
pub fn sharp_projectors(n: &UnitVector3) -> SharpSpinTriple {
    let s = spin_operator(n);
    let s2 = s.mul(&s);
    let id = CMatrix3::identity();
    let half = c(0.5, 0.0);
    let plus = HermitianOp3::from_matrix_hermitized((s2 + s.matrix()) * half);
    let zero = HermitianOp3::from_matrix_hermitized(id - s2);
    let minus = HermitianOp3::from_matrix_hermitized((s2 - s.matrix()) * half);
    SharpSpinTriple {
        direction: *n,
        projectors: [plus, zero, minus],
    }
}

/// The three outcome probabilities `⟨ψ|P_{n,i}|ψ⟩` in (+1, 0, −1) order.
///
/// Uses `a = ⟨ψ|S_n ψ⟩` and `b = ‖S_n ψ‖²`, so that `p₀ = 1 − b` and
/// `p±₁ = (b ± a)/2` for normalized `ψ`.
pub fn sharp_probabilities(n: &UnitVector3, psi: &CVector3) -> [f64; 3] {
    let [sx, sy, sz] = spin_matrices();
    let s = sx * c(n.x(), 0.0) + sy * c(n.y(), 0.0) + sz * c(n.z(), 0.0);
    let v = s * psi;
    let a = psi.dotc(&v).re;
    let b = v.norm_squared();
    let plus = (0.5 * (b + a)).clamp(0.0, 1.0);
    let minus = (0.5 * (b - a)).clamp(0.0, 1.0);
    let zero = (1.0 - b).clamp(0.0, 1.0);
    [plus, zero, minus]
}

/// The `S_z` eigenstate `ψ_{z,i}` (a standard basis vector).
pub fn z_eigenstate(outcome: Outcome) -> CVector3 {
    let mut v = CVector3::zeros();
    v[outcome.index()] = c(1.0, 0.0);
    v
}
