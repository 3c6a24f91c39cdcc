//! Fixed-size (3×3) complex linear algebra, proper rotations of ℝ³ and the
//! spin-1 representation of the rotation group.
//!
//! Spin space uses the ordered basis (m = +1, m = 0, m = −1). The map from
//! Cartesian components to that basis is the unitary
//!
//! ```text
//!        ⎡ −1/√2   i/√2   0 ⎤
//!   T =  ⎢   0      0     1 ⎥
//!        ⎣  1/√2   i/√2   0 ⎦
//! ```
//!
//! whose rows are the conjugated spherical unit vectors (Condon–Shortley
//! phases). For a proper rotation `R` we set `D¹(R) = T Rᵀ T†`, which gives
//! `D¹(R) S_n D¹(R)⁻¹ = S_{R⁻¹n}`. With this convention `R ↦ D¹(R)` reverses
//! products: `D¹(R₁R₂) = D¹(R₂) D¹(R₁)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex 3×3 matrix.
pub type CMatrix3 = Matrix3<Complex64>;
/// Complex 3-vector (a state or eigenvector in spin space).
pub type CVector3 = Vector3<Complex64>;

const UNIT_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A direction in ℝ³.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector3 {
    x: f64,
    y: f64,
    z: f64,
}

impl fmt::Debug for UnitVector3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.15}, {:.15}, {:.15})", self.x, self.y, self.z)
    }
}

impl UnitVector3 {
    pub const X: UnitVector3 = UnitVector3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: UnitVector3 = UnitVector3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: UnitVector3 = UnitVector3 { x: 0.0, y: 0.0, z: 1.0 };

    /// Accepts components that already have unit length.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm2 = x * x + y * y + z * z;
        if !norm2.is_finite() || (norm2 - 1.0).abs() > UNIT_TOL {
            return Err(Error::validation(format!(
                "direction ({x}, {y}, {z}) is not unit length (|v|² = {norm2})"
            )));
        }
        Ok(UnitVector3 { x, y, z })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalize(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::validation(format!(
                "cannot normalize vector ({x}, {y}, {z})"
            )));
        }
        Ok(UnitVector3 {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn from_vector(v: &Vector3<f64>) -> Result<Self> {
        Self::normalize(v.x, v.y, v.z)
    }

    /// Direction from polar angle `theta` (from +z) and azimuth `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let s = theta.sin();
        UnitVector3 {
            x: s * phi.cos(),
            y: s * phi.sin(),
            z: theta.cos(),
        }
    }

    /// Uniformly distributed direction.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        UnitVector3 {
            x: r * phi.cos(),
            y: r * phi.sin(),
            z,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Angle in `[0, π]`, accurate for nearly (anti)parallel pairs.
    pub fn angle_to(&self, other: &UnitVector3) -> f64 {
        let a = self.as_vector();
        let b = other.as_vector();
        a.cross(&b).norm().atan2(a.dot(&b))
    }

    pub fn negate(&self) -> UnitVector3 {
        UnitVector3 {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Right-handed orthonormal pair `(e1, e2)` completing `(e1, e2, self)`.
    ///
    /// Obtained by carrying the x and y axes along the geodesic rotation
    /// that takes +z to `self`.
    pub fn orthonormal_frame(&self) -> (Vector3<f64>, Vector3<f64>) {
        let r = Rotation3::geodesic(&UnitVector3::Z, self);
        (r.matrix() * Vector3::x(), r.matrix() * Vector3::y())
    }
}

/// A proper rotation of ℝ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3(Matrix3::identity())
    }

    /// Validates orthogonality and unit determinant.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let defect = (m * m.transpose() - Matrix3::identity()).abs().max();
        if !defect.is_finite() || defect > UNIT_TOL {
            return Err(Error::validation(format!(
                "matrix is not orthogonal (|R Rᵀ − I|∞ = {defect:e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > UNIT_TOL {
            return Err(Error::validation(format!(
                "matrix is not a proper rotation (det = {det})"
            )));
        }
        Ok(Rotation3(m))
    }

    /// Uniformly distributed (Haar) rotation.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        // Uniform axis with angle density (1 − cos ψ)/π is Haar.
        let axis = UnitVector3::random(rng);
        let angle = loop {
            let psi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let accept: f64 = rng.gen_range(0.0..2.0);
            if accept <= 1.0 - psi.cos() {
                break psi;
            }
        };
        rotation_about(&axis, angle)
    }

    /// Smallest rotation carrying `from` onto `to`; antiparallel inputs use
    /// a half turn about a canonical perpendicular axis.
    pub fn geodesic(from: &UnitVector3, to: &UnitVector3) -> Self {
        let a = from.as_vector();
        let b = to.as_vector();
        let cross = a.cross(&b);
        let sin = cross.norm();
        let cos = a.dot(&b);
        if sin < 1e-15 {
            if cos > 0.0 {
                return Rotation3::identity();
            }
            let helper = if a.x.abs() < 0.9 {
                Vector3::x()
            } else {
                Vector3::y()
            };
            let axis = a.cross(&helper).normalize();
            let axis = UnitVector3::from_vector(&axis).expect("nonzero perpendicular");
            return rotation_about(&axis, std::f64::consts::PI);
        }
        let axis = UnitVector3::from_vector(&cross).expect("nonzero cross product");
        rotation_about(&axis, sin.atan2(cos))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Rotation3 {
        Rotation3(self.0.transpose())
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        Rotation3(self.0 * other.0)
    }

    pub fn apply(&self, v: &UnitVector3) -> UnitVector3 {
        let w = self.0 * v.as_vector();
        // Re-normalize to keep the unit invariant exact under repeated use.
        UnitVector3::from_vector(&w).expect("rotation preserves length")
    }
}

fn rotation_about(axis: &UnitVector3, angle: f64) -> Rotation3 {
    let (s, c) = angle.sin_cos();
    let [x, y, z] = axis.as_array();
    let t = 1.0 - c;
    Rotation3(Matrix3::new(
        c + x * x * t,
        x * y * t - z * s,
        x * z * t + y * s,
        y * x * t + z * s,
        c + y * y * t,
        y * z * t - x * s,
        z * x * t - y * s,
        z * y * t + x * s,
        c + z * z * t,
    ))
}

/// Right-handed rotation by `angle` radians about `axis` (normalized here).
pub fn rotation_from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Rotation3> {
    if !angle.is_finite() {
        return Err(Error::validation(format!("rotation angle {angle} is not finite")));
    }
    let axis = UnitVector3::from_vector(axis)
        .map_err(|_| Error::validation("rotation axis must be a nonzero finite vector"))?;
    Ok(rotation_about(&axis, angle))
}

/// A complex Hermitian 3×3 operator on spin space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianOp3(CMatrix3);

impl HermitianOp3 {
    pub fn new(m: CMatrix3) -> Result<Self> {
        let defect = (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !defect.is_finite() || defect > UNIT_TOL {
            return Err(Error::validation(format!(
                "matrix is not Hermitian (|A − A†|∞ = {defect:e})"
            )));
        }
        Ok(HermitianOp3(m))
    }

    /// Symmetrizes `m`; for matrices Hermitian up to rounding.
    pub(crate) fn from_matrix_hermitized(m: CMatrix3) -> Self {
        HermitianOp3((m + m.adjoint()) * Complex64::new(0.5, 0.0))
    }

    pub fn identity() -> Self {
        HermitianOp3(CMatrix3::identity())
    }

    pub fn zero() -> Self {
        HermitianOp3(CMatrix3::zeros())
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        HermitianOp3(CMatrix3::from_diagonal(&CVector3::new(
            Complex64::new(d[0], 0.0),
            Complex64::new(d[1], 0.0),
            Complex64::new(d[2], 0.0),
        )))
    }

    pub fn matrix(&self) -> &CMatrix3 {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn add(&self, other: &HermitianOp3) -> HermitianOp3 {
        HermitianOp3(self.0 + other.0)
    }

    pub fn sub(&self, other: &HermitianOp3) -> HermitianOp3 {
        HermitianOp3(self.0 - other.0)
    }

    pub fn scale(&self, s: f64) -> HermitianOp3 {
        HermitianOp3(self.0 * Complex64::new(s, 0.0))
    }

    /// Plain matrix product (not Hermitian in general).
    pub fn mul(&self, other: &HermitianOp3) -> CMatrix3 {
        self.0 * other.0
    }

    pub fn frobenius_distance(&self, other: &HermitianOp3) -> f64 {
        frobenius(&(self.0 - other.0))
    }

    /// ⟨ψ|A|ψ⟩.
    pub fn expectation(&self, psi: &CVector3) -> f64 {
        psi.dotc(&(self.0 * psi)).re
    }

    /// Rows of complex entries as `[re, im]` pairs, row-major.
    pub fn to_pairs(&self) -> [[[f64; 2]; 3]; 3] {
        let mut out = [[[0.0; 2]; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                let z = self.0[(r, c)];
                *cell = [z.re, z.im];
            }
        }
        out
    }
}

/// A unitary operator on spin space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary3(CMatrix3);

impl Unitary3 {
    pub fn new(m: CMatrix3) -> Result<Self> {
        let defect = frobenius(&(m * m.adjoint() - CMatrix3::identity()));
        if !defect.is_finite() || defect > UNIT_TOL {
            return Err(Error::validation(format!(
                "matrix is not unitary (|U U† − I|_F = {defect:e})"
            )));
        }
        Ok(Unitary3(m))
    }

    pub fn matrix(&self) -> &CMatrix3 {
        &self.0
    }

    pub fn inverse(&self) -> Unitary3 {
        Unitary3(self.0.adjoint())
    }

    pub fn mul(&self, other: &Unitary3) -> Unitary3 {
        Unitary3(self.0 * other.0)
    }

    /// `U A U⁻¹`.
    pub fn conjugate(&self, a: &HermitianOp3) -> HermitianOp3 {
        HermitianOp3::from_matrix_hermitized(self.0 * a.0 * self.0.adjoint())
    }
}

pub fn frobenius(m: &CMatrix3) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Cartesian-to-spherical change of basis; rows are conjugated spherical unit vectors.
pub fn cartesian_to_spherical() -> CMatrix3 {
    let h = FRAC_1_SQRT_2;
    CMatrix3::new(
        Complex64::new(-h, 0.0),
        Complex64::new(0.0, h),
        ZERO,
        ZERO,
        ZERO,
        ONE,
        Complex64::new(h, 0.0),
        Complex64::new(0.0, h),
        ZERO,
    )
}

/// Spin-1 representation matrix `D¹(R) = T Rᵀ T†` in the (+1, 0, −1) basis.
pub fn wigner_d1(rotation: &Rotation3) -> Unitary3 {
    let t = cartesian_to_spherical();
    let rt = rotation.matrix().transpose().map(|x| Complex64::new(x, 0.0));
    Unitary3(t * rt * t.adjoint())
}

/// One eigenpair of a Hermitian operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: CVector3,
}

/// Eigen-decomposition with eigenvalues in descending order.
///
/// Eigenvectors are orthonormal and phase-fixed so that the first component
/// with modulus above `1e-10` is real and positive. The characteristic cubic
/// is solved in closed form; if two roots lie within `1e-8` (relative to the
/// spectral scale) or the closed-form vectors miss the residual target, a
/// cyclic Jacobi iteration is used instead.
pub fn eig_hermitian3(a: &HermitianOp3) -> [Eigenpair; 3] {
    let m = a.matrix();
    let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    if let Some(pairs) = closed_form(m, scale) {
        return pairs;
    }
    jacobi(m)
}

fn closed_form(m: &CMatrix3, scale: f64) -> Option<[Eigenpair; 3]> {
    let values = cubic_eigenvalues(m);
    let gap = (values[0] - values[1]).min(values[1] - values[2]);
    if gap < 1e-8 * scale {
        return None;
    }
    let mut vectors = [CVector3::zeros(); 3];
    for (k, &lambda) in values.iter().enumerate().take(2) {
        let b = m - CMatrix3::identity() * Complex64::new(lambda, 0.0);
        let rows = [
            b.row(0).transpose(),
            b.row(1).transpose(),
            b.row(2).transpose(),
        ];
        let candidates = [
            rows[0].cross(&rows[1]),
            rows[0].cross(&rows[2]),
            rows[1].cross(&rows[2]),
        ];
        let best = candidates
            .iter()
            .max_by(|p, q| p.norm().total_cmp(&q.norm()))
            .copied()?;
        let n = best.norm();
        if n < 1e-300 {
            return None;
        }
        vectors[k] = best / Complex64::new(n, 0.0);
    }
    // Orthogonalize the second against the first, then complete the basis.
    let proj = vectors[0].dotc(&vectors[1]);
    let v1 = vectors[1] - vectors[0] * proj;
    vectors[1] = v1 / Complex64::new(v1.norm(), 0.0);
    vectors[2] = vectors[0].cross(&vectors[1]).conjugate();
    let pairs = finish(values, vectors);
    let residual = pairs
        .iter()
        .map(|p| (m * p.vector - p.vector * Complex64::new(p.value, 0.0)).norm())
        .fold(0.0, f64::max);
    (residual <= 1e-12 * scale).then_some(pairs)
}

fn cubic_eigenvalues(m: &CMatrix3) -> [f64; 3] {
    let a00 = m[(0, 0)].re;
    let a11 = m[(1, 1)].re;
    let a22 = m[(2, 2)].re;
    let p1 = m[(0, 1)].norm_sqr() + m[(0, 2)].norm_sqr() + m[(1, 2)].norm_sqr();
    let q = (a00 + a11 + a22) / 3.0;
    let p2 = (a00 - q).powi(2) + (a11 - q).powi(2) + (a22 - q).powi(2) + 2.0 * p1;
    if p2 <= 0.0 {
        return [q, q, q];
    }
    let p = (p2 / 6.0).sqrt();
    let b = (m - CMatrix3::identity() * Complex64::new(q, 0.0)) / Complex64::new(p, 0.0);
    let r = (b.determinant().re / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let l2 = 3.0 * q - l1 - l3;
    let mut v = [l1, l2, l3];
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

fn jacobi(m: &CMatrix3) -> [Eigenpair; 3] {
    let mut a = *m;
    let mut w = CMatrix3::identity();
    for _sweep in 0..100 {
        let off: f64 = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(p, q)| a[(p, q)].norm_sqr())
            .sum();
        let diag: f64 = (0..3).map(|i| a[(i, i)].norm_sqr()).sum();
        if off <= 1e-32 * diag.max(1e-300) || off == 0.0 {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            let mag = apq.norm();
            if mag < 1e-300 {
                continue;
            }
            let phase = apq / mag;
            let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
            let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
            let t = if tau == 0.0 { 1.0 } else { t };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            let mut v = CMatrix3::identity();
            v[(p, p)] = Complex64::new(c, 0.0);
            v[(p, q)] = Complex64::new(s, 0.0);
            v[(q, p)] = -phase.conj() * s;
            v[(q, q)] = phase.conj() * c;
            a = v.adjoint() * a * v;
            a[(p, q)] = ZERO;
            a[(q, p)] = ZERO;
            w *= v;
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.map(|i| a[(i, i)].re);
    let vectors = order.map(|i| w.column(i).into_owned());
    finish(values, vectors)
}

fn finish(values: [f64; 3], vectors: [CVector3; 3]) -> [Eigenpair; 3] {
    let mut out = [Eigenpair {
        value: 0.0,
        vector: CVector3::zeros(),
    }; 3];
    for k in 0..3 {
        out[k] = Eigenpair {
            value: values[k],
            vector: fix_phase(vectors[k]),
        };
    }
    out
}

fn fix_phase(v: CVector3) -> CVector3 {
    let v = v / Complex64::new(v.norm(), 0.0);
    match v.iter().find(|c| c.norm() > 1e-10) {
        Some(c) => v * (c.conj() / c.norm()),
        None => v,
    }
}
