//! Matrix-group primitives for SO(3) and the SE(3)-shaped symmetry group that
//! acts on the attitude/velocity state.
//!
//! Rotations are stored as full 3×3 matrices rather than quaternions. All
//! the observer analysis (traces, antisymmetric projections, Frobenius norms)
//! is matrix native, so keeping matrices avoids conversions in every check.
//!
//! Everything here is a pure function over `Copy` values.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column vector in ℝ³.
pub type Vector3 = nalgebra::Vector3<f64>;
/// 3×3 real matrix.
pub type Matrix3 = nalgebra::Matrix3<f64>;
/// 4×4 real matrix, used for homogeneous group/algebra representations.
pub type Matrix4 = nalgebra::Matrix4<f64>;

/// Tolerance for the orthonormality and determinant invariants of [`Rotation`].
pub const INVARIANT_TOL: f64 = 1e-9;
/// Tolerance for algebraic identities evaluated at double precision.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Below this angle `exp_so3` switches to its second-order Taylor expansion.
const SMALL_ANGLE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("matrix is not antisymmetric (max |m + mᵀ| = {deviation:e})")]
    NotAntisymmetric { deviation: f64 },
    #[error("matrix is not a rotation (‖mᵀm − I‖ = {orthogonality:e}, det = {det})")]
    NotRotation { orthogonality: f64, det: f64 },
    #[error("matrix has non-positive determinant {det}; cannot project onto SO(3)")]
    NonPositiveDeterminant { det: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// Element of SO(3): an orthonormal matrix with unit determinant.
///
/// The attitude convention throughout the crate is body-to-inertial, i.e.
/// `R * x_body` is the inertial-frame expression of `x_body`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix3", into = "Matrix3")]
pub struct Rotation(Matrix3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Validates `mat` against the SO(3) invariants at [`INVARIANT_TOL`].
    pub fn new(mat: Matrix3) -> Result<Self, GeometryError> {
        if !mat.iter().all(|x| x.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let orthogonality = orthogonality_defect(&mat);
        let det = mat.determinant();
        if orthogonality > INVARIANT_TOL || (det - 1.0).abs() > INVARIANT_TOL {
            return Err(GeometryError::NotRotation { orthogonality, det });
        }
        Ok(Rotation(mat))
    }

    /// Wraps a matrix that is known to be a rotation up to roundoff (products
    /// and transposes of rotations, exponentials of skew matrices).
    pub(crate) fn from_matrix_unchecked(mat: Matrix3) -> Self {
        Rotation(mat)
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3 {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Frobenius norm of `RᵀR − I`.
    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.0)
    }
}

impl fmt::Debug for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "Rotation([[{:.6}, {:.6}, {:.6}], [{:.6}, {:.6}, {:.6}], [{:.6}, {:.6}, {:.6}]])",
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)]
        )
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl TryFrom<Matrix3> for Rotation {
    type Error = GeometryError;

    fn try_from(mat: Matrix3) -> Result<Self, Self::Error> {
        Rotation::new(mat)
    }
}

impl From<Rotation> for Matrix3 {
    fn from(r: Rotation) -> Self {
        r.0
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vector3> for Rotation {
    type Output = Vector3;

    fn mul(self, rhs: Vector3) -> Vector3 {
        self.0 * rhs
    }
}

impl Mul<Vector3> for &Rotation {
    type Output = Vector3;

    fn mul(self, rhs: Vector3) -> Vector3 {
        self.0 * rhs
    }
}

fn orthogonality_defect(m: &Matrix3) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

/// Element `X = (R, v)` of the SE(3)-shaped symmetry group, with homogeneous
/// representation `[[R, v], [0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupElement {
    pub rot: Rotation,
    pub vec: Vector3,
}

impl GroupElement {
    pub fn new(rot: Rotation, vec: Vector3) -> Self {
        Self { rot, vec }
    }

    pub fn identity() -> Self {
        Self::new(Rotation::identity(), Vector3::zeros())
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        compose(self, other)
    }

    pub fn inverse(&self) -> GroupElement {
        inverse(self)
    }

    pub fn to_homogeneous(&self) -> Matrix4 {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rot.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.vec);
        m
    }

    /// Reads a homogeneous matrix, validating the rotation block and the
    /// bottom row.
    pub fn from_homogeneous(m: &Matrix4) -> Result<Self, GeometryError> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)] - 1.0];
        if bottom.iter().any(|x| x.abs() > INVARIANT_TOL) {
            return Err(GeometryError::NotRotation { orthogonality: f64::NAN, det: f64::NAN });
        }
        let rot = Rotation::new(m.fixed_view::<3, 3>(0, 0).into_owned())?;
        Ok(Self::new(rot, m.fixed_view::<3, 1>(0, 3).into_owned()))
    }
}

/// Element `(Ω, u)` of the Lie algebra, with homogeneous representation
/// `[[Ω×, u], [0, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TangentElement {
    pub omega: Vector3,
    pub u: Vector3,
}

impl TangentElement {
    pub fn new(omega: Vector3, u: Vector3) -> Self {
        Self { omega, u }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Pure translation `(0, u)`, the shape of the gravity and `Γ` terms.
    pub fn translation(u: Vector3) -> Self {
        Self::new(Vector3::zeros(), u)
    }

    pub fn to_homogeneous(&self) -> Matrix4 {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&self.omega));
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.u);
        m
    }
}

/// `w×`: the antisymmetric matrix with `skew(w) * v == w.cross(v)`.
pub fn skew(w: &Vector3) -> Matrix3 {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`skew`]. Rejects matrices whose symmetric part exceeds
/// [`INVARIANT_TOL`].
pub fn unskew(m: &Matrix3) -> Result<Vector3, GeometryError> {
    let deviation = (m + m.transpose()).amax();
    if !deviation.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if deviation > INVARIANT_TOL {
        return Err(GeometryError::NotAntisymmetric { deviation });
    }
    Ok(vee(m))
}

/// Reads the axial vector of the antisymmetric part without validation.
fn vee(m: &Matrix3) -> Vector3 {
    0.5 * Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
}

/// Orthogonal projection onto so(3): `½(M − Mᵀ)`.
pub fn project_so3(m: &Matrix3) -> Matrix3 {
    0.5 * (m - m.transpose())
}

/// Rodrigues' formula for `exp(w×)`.
pub fn exp_so3(w: &Vector3) -> Rotation {
    let theta = w.norm();
    let k = skew(w);
    let k2 = k * k;
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta * theta / 6.0, 0.5 - theta * theta / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Rotation(Matrix3::identity() + a * k + b * k2)
}

pub fn compose(a: &GroupElement, b: &GroupElement) -> GroupElement {
    GroupElement::new(a.rot * b.rot, a.rot * b.vec + a.vec)
}

pub fn inverse(a: &GroupElement) -> GroupElement {
    let rt = a.rot.transpose();
    GroupElement::new(rt, -(rt * a.vec))
}

/// Rotation angle in `[0, π]`.
///
/// Evaluated as `atan2(sin θ, cos θ)` with `sin θ` read from the
/// antisymmetric part; this agrees with `arccos((tr − 1)/2)` on SO(3) but
/// keeps full precision near `0` and `π`.
pub fn attitude_angle(r: &Rotation) -> f64 {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let sin = vee(r.matrix()).norm().min(1.0);
    sin.atan2(cos).clamp(0.0, PI)
}

/// Nearest rotation to `r` in the Frobenius sense, `M (MᵀM)^{-1/2}`.
pub fn renormalize(r: &Rotation) -> Result<Rotation, GeometryError> {
    nearest_rotation(r.matrix())
}

/// Polar projection of an arbitrary matrix onto SO(3).
///
/// The symmetric square root `U = (MᵀM)^{1/2}` is formed in closed form from
/// the eigenvalues via Cayley–Hamilton:
/// `U = (I₁I₂ − I₃)⁻¹ (−S² + (I₁² − I₂) S + I₁I₃ I)` with `I₁, I₂, I₃` the
/// invariants of the square-rooted eigenvalues.
pub fn nearest_rotation(m: &Matrix3) -> Result<Rotation, GeometryError> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let det = m.determinant();
    if det <= 0.0 {
        return Err(GeometryError::NonPositiveDeterminant { det });
    }
    let s = m.transpose() * m;
    let [l1, l2, l3] = symmetric_eigenvalues(&s);
    let (m1, m2, m3) = (l1.max(0.0).sqrt(), l2.max(0.0).sqrt(), l3.max(0.0).sqrt());
    let i1 = m1 + m2 + m3;
    let i2 = m1 * m2 + m2 * m3 + m3 * m1;
    let i3 = m1 * m2 * m3;
    let denom = i1 * i2 - i3;
    if denom <= 0.0 || i3 <= 0.0 {
        return Err(GeometryError::NonPositiveDeterminant { det });
    }
    let sqrt_s = (-(s * s) + (i1 * i1 - i2) * s + i1 * i3 * Matrix3::identity()) / denom;
    let inv = sqrt_s.try_inverse().ok_or(GeometryError::NonPositiveDeterminant { det })?;
    let out = m * inv;
    Ok(Rotation(out))
}

/// Eigenvalues of the symmetric part of `m`, sorted `λ₁ ≥ λ₂ ≥ λ₃`.
pub fn symmetric_eigenvalues(m: &Matrix3) -> [f64; 3] {
    let a = 0.5 * (m + m.transpose());
    let ev = a.symmetric_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2]];
    out.sort_by(|x, y| y.total_cmp(x));
    out
}
