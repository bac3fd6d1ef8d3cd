//! SE(3) / se(3) toolbox.
//!
//! Twists are stored as 6-vectors ordered (linear; angular). The hat map sends
//! `y = (y1..y6)` to
//!
//! ```text
//! [  0  -y6   y5  y1 ]
//! [  y6   0  -y4  y2 ]
//! [ -y5  y4    0  y3 ]
//! [  0    0    0   0 ]
//! ```

use nalgebra::{Matrix3, Matrix4, Vector3, Vector6};

use crate::error::{Result, SwimError};

/// Antisymmetry defect above which [`vee`] refuses its input.
pub const VEE_TOLERANCE: f64 = 1e-10;

/// Below this value of `|omega| dt` the exponential switches to its Taylor branch.
const SMALL_ANGLE: f64 = 1e-6;

/// Orthonormal 3×3 matrix with unit determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Accepts `m` when `‖mᵀm − I‖_F ≤ tol` and `|det m − 1| ≤ tol`.
    pub fn try_new(m: Matrix3<f64>, tol: f64) -> Result<Self> {
        let defect = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if defect > tol || (det - 1.0).abs() > tol {
            return Err(SwimError::StructureViolation(format!(
                "not a rotation: orthogonality defect {defect:e}, det {det}"
            )));
        }
        Ok(Self(m))
    }

    /// Rotation by `angle` about the unit `axis`.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        Self(so3_exp(&(axis.normalize() * angle)))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Frobenius norm of `RᵀR − I`.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }

    /// Rotation angle in `[0, π]`, computed with `atan2` so tiny angles keep full precision.
    pub fn angle(&self) -> f64 {
        so3_log(&self.0).norm()
    }
}

impl std::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

/// Element of SE(3): the swimmer's position and orientation in the lab frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: RotationMatrix,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: RotationMatrix::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: RotationMatrix, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Group composition `self · other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.translation + self.rotation.matrix() * other.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt.matrix() * self.translation),
        }
    }

    /// Homogeneous 4×4 representation.
    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Exponential coordinates of the pose, so that `exp(hat(log)) = self`.
    pub fn log(&self) -> Vector6<f64> {
        let omega = so3_log(self.rotation.matrix());
        let v_inv = left_jacobian_inverse(&omega);
        let v = v_inv * self.translation;
        Vector6::new(v.x, v.y, v.z, omega.x, omega.y, omega.z)
    }

    /// Closed-form SE(3) exponential of a twist.
    pub fn exp(xi: &Vector6<f64>) -> Pose {
        exp_step(&Pose::identity(), &BodyTwist::from_vector(xi), 1.0)
    }
}

/// Twist expressed in the body frame: `(R⁻¹ẋ, R⁻¹ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyTwist {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl BodyTwist {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self { linear, angular }
    }

    pub fn from_vector(y: &Vector6<f64>) -> Self {
        Self {
            linear: Vector3::new(y[0], y[1], y[2]),
            angular: Vector3::new(y[3], y[4], y[5]),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.linear.x,
            self.linear.y,
            self.linear.z,
            self.angular.x,
            self.angular.y,
            self.angular.z,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.linear.iter().chain(self.angular.iter()).all(|v| v.is_finite())
    }
}

/// Skew-symmetric matrix `[w]×` with `[w]× v = w × v`.
pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Lie algebra isomorphism ℝ⁶ → se(3).
pub fn hat(y: &Vector6<f64>) -> Matrix4<f64> {
    Matrix4::new(
        0.0, -y[5], y[4], y[0], //
        y[5], 0.0, -y[3], y[1], //
        -y[4], y[3], 0.0, y[2], //
        0.0, 0.0, 0.0, 0.0,
    )
}

/// Inverse of [`hat`]. The rotational part is read from the antisymmetric part of
/// the 3×3 block; a symmetric defect or a non-zero last row above
/// [`VEE_TOLERANCE`] is rejected.
pub fn vee(m: &Matrix4<f64>) -> Result<Vector6<f64>> {
    let block = m.fixed_view::<3, 3>(0, 0);
    let sym = (block + block.transpose()) * 0.5;
    let sym_defect = sym.norm();
    let row_defect = m.row(3).norm();
    if sym_defect > VEE_TOLERANCE || row_defect > VEE_TOLERANCE {
        return Err(SwimError::StructureViolation(format!(
            "symmetric defect {sym_defect:e}, last-row defect {row_defect:e}"
        )));
    }
    let a = (block - block.transpose()) * 0.5;
    Ok(Vector6::new(
        m[(0, 3)],
        m[(1, 3)],
        m[(2, 3)],
        a[(2, 1)],
        a[(0, 2)],
        a[(1, 0)],
    ))
}

/// se(3) commutator `vee(hat(a)·hat(b) − hat(b)·hat(a))`, evaluated in vector form.
pub fn commutator(a: &Vector6<f64>, b: &Vector6<f64>) -> Vector6<f64> {
    let (va, wa) = split(a);
    let (vb, wb) = split(b);
    let lin = wa.cross(&vb) - wb.cross(&va);
    let ang = wa.cross(&wb);
    Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
}

fn split(y: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (
        Vector3::new(y[0], y[1], y[2]),
        Vector3::new(y[3], y[4], y[5]),
    )
}

/// `pose · exp(dt · hat(xi))`, exact for a twist held constant over `[0, dt]`.
pub fn exp_step(pose: &Pose, xi: &BodyTwist, dt: f64) -> Pose {
    debug_assert!(dt >= 0.0, "exp_step needs dt >= 0");
    let phi = xi.angular * dt;
    let rho = xi.linear * dt;
    let rot = so3_exp(&phi);
    let trans = left_jacobian(&phi) * rho;
    Pose {
        rotation: RotationMatrix(pose.rotation.matrix() * rot),
        translation: pose.translation + pose.rotation.matrix() * trans,
    }
}

/// `1 − cos θ` without cancellation.
fn half_versine(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    2.0 * s * s
}

/// Rodrigues formula.
fn so3_exp(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(phi);
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, half_versine(theta) / theta2)
    };
    Matrix3::identity() + k * a + k * k * b
}

/// V-matrix of the SE(3) exponential.
fn left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(phi);
    let (b, c) = if theta < SMALL_ANGLE {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        (
            half_versine(theta) / theta2,
            (theta - theta.sin()) / (theta2 * theta),
        )
    };
    Matrix3::identity() + k * b + k * k * c
}

fn left_jacobian_inverse(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(phi);
    let c = if theta < SMALL_ANGLE {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        (1.0 - theta * theta.sin() / (2.0 * half_versine(theta))) / theta2
    };
    Matrix3::identity() - k * 0.5 + k * k * c
}

/// Rotation vector of `r`, angle in `[0, π]`.
fn so3_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let axis_sin = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    ) * 0.5;
    let s = axis_sin.norm();
    let c = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = s.atan2(c);
    if theta < SMALL_ANGLE {
        return axis_sin * (1.0 + theta * theta / 6.0);
    }
    if std::f64::consts::PI - theta > 1e-6 {
        return axis_sin * (theta / s);
    }
    // Near π the sine vanishes; recover the axis from the symmetric part.
    let b = (r + r.transpose()) * 0.5 - Matrix3::identity() * c;
    let mut col = 0;
    for j in 1..3 {
        if b[(j, j)] > b[(col, col)] {
            col = j;
        }
    }
    let mut axis: Vector3<f64> = b.column(col).into();
    axis /= axis.norm();
    if axis.dot(&axis_sin) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn e(i: usize) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v[i] = 1.0;
        v
    }

    #[test]
    fn hat_layout() {
        assert_eq!(hat(&Vector6::zeros()), Matrix4::zeros());
        let m = hat(&Vector6::new(1.0, 2.0, 3.0, 0.0, 0.0, 0.0));
        assert_eq!(m.column(3).clone_owned(), nalgebra::Vector4::new(1.0, 2.0, 3.0, 0.0));
        assert!(m.fixed_view::<3, 3>(0, 0).iter().all(|&v| v == 0.0));
        let m = hat(&e(5));
        assert_eq!(
            m.fixed_view::<3, 3>(0, 0).clone_owned(),
            Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert!(m.column(3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vee_rejects_symmetric_defect() {
        assert_eq!(vee(&Matrix4::zeros()).unwrap(), Vector6::zeros());
        let mut m = hat(&Vector6::new(0.1, 0.2, 0.3, 0.4, 0.5, 0.6));
        m[(0, 1)] += 1e-3;
        m[(1, 0)] += 1e-3;
        assert!(matches!(vee(&m), Err(SwimError::StructureViolation(_))));
    }

    #[test]
    fn commutator_basis() {
        assert_eq!(commutator(&e(3), &e(4)), e(5));
        // Brute force: hat(e6)·hat(e1) has a single 1 in entry (1, 3).
        let brute = vee(&(hat(&e(5)) * hat(&e(0)) - hat(&e(0)) * hat(&e(5)))).unwrap();
        assert_eq!(brute, e(1));
        assert_eq!(commutator(&e(5), &e(0)), e(1));
    }

    #[test]
    fn exp_step_examples() {
        let p = exp_step(&Pose::identity(), &BodyTwist::zero(), 1.0);
        assert_eq!(p, Pose::identity());

        let tw = BodyTwist::new(Vector3::zeros(), Vector3::new(0.0, 0.0, PI / 2.0));
        let p = exp_step(&Pose::identity(), &tw, 1.0);
        let rz = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(*p.rotation.matrix(), rz, epsilon = 1e-15);
        assert_eq!(p.translation, Vector3::zeros());

        let tw = BodyTwist::new(Vector3::x(), Vector3::new(0.0, 0.0, PI / 2.0));
        let p = exp_step(&Pose::identity(), &tw, 1.0);
        assert_relative_eq!(p.translation, Vector3::new(2.0 / PI, 2.0 / PI, 0.0), epsilon = 1e-15);

        // Oracle: sub-stepped explicit integration of Ṙ = R·hat(ω), ẋ = R v.
        let n = 200_000;
        let h = 1.0 / n as f64;
        let mut r = Matrix3::identity();
        let mut x = Vector3::zeros();
        for _ in 0..n {
            let rh = r * so3_exp(&(tw.angular * (0.5 * h)));
            x += rh * tw.linear * h;
            r *= so3_exp(&(tw.angular * h));
        }
        assert_relative_eq!(p.translation, x, epsilon = 1e-9);
        assert_relative_eq!(*p.rotation.matrix(), r, epsilon = 1e-9);
    }

    #[test]
    fn small_angle_branch_is_continuous() {
        let v = Vector3::new(0.3, -0.2, 0.7);
        for &t in &[1e-7, 0.99e-6, 1.01e-6, 1e-5] {
            let w = Vector3::new(1.0, 2.0, -0.5).normalize() * t;
            let p = exp_step(&Pose::identity(), &BodyTwist::new(v, w), 1.0);
            let approx_t = v + w.cross(&v) * 0.5 + w.cross(&w.cross(&v)) / 6.0;
            assert_relative_eq!(p.translation, approx_t, epsilon = 1e-12);
            assert!(p.rotation.orthogonality_defect() < 1e-15);
        }
    }

    #[test]
    fn log_inverts_exp() {
        for xi in [
            Vector6::new(0.1, -0.3, 0.2, 0.5, -1.2, 0.7),
            Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 3.0),
            Vector6::new(0.0, 2.0, 0.0, 1e-9, 0.0, 0.0),
        ] {
            let p = Pose::exp(&xi);
            assert_relative_eq!(p.log(), xi, epsilon = 1e-9);
        }
        let p = Pose::exp(&Vector6::new(0.2, 0.1, 0.0, 0.0, PI - 1e-9, 0.0));
        assert_relative_eq!(p.log()[4], PI - 1e-9, epsilon = 1e-6);
    }

    #[test]
    fn rotation_angle_keeps_precision() {
        let r = RotationMatrix::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 3e-9);
        assert_relative_eq!(r.angle(), 3e-9, max_relative = 1e-6);
        assert_eq!(RotationMatrix::identity().angle(), 0.0);
    }

    #[test]
    fn try_new_rejects_non_rotation() {
        assert!(RotationMatrix::try_new(Matrix3::identity() * 2.0, 1e-12).is_err());
        assert!(RotationMatrix::try_new(-Matrix3::identity(), 1e-12).is_err());
    }
}
