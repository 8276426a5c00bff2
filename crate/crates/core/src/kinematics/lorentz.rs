//! Standard-synchronization Lorentz matrices and rotation helpers.
//!
//! Random factories used by the property tests and verification suites
//! live here too: rotations come from uniformly distributed unit
//! quaternions, boosts from a uniform direction with speed uniform in
//! `[0, max_speed]`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::Rng;

use super::{boost_to_frame, intertwiner, minkowski, FourVelocity};
use crate::error::{CtError, Result};

/// Tolerance for `R^T R = I` and `det R = 1`.
pub const ROTATION_TOL: f64 = 1e-9;

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Active rotation by `angle` about the unit vector `axis` (Rodrigues).
pub fn rotation_from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let n = axis.normalize();
    let k = n.cross_matrix();
    Matrix3::identity() + angle.sin() * k + (1.0 - angle.cos()) * k * k
}

/// Rotation matrix of the quaternion `w + x i + y j + z k` (normalized first).
pub fn rotation_from_quaternion(q: [f64; 4]) -> Matrix3<f64> {
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Uniformly distributed unit quaternion (Shoemake's subgroup algorithm).
pub fn random_unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen::<f64>() * 2.0 * PI;
    let u3: f64 = rng.gen::<f64>() * 2.0 * PI;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    [a * u2.sin(), a * u2.cos(), b * u3.sin(), b * u3.cos()]
}

pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    rotation_from_quaternion(random_unit_quaternion(rng))
}

/// Uniformly distributed unit vector.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen::<f64>() * 2.0 * PI;
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Pure standard boost into the frame moving with velocity `beta`.
pub fn standard_boost(beta: &Vector3<f64>) -> Result<Matrix4<f64>> {
    let b2 = beta.norm_squared();
    if !(b2 < 1.0) {
        return Err(CtError::Domain(format!(
            "boost speed must be below 1, got {}",
            b2.sqrt()
        )));
    }
    let gamma = 1.0 / (1.0 - b2).sqrt();
    let mut m = Matrix4::identity();
    m[(0, 0)] = gamma;
    for i in 0..3 {
        m[(0, i + 1)] = -gamma * beta[i];
        m[(i + 1, 0)] = -gamma * beta[i];
        for j in 0..3 {
            // (gamma - 1) beta beta^T / beta^2, written without the division.
            m[(i + 1, j + 1)] += gamma * gamma / (1.0 + gamma) * beta[i] * beta[j];
        }
    }
    Ok(m)
}

/// `diag(1, R)` as a standard Lorentz matrix.
pub fn rotation_lorentz(r: &Matrix3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(1, 1).copy_from(r);
    m
}

pub fn random_boost<R: Rng + ?Sized>(rng: &mut R, max_speed: f64) -> Matrix4<f64> {
    let speed = rng.gen::<f64>() * max_speed;
    let beta = random_direction(rng) * speed;
    standard_boost(&beta).expect("speed below one")
}

/// Random proper orthochronous Lorentz matrix `B R`.
pub fn random_lorentz<R: Rng + ?Sized>(rng: &mut R, max_speed: f64) -> Matrix4<f64> {
    let r = random_rotation(rng);
    random_boost(rng, max_speed) * rotation_lorentz(&r)
}

/// Random CT four-velocity whose EP counterpart moves with speed at most
/// `max_speed` relative to the preferred frame.
pub fn random_four_velocity<R: Rng + ?Sized>(rng: &mut R, max_speed: f64) -> FourVelocity {
    let speed = rng.gen::<f64>() * max_speed;
    let gamma = 1.0 / (1.0 - speed * speed).sqrt();
    FourVelocity::from_space(random_direction(rng) * (gamma * speed)).expect("finite")
}

/// Standard Lorentz matrix `L_u` whose CT image `D(L_u, u~)` boosts the
/// preferred frame into the frame `u`.
pub fn frame_boost(u: &FourVelocity) -> Matrix4<f64> {
    intertwiner(u).inverse * boost_to_frame(u).matrix
}

/// Frobenius norm of `Lambda^T eta Lambda - eta`.
pub fn lorentz_residual(lambda: &Matrix4<f64>) -> f64 {
    let eta = minkowski();
    (lambda.transpose() * eta * lambda - eta).norm()
}

/// Residual of `R^T R = I` and `det R = 1`.
pub fn rotation_residual(r: &Matrix3<f64>) -> f64 {
    let orth = (r.transpose() * r - Matrix3::identity()).norm();
    orth.max((r.determinant() - 1.0).abs())
}

pub fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let res = rotation_residual(r);
    if res.is_finite() && res <= ROTATION_TOL {
        Ok(())
    } else {
        Err(CtError::NotRotation(format!(
            "orthogonality/determinant residual {res:e}"
        )))
    }
}

/// Axis-angle `(n, theta)` of a rotation with `theta` in `[0, pi]`.
///
/// The axis comes from the antisymmetric part away from `theta = pi`, and
/// from the symmetric part (the eigenvector of `R` with eigenvalue one)
/// near it. At `theta = 0` the axis is arbitrary and `e_z` is returned.
pub fn rotation_axis_angle(r: &Matrix3<f64>) -> Result<(Vector3<f64>, f64)> {
    check_rotation(r)?;
    let a = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    ) * 0.5;
    let sin = a.norm();
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let angle = sin.atan2(cos);
    if sin < 1e-300 && cos > 0.0 {
        return Ok((Vector3::z(), 0.0));
    }
    if cos > -0.5 {
        return Ok((a / sin, angle));
    }
    // R + R^T - (tr R - 1) I = 2 (1 - cos) n n^T
    let s = r + r.transpose() - Matrix3::identity() * (2.0 * cos);
    let col = (0..3)
        .max_by(|&i, &j| s[(i, i)].total_cmp(&s[(j, j)]))
        .unwrap_or(0);
    let mut n: Vector3<f64> = s.column(col).into_owned();
    n /= n.norm();
    let sign_ref = n.dot(&a);
    if sign_ref < 0.0 || (sign_ref == 0.0 && n[col] < 0.0) {
        n = -n;
    }
    Ok((n, angle))
}
