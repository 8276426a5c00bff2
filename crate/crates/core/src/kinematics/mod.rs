//! Frames, transforms and metrics in the CT synchronization.
//!
//! Every inertial observer is labelled by the contravariant four-velocity
//! `u` of the preferred frame as seen by that observer. All frame-dependent
//! objects (metric, intertwiner, transforms) are parameterized by it, and
//! every transform carries both the source and the target four-velocity so
//! that vectors from different frames cannot be mixed silently.

mod light;
pub mod lorentz;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{CtError, Result};

pub use light::{closed_path_average, light_speed, one_way_speed, LightSpeed, PathLeg};

/// Tolerance used when validating four-velocities and boost parameters.
pub const SHELL_TOL: f64 = 1e-10;

/// Tolerance used to decide whether two frames are the same.
pub const FRAME_TOL: f64 = 1e-9;

/// Minkowski metric `diag(+, -, -, -)`.
pub fn minkowski() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0))
}

/// Contravariant four-velocity of the preferred frame relative to an
/// observer.
///
/// Satisfies `1/(u^0)^2 - |u|^2 = 1`, hence `g_{mu nu}(u) u^mu u^nu = 1` and
/// the covariant space part `u_i` vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct FourVelocity {
    u0: f64,
    space: Vector3<f64>,
}

impl FourVelocity {
    /// The preferred frame itself, `u = (1, 0, 0, 0)`.
    pub fn preferred() -> Self {
        Self {
            u0: 1.0,
            space: Vector3::zeros(),
        }
    }

    /// Builds `u` from its contravariant space part; `u^0 = 1/sqrt(1 + |u|^2)`.
    pub fn from_space(space: Vector3<f64>) -> Result<Self> {
        if !space.iter().all(|c| c.is_finite()) {
            return Err(CtError::Domain(format!(
                "non-finite four-velocity space part {:?}",
                space.as_slice()
            )));
        }
        let u0 = 1.0 / (1.0 + space.norm_squared()).sqrt();
        if !(u0 > 0.0) {
            return Err(CtError::Domain("four-velocity is degenerate".into()));
        }
        Ok(Self { u0, space })
    }

    /// Convenience wrapper over [`FourVelocity::from_space`].
    pub fn new(u1: f64, u2: f64, u3: f64) -> Result<Self> {
        Self::from_space(Vector3::new(u1, u2, u3))
    }

    /// Validates all four components against the shell condition.
    pub fn from_components(c: Vector4<f64>) -> Result<Self> {
        let space = Vector3::new(c[1], c[2], c[3]);
        if !c.iter().all(|x| x.is_finite()) || c[0] <= 0.0 {
            return Err(CtError::Domain(format!(
                "four-velocity must be finite with u0 > 0, got {:?}",
                c.as_slice()
            )));
        }
        let residual = 1.0 / (c[0] * c[0]) - space.norm_squared() - 1.0;
        if residual.abs() > SHELL_TOL * (1.0 + space.norm_squared()) {
            return Err(CtError::Domain(format!(
                "four-velocity off shell: 1/u0^2 - |u|^2 - 1 = {residual:e}"
            )));
        }
        // Re-derive u0 so the constraint holds to rounding.
        Self::from_space(space)
    }

    /// Builds the CT four-velocity from the EP one (`u_E^0 = 1/u^0`).
    pub fn from_ep(ep: Vector4<f64>) -> Result<Self> {
        if !(ep[0] > 0.0) {
            return Err(CtError::Domain(format!(
                "EP four-velocity must be future directed, got u_E^0 = {}",
                ep[0]
            )));
        }
        Self::from_components(Vector4::new(1.0 / ep[0], ep[1], ep[2], ep[3]))
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn space(&self) -> Vector3<f64> {
        self.space
    }

    pub fn contravariant(&self) -> Vector4<f64> {
        Vector4::new(self.u0, self.space[0], self.space[1], self.space[2])
    }

    /// `u_mu = g_{mu nu}(u) u^nu`, which is `(1/u^0, 0, 0, 0)` analytically.
    pub fn covariant(&self) -> Vector4<f64> {
        metric(self).covariant * self.contravariant()
    }

    /// EP components `(1/u^0, u)`.
    pub fn to_ep(&self) -> Vector4<f64> {
        Vector4::new(1.0 / self.u0, self.space[0], self.space[1], self.space[2])
    }

    pub fn is_preferred(&self) -> bool {
        self.space.norm() <= FRAME_TOL
    }

    /// Whether two four-velocities describe the same observer.
    pub fn same_frame(&self, other: &FourVelocity) -> bool {
        (self.contravariant() - other.contravariant()).amax() <= FRAME_TOL
    }

    /// `u^mu k_mu` for a covariant four-vector given by components.
    pub fn dot_covariant(&self, k: &Vector4<f64>) -> f64 {
        self.contravariant().dot(k)
    }
}

impl TryFrom<[f64; 4]> for FourVelocity {
    type Error = CtError;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        Self::from_components(Vector4::from(c))
    }
}

impl From<FourVelocity> for [f64; 4] {
    fn from(u: FourVelocity) -> Self {
        u.contravariant().into()
    }
}

/// Index placement of a four-vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Contravariant,
    Covariant,
}

impl Variance {
    fn name(self) -> &'static str {
        match self {
            Variance::Contravariant => "contravariant",
            Variance::Covariant => "covariant",
        }
    }
}

/// A four-vector tagged with its index placement and the frame it lives in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourVector {
    pub components: Vector4<f64>,
    pub variance: Variance,
    #[serde(rename = "frame_u")]
    pub frame: FourVelocity,
}

impl FourVector {
    pub fn contravariant(components: Vector4<f64>, frame: FourVelocity) -> Self {
        Self {
            components,
            variance: Variance::Contravariant,
            frame,
        }
    }

    pub fn covariant(components: Vector4<f64>, frame: FourVelocity) -> Self {
        Self {
            components,
            variance: Variance::Covariant,
            frame,
        }
    }

    fn expect(&self, variance: Variance) -> Result<()> {
        if self.variance == variance {
            Ok(())
        } else {
            Err(CtError::Variance {
                expected: variance.name(),
                found: self.variance.name(),
            })
        }
    }

    /// Lowers a contravariant vector with `g(u)`.
    pub fn lower(&self) -> Result<Self> {
        self.expect(Variance::Contravariant)?;
        Ok(Self::covariant(
            metric(&self.frame).covariant * self.components,
            self.frame,
        ))
    }

    /// Raises a covariant vector with `g^{-1}(u)`.
    pub fn raise(&self) -> Result<Self> {
        self.expect(Variance::Covariant)?;
        Ok(Self::contravariant(
            metric(&self.frame).contravariant * self.components,
            self.frame,
        ))
    }

    /// Scalar pairing `a_mu b^mu` (or `a^mu b_mu`); requires opposite
    /// variances in the same frame.
    pub fn pair(&self, other: &FourVector) -> Result<f64> {
        if self.variance == other.variance {
            return Err(CtError::Variance {
                expected: match self.variance {
                    Variance::Contravariant => "covariant",
                    Variance::Covariant => "contravariant",
                },
                found: other.variance.name(),
            });
        }
        if !self.frame.same_frame(&other.frame) {
            return Err(CtError::Frame("pairing vectors from different frames".into()));
        }
        Ok(self.components.dot(&other.components))
    }
}

/// `T(u)` together with its inverse. Maps EP contravariant components to CT
/// ones: `A = T(u) A_E`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intertwiner {
    pub forward: Matrix4<f64>,
    pub inverse: Matrix4<f64>,
}

pub fn intertwiner(u: &FourVelocity) -> Intertwiner {
    let mut forward = Matrix4::identity();
    let mut inverse = Matrix4::identity();
    for i in 0..3 {
        let c = u.u0 * u.space[i];
        forward[(0, i + 1)] = -c;
        inverse[(0, i + 1)] = c;
    }
    Intertwiner { forward, inverse }
}

/// Covariant and contravariant metric of the frame `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTensor {
    #[serde(with = "row_major")]
    pub covariant: Matrix4<f64>,
    #[serde(with = "row_major")]
    pub contravariant: Matrix4<f64>,
}

/// Closed-form metric of the frame `u`.
pub fn metric(u: &FourVelocity) -> MetricTensor {
    let u0 = u.u0;
    let s = u.space;
    let mut covariant = Matrix4::zeros();
    let mut contravariant = Matrix4::zeros();
    covariant[(0, 0)] = 1.0;
    contravariant[(0, 0)] = u0 * u0;
    for i in 0..3 {
        covariant[(0, i + 1)] = u0 * s[i];
        covariant[(i + 1, 0)] = u0 * s[i];
        contravariant[(0, i + 1)] = u0 * s[i];
        contravariant[(i + 1, 0)] = u0 * s[i];
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            covariant[(i + 1, j + 1)] = -delta + u0 * u0 * s[i] * s[j];
            contravariant[(i + 1, j + 1)] = -delta;
        }
    }
    MetricTensor {
        covariant,
        contravariant,
    }
}

/// `g(u) = (T(u) eta T(u)^T)^{-1}`, computed from the intertwiner.
pub fn metric_from_intertwiner(u: &FourVelocity) -> MetricTensor {
    let t = intertwiner(u);
    let contravariant = t.forward * minkowski() * t.forward.transpose();
    let covariant = t.inverse.transpose() * minkowski() * t.inverse;
    MetricTensor {
        covariant,
        contravariant,
    }
}

/// Four-velocity `W` of a primed frame relative to the frame `u`, the
/// parameter of a CT boost. Lies on the `g(u)` unit shell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeVelocity {
    pub w: Vector4<f64>,
}

impl RelativeVelocity {
    /// Accepts `W` if `g_{mu nu}(u) W^mu W^nu = 1` and `W^0 > 0`.
    pub fn new(w: Vector4<f64>, u: &FourVelocity) -> Result<Self> {
        if !w.iter().all(|c| c.is_finite()) || w[0] <= 0.0 {
            return Err(CtError::Domain(format!(
                "boost four-velocity must be finite with W0 > 0, got {:?}",
                w.as_slice()
            )));
        }
        let norm = w.dot(&(metric(u).covariant * w));
        if (norm - 1.0).abs() > SHELL_TOL * w.norm_squared().max(1.0) {
            return Err(CtError::Domain(format!(
                "boost four-velocity off the g(u) shell: g(W,W) - 1 = {:e}",
                norm - 1.0
            )));
        }
        Ok(Self { w })
    }

    pub fn identity() -> Self {
        Self {
            w: Vector4::new(1.0, 0.0, 0.0, 0.0),
        }
    }

    pub fn w0(&self) -> f64 {
        self.w[0]
    }

    pub fn space(&self) -> Vector3<f64> {
        Vector3::new(self.w[1], self.w[2], self.w[3])
    }
}

/// `W = W^0 (1, V)` from the coordinate velocity `V` of the primed frame.
pub fn boost_from_velocity(v: Vector3<f64>, u: &FourVelocity) -> Result<RelativeVelocity> {
    if !v.iter().all(|c| c.is_finite()) {
        return Err(CtError::Domain("non-finite boost velocity".into()));
    }
    let a = 1.0 + u.u0 * u.space.dot(&v);
    let radicand = a * a - v.norm_squared();
    if !(radicand > 0.0) {
        return Err(CtError::Domain(format!(
            "superluminal boost velocity: (1 + u0 u.V)^2 - V^2 = {radicand}"
        )));
    }
    let w0 = 1.0 / radicand.sqrt();
    let w = Vector4::new(w0, w0 * v[0], w0 * v[1], w0 * v[2]);
    Ok(RelativeVelocity { w })
}

/// Four-velocity of the frame `u'` relative to the frame `u`.
pub fn relative_four_velocity(u: &FourVelocity, uprime: &FourVelocity) -> RelativeVelocity {
    let w0 = u.u0 / uprime.u0;
    let denom = 1.0 + u.u0 * uprime.u0 * (1.0 + u.space.dot(&uprime.space));
    let ws = (u.u0 + uprime.u0) * (u.space - uprime.space) / denom;
    RelativeVelocity {
        w: Vector4::new(w0, ws[0], ws[1], ws[2]),
    }
}

/// A CT transform `x' = D x` between the frames `source_u` and `target_u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTransform {
    #[serde(with = "row_major")]
    pub matrix: Matrix4<f64>,
    pub source_u: FourVelocity,
    pub target_u: FourVelocity,
}

impl FrameTransform {
    pub fn identity(u: FourVelocity) -> Self {
        Self {
            matrix: Matrix4::identity(),
            source_u: u,
            target_u: u,
        }
    }

    /// `D(Lambda, u) = T(u') Lambda T^{-1}(u)` for a standard-synchronization
    /// Lorentz matrix, with `u'` obtained by transforming the EP
    /// four-velocity with `Lambda`.
    pub fn from_lorentz(lambda: &Matrix4<f64>, u: &FourVelocity) -> Result<Self> {
        let target_ep = lambda * u.to_ep();
        let target_u = FourVelocity::from_ep(target_ep)?;
        let matrix = intertwiner(&target_u).forward * lambda * intertwiner(u).inverse;
        Ok(Self {
            matrix,
            source_u: *u,
            target_u,
        })
    }

    /// Recovers the standard Lorentz matrix `T^{-1}(u') D T(u)`.
    pub fn to_lorentz(&self) -> Matrix4<f64> {
        intertwiner(&self.target_u).inverse * self.matrix * intertwiner(&self.source_u).forward
    }

    pub fn inverse(&self) -> Result<Self> {
        let matrix = self
            .matrix
            .try_inverse()
            .ok_or_else(|| CtError::Domain("singular frame transform".into()))?;
        Ok(Self {
            matrix,
            source_u: self.target_u,
            target_u: self.source_u,
        })
    }

    /// The transform "first `self`, then `next`".
    pub fn then(&self, next: &FrameTransform) -> Result<Self> {
        if !self.target_u.same_frame(&next.source_u) {
            return Err(CtError::Frame(
                "composed transforms do not share an intermediate frame".into(),
            ));
        }
        Ok(Self {
            matrix: next.matrix * self.matrix,
            source_u: self.source_u,
            target_u: next.target_u,
        })
    }

    /// `D^{T-1}`, the matrix acting on covariant components.
    pub fn covariant_matrix(&self) -> Matrix4<f64> {
        self.matrix
            .transpose()
            .try_inverse()
            .unwrap_or_else(|| Matrix4::from_element(f64::NAN))
    }

    /// Space block `Omega` of the matrix.
    pub fn space_block(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(1, 1).into_owned()
    }

    /// Frobenius norm of `D^{T-1} g(u) D^{-1} - g(u')`.
    pub fn metric_residual(&self) -> f64 {
        let inv = match self.matrix.try_inverse() {
            Some(m) => m,
            None => return f64::INFINITY,
        };
        let pulled = inv.transpose() * metric(&self.source_u).covariant * inv;
        (pulled - metric(&self.target_u).covariant).norm()
    }

    /// Applies the transform to a tagged vector living in the source frame.
    pub fn apply(&self, v: &FourVector) -> Result<FourVector> {
        if !v.frame.same_frame(&self.source_u) {
            return Err(CtError::Frame(format!(
                "vector lives in frame {:?}, transform starts at {:?}",
                v.frame.contravariant().as_slice(),
                self.source_u.contravariant().as_slice()
            )));
        }
        let components = match v.variance {
            Variance::Contravariant => self.matrix * v.components,
            Variance::Covariant => self.covariant_matrix() * v.components,
        };
        Ok(FourVector {
            components,
            variance: v.variance,
            frame: self.target_u,
        })
    }
}

/// Rotation `diag(1, R)`.
pub fn rotation_transform(r: &Matrix3<f64>, u: &FourVelocity) -> Result<FrameTransform> {
    lorentz::check_rotation(r)?;
    let mut matrix = Matrix4::identity();
    matrix.fixed_view_mut::<3, 3>(1, 1).copy_from(r);
    let target_u = FourVelocity {
        u0: u.u0,
        space: r * u.space,
    };
    Ok(FrameTransform {
        matrix,
        source_u: *u,
        target_u,
    })
}

/// Lower-triangular CT boost to the frame moving with four-velocity `W`
/// relative to `u`.
pub fn boost_transform(w: &RelativeVelocity, u: &FourVelocity) -> Result<FrameTransform> {
    let w = RelativeVelocity::new(w.w, u)?;
    let ws = w.space();
    let mut matrix = Matrix4::zeros();
    matrix[(0, 0)] = 1.0 / w.w0();
    let block = Matrix3::identity() + ws * ws.transpose() / (1.0 + (1.0 + ws.norm_squared()).sqrt())
        - u.u0 * ws * u.space.transpose();
    for i in 0..3 {
        matrix[(i + 1, 0)] = -ws[i];
    }
    matrix.fixed_view_mut::<3, 3>(1, 1).copy_from(&block);
    let target = matrix * u.contravariant();
    let target_u = FourVelocity::from_components(target)?;
    Ok(FrameTransform {
        matrix,
        source_u: *u,
        target_u,
    })
}

/// `D(L_u, u~)`: the boost taking the preferred frame to the frame `u`.
pub fn boost_to_frame(u: &FourVelocity) -> FrameTransform {
    let mut matrix = Matrix4::zeros();
    matrix[(0, 0)] = u.u0;
    let block = Matrix3::identity() + u.u0 / (1.0 + u.u0) * u.space * u.space.transpose();
    for i in 0..3 {
        matrix[(i + 1, 0)] = u.space[i];
    }
    matrix.fixed_view_mut::<3, 3>(1, 1).copy_from(&block);
    FrameTransform {
        matrix,
        source_u: FourVelocity::preferred(),
        target_u: *u,
    }
}

/// CT coordinates from EP coordinates: only the time coordinate changes,
/// `x^0 = x_E^0 - u^0 u.x`.
pub fn ct_from_ep(x_ep: &FourVector) -> Result<FourVector> {
    x_ep.expect(Variance::Contravariant)?;
    Ok(FourVector::contravariant(
        intertwiner(&x_ep.frame).forward * x_ep.components,
        x_ep.frame,
    ))
}

/// EP coordinates from CT coordinates, `x_E^0 = x^0 + u^0 u.x`.
pub fn ep_from_ct(x: &FourVector) -> Result<FourVector> {
    x.expect(Variance::Contravariant)?;
    Ok(FourVector::contravariant(
        intertwiner(&x.frame).inverse * x.components,
        x.frame,
    ))
}

/// Serializes a 4x4 matrix as 16 numbers in row-major order.
pub mod row_major {
    use nalgebra::Matrix4;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix4<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<f64> = (0..4)
            .flat_map(|i| (0..4).map(move |j| m[(i, j)]))
            .collect();
        s.collect_seq(rows)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix4<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.len() != 16 {
            return Err(D::Error::custom(format!(
                "expected 16 matrix entries, got {}",
                v.len()
            )));
        }
        Ok(Matrix4::from_row_slice(&v))
    }
}
