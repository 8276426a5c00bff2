//! Spin-`s` matrices, rotation representations and covariant spin tensors.
//!
//! Basis ordering follows the usual `J_3`-diagonal convention: row/column
//! `i` carries `lambda = s - i`, so index 0 is the highest weight.
//! The rest-frame tensor is `S~_ij = eps_ijk J_k`; the frame-dependent
//! tensor `S_ij(u)` adds a correction quadratic in the space part of `u`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CtError, Result};
use crate::kinematics::{lorentz, metric, FourVelocity};

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spin quantum number, stored as `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const ZERO: Spin = Spin { twice: 0 };
    pub const HALF: Spin = Spin { twice: 1 };
    pub const ONE: Spin = Spin { twice: 2 };

    pub fn from_twice(twice: u32) -> Self {
        Self { twice }
    }

    /// Accepts `s` if `2s` is a nonnegative integer.
    pub fn new(s: f64) -> Result<Self> {
        let t = 2.0 * s;
        if !t.is_finite() || t < 0.0 || (t - t.round()).abs() > 1e-12 || t > 1e6 {
            return Err(CtError::InvalidSpin(format!("{s} is not a multiple of 1/2")));
        }
        Ok(Self { twice: t.round() as u32 })
    }

    pub fn twice(&self) -> u32 {
        self.twice
    }

    pub fn value(&self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub fn dim(&self) -> usize {
        self.twice as usize + 1
    }

    pub fn is_half_integer(&self) -> bool {
        self.twice % 2 == 1
    }

    /// `s(s+1)`.
    pub fn casimir(&self) -> f64 {
        self.value() * (self.value() + 1.0)
    }

    /// `2 lambda` of the basis index `i`.
    pub fn twice_lambda(&self, index: usize) -> i32 {
        self.twice as i32 - 2 * index as i32
    }

    /// Basis index of `2 lambda`, if it belongs to the multiplet.
    pub fn index_of(&self, twice_lambda: i32) -> Option<usize> {
        let t = self.twice as i32;
        if twice_lambda.abs() > t || (t - twice_lambda) % 2 != 0 {
            return None;
        }
        Some(((t - twice_lambda) / 2) as usize)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_half_integer() {
            write!(f, "{}/2", self.twice)
        } else {
            write!(f, "{}", self.twice / 2)
        }
    }
}

impl FromStr for Spin {
    type Err = CtError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let value = match s.split_once('/') {
            Some((num, den)) => {
                let num: f64 = num.trim().parse().map_err(|_| bad_spin(s))?;
                let den: f64 = den.trim().parse().map_err(|_| bad_spin(s))?;
                if den == 0.0 {
                    return Err(bad_spin(s));
                }
                num / den
            }
            None => s.parse().map_err(|_| bad_spin(s))?,
        };
        Spin::new(value)
    }
}

fn bad_spin(s: &str) -> CtError {
    CtError::InvalidSpin(format!("cannot parse spin {s:?}"))
}

impl Serialize for Spin {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Spin::new(v).map_err(serde::de::Error::custom)
    }
}

/// The three Hermitian generators `J_1, J_2, J_3` of spin `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinRepresentation {
    pub spin: Spin,
    pub j: [CMatrix; 3],
}

/// Standard ladder construction of `J_k`.
pub fn angular_momentum_matrices(spin: Spin) -> SpinRepresentation {
    let n = spin.dim();
    let s = spin.value();
    let mut raise = CMatrix::zeros(n, n);
    let mut jz = CMatrix::zeros(n, n);
    for i in 0..n {
        let m = s - i as f64;
        jz[(i, i)] = Complex64::new(m, 0.0);
        if i > 0 {
            // <m+1| J+ |m>
            raise[(i - 1, i)] = Complex64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let lower = raise.adjoint();
    let jx = (&raise + &lower) * Complex64::new(0.5, 0.0);
    let jy = (&raise - &lower) * Complex64::new(0.0, -0.5);
    SpinRepresentation {
        spin,
        j: [jx, jy, jz],
    }
}

impl SpinRepresentation {
    pub fn new(spin: Spin) -> Self {
        angular_momentum_matrices(spin)
    }

    /// `n . J`
    pub fn along(&self, n: &Vector3<f64>) -> CMatrix {
        self.j
            .iter()
            .zip(n.iter())
            .fold(CMatrix::zeros(self.spin.dim(), self.spin.dim()), |acc, (j, c)| {
                acc + j * Complex64::new(*c, 0.0)
            })
    }

    /// Maximum of `||[J_i, J_j] - i eps_ijk J_k||` and `||J^2 - s(s+1)||`.
    pub fn algebra_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let comm = commutator(&self.j[a], &self.j[b]);
                let mut expected = CMatrix::zeros(self.spin.dim(), self.spin.dim());
                for c in 0..3 {
                    let e = levi_civita(a, b, c);
                    if e != 0.0 {
                        expected += &self.j[c] * (I * e);
                    }
                }
                worst = worst.max((comm - expected).norm());
            }
        }
        let casimir = self.j.iter().map(|j| j * j).fold(
            CMatrix::zeros(self.spin.dim(), self.spin.dim()),
            |acc, m| acc + m,
        );
        let target = CMatrix::identity(self.spin.dim(), self.spin.dim())
            * Complex64::new(self.spin.casimir(), 0.0);
        worst.max((casimir - target).norm())
    }
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Antisymmetric family `S_ij(u)` of Hermitian matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinTensor {
    pub u: FourVelocity,
    pub spin: Spin,
    components: Vec<CMatrix>,
}

impl SpinTensor {
    pub fn get(&self, i: usize, j: usize) -> &CMatrix {
        &self.components[3 * i + j]
    }

    /// Largest deviation from `S_ij = -S_ji = S_ij^dagger`.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let s = self.get(i, j);
                worst = worst.max((s - s.adjoint()).norm());
                worst = worst.max((s + self.get(j, i)).norm());
            }
        }
        worst
    }

    /// Largest deviation of `[S_ij, S_kl]` from
    /// `i (g_il S_jk + g_jk S_il - g_ik S_jl - g_jl S_ik)` over all index
    /// quadruples, with `g` the spatial block of the covariant metric of `u`.
    pub fn algebra_residual(&self) -> f64 {
        let g4 = metric(&self.u).covariant;
        let g = |a: usize, b: usize| Complex64::new(g4[(a + 1, b + 1)], 0.0);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let lhs = commutator(self.get(i, j), self.get(k, l));
                        let rhs = (self.get(j, k) * g(i, l) + self.get(i, l) * g(j, k)
                            - self.get(j, l) * g(i, k)
                            - self.get(i, k) * g(j, l))
                            * I;
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        worst
    }

    /// Nested `[re, im]` arrays, one matrix per `(i, j)` in row-major order.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = (0..3)
            .map(|i| {
                serde_json::Value::Array(
                    (0..3).map(|j| matrix_to_json(self.get(i, j))).collect(),
                )
            })
            .collect();
        serde_json::json!({
            "u": self.u,
            "s": self.spin,
            "components": rows,
        })
    }
}

/// `S~_ij = eps_ijk J_k`.
pub fn rest_spin_tensor(spin: Spin) -> SpinTensor {
    let rep = angular_momentum_matrices(spin);
    let n = spin.dim();
    let mut components = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let mut m = CMatrix::zeros(n, n);
            for k in 0..3 {
                let e = levi_civita(i, j, k);
                if e != 0.0 {
                    m += &rep.j[k] * Complex64::new(e, 0.0);
                }
            }
            components.push(m);
        }
    }
    SpinTensor {
        u: FourVelocity::preferred(),
        spin,
        components,
    }
}

/// `S_ij(u) = S~_ij + (u^0)^2/(1+u^0) (u^j u^k S~_ki - u^i u^k S~_kj)`.
pub fn spin_tensor(u: &FourVelocity, spin: Spin) -> SpinTensor {
    let rest = rest_spin_tensor(spin);
    let n = spin.dim();
    let v = u.space();
    let c = u.u0() * u.u0() / (1.0 + u.u0());
    // w_l = u^k S~_kl
    let w: Vec<CMatrix> = (0..3)
        .map(|l| {
            (0..3).fold(CMatrix::zeros(n, n), |acc, k| {
                acc + rest.get(k, l) * Complex64::new(v[k], 0.0)
            })
        })
        .collect();
    let mut components = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let corr = &w[i] * Complex64::new(c * v[j], 0.0) - &w[j] * Complex64::new(c * v[i], 0.0);
            components.push(rest.get(i, j) + corr);
        }
    }
    SpinTensor {
        u: *u,
        spin,
        components,
    }
}

/// `gamma_ij(u) = -(delta_ij + u^i u^j)`, the inverse of the spatial block
/// of `g_{mu nu}(u)`.
pub fn spatial_inverse_metric(u: &FourVelocity) -> Matrix3<f64> {
    let v = u.space();
    -(Matrix3::identity() + v * v.transpose())
}

/// `gamma_ik gamma_jl M_ij M_kl` for a numeric spatial tensor.
pub fn bilinear_form(u: &FourVelocity, m: &Matrix3<f64>) -> f64 {
    let gamma = spatial_inverse_metric(u);
    (gamma * m * gamma).component_mul(m).sum()
}

/// `Omega_ki M_kl Omega_lj`, the spatial tensor law with `Omega` the space
/// block of `D(Lambda, u)`.
pub fn transform_spatial_tensor(omega: &Matrix3<f64>, m: &Matrix3<f64>) -> Matrix3<f64> {
    omega.transpose() * m * omega
}

/// `(1/2) gamma_ik gamma_jl S_ij S_kl`.
pub fn spin_square(u: &FourVelocity, spin: Spin) -> CMatrix {
    let t = spin_tensor(u, spin);
    let gamma = spatial_inverse_metric(u);
    let n = spin.dim();
    let mut acc = CMatrix::zeros(n, n);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let coef = 0.5 * gamma[(i, k)] * gamma[(j, l)];
                    if coef != 0.0 {
                        acc += t.get(i, j) * t.get(k, l) * Complex64::new(coef, 0.0);
                    }
                }
            }
        }
    }
    acc
}

/// Second form: `(1/2) S_ij S_ij + u^i u^j S_ik S_jk`.
pub fn spin_square_expanded(u: &FourVelocity, spin: Spin) -> CMatrix {
    let t = spin_tensor(u, spin);
    let v = u.space();
    let n = spin.dim();
    let mut acc = CMatrix::zeros(n, n);
    for i in 0..3 {
        for j in 0..3 {
            acc += t.get(i, j) * t.get(i, j) * Complex64::new(0.5, 0.0);
            for k in 0..3 {
                acc += t.get(i, k) * t.get(j, k) * Complex64::new(v[i] * v[j], 0.0);
            }
        }
    }
    acc
}

/// `D^s(R) = exp(-i theta n.J)` with `(n, theta)` the axis-angle of `R`,
/// `theta` in `[0, pi]`.
///
/// The exponential is assembled from spectral projectors of `n.J`, whose
/// eigenvalues are exactly `-s, ..., s`. For half-integer `s` this picks
/// the SU(2) lift continuously connected to the identity along the
/// axis-angle path, so products agree with `D^s(R1 R2)` only up to sign.
pub fn rotation_rep(r: &Matrix3<f64>, spin: Spin) -> Result<CMatrix> {
    let (axis, angle) = lorentz::rotation_axis_angle(r)?;
    Ok(exp_rotation(&angular_momentum_matrices(spin), &axis, angle))
}

/// `exp(-i angle n.J)` for a unit axis `n`.
pub fn exp_rotation(rep: &SpinRepresentation, axis: &Vector3<f64>, angle: f64) -> CMatrix {
    let n = rep.spin.dim();
    let a = rep.along(axis);
    let s = rep.spin.value();
    let eig: Vec<f64> = (0..n).map(|i| s - i as f64).collect();
    let id = CMatrix::identity(n, n);
    let mut out = CMatrix::zeros(n, n);
    for (p, &m) in eig.iter().enumerate() {
        let mut proj = id.clone();
        for (q, &mq) in eig.iter().enumerate() {
            if p != q {
                proj = proj * (&a - &id * Complex64::new(mq, 0.0)) * Complex64::new(1.0 / (m - mq), 0.0);
            }
        }
        out += proj * Complex64::from_polar(1.0, -angle * m);
    }
    out
}

/// `||D D^dagger - I||`.
pub fn unitarity_residual(d: &CMatrix) -> f64 {
    (d * d.adjoint() - CMatrix::identity(d.nrows(), d.ncols())).norm()
}

/// Nested `[re, im]` pairs, row-major.
pub fn matrix_to_json(m: &CMatrix) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|i| {
                serde_json::Value::Array(
                    (0..m.ncols())
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn all_spins() -> impl Iterator<Item = Spin> {
        (0..=5).map(Spin::from_twice)
    }

    #[test]
    fn parses_spins() {
        assert_eq!("1/2".parse::<Spin>().unwrap(), Spin::HALF);
        assert_eq!("0.5".parse::<Spin>().unwrap(), Spin::HALF);
        assert_eq!("2".parse::<Spin>().unwrap().twice(), 4);
        assert!("1/3".parse::<Spin>().is_err());
        assert!("-1".parse::<Spin>().is_err());
        assert!(Spin::new(0.25).is_err());
        assert_eq!(Spin::from_twice(3).to_string(), "3/2");
        assert_eq!(Spin::HALF.index_of(-1), Some(1));
        assert_eq!(Spin::HALF.index_of(0), None);
    }

    #[test]
    fn ladder_examples() {
        let z = angular_momentum_matrices(Spin::ZERO);
        assert!(z.j.iter().all(|m| m.nrows() == 1 && m[(0, 0)] == c(0.0, 0.0)));

        let h = angular_momentum_matrices(Spin::HALF);
        let sx = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0.5, 0.), c(0.5, 0.), c(0., 0.)]);
        let sy = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -0.5), c(0., 0.5), c(0., 0.)]);
        let sz = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)]);
        assert!((&h.j[0] - sx).norm() < 1e-15);
        assert!((&h.j[1] - sy).norm() < 1e-15);
        assert!((&h.j[2] - sz).norm() < 1e-15);

        let one = angular_momentum_matrices(Spin::ONE);
        let diag: Vec<f64> = (0..3).map(|i| one.j[2][(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
        for s in all_spins() {
            assert!(angular_momentum_matrices(s).algebra_residual() < 1e-13, "spin {s}");
        }
    }

    /// Brute-force check of the rest-frame commutators with Euclidean deltas.
    #[test]
    fn rest_tensor_commutators() {
        let h = rest_spin_tensor(Spin::HALF);
        let sz = &angular_momentum_matrices(Spin::HALF).j[2];
        assert!((h.get(0, 1) - sz).norm() < 1e-15);
        for s in all_spins() {
            let t = rest_spin_tensor(s);
            let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            let lhs = commutator(t.get(i, j), t.get(k, l));
                            let rhs = (t.get(j, k) * c(d(i, l), 0.0) + t.get(i, l) * c(d(j, k), 0.0)
                                - t.get(j, l) * c(d(i, k), 0.0)
                                - t.get(i, k) * c(d(j, l), 0.0))
                                * c(0.0, -1.0);
                            assert!((lhs - rhs).norm() < 1e-13);
                        }
                    }
                }
            }
            assert!(t.symmetry_residual() < 1e-15);
        }
        let zero = rest_spin_tensor(Spin::ZERO);
        assert!((0..9).all(|n| zero.get(n / 3, n % 3).norm() == 0.0));
    }

    #[test]
    fn spin_tensor_examples() {
        let u = FourVelocity::new(0.75, 0.0, 0.0).unwrap();
        let rest = rest_spin_tensor(Spin::HALF);
        let t = spin_tensor(&u, Spin::HALF);
        assert!((t.get(0, 1) - rest.get(0, 1) * c(0.8, 0.0)).norm() < 1e-15);
        assert!((t.get(1, 2) - rest.get(1, 2)).norm() < 1e-15);
        let p = spin_tensor(&FourVelocity::preferred(), Spin::ONE);
        let r1 = rest_spin_tensor(Spin::ONE);
        assert!((0..9).all(|n| (p.get(n / 3, n % 3) - r1.get(n / 3, n % 3)).norm() == 0.0));
        let u = FourVelocity::new(0.4, -1.1, 0.6).unwrap();
        for s in all_spins() {
            let t = spin_tensor(&u, s);
            assert!(t.symmetry_residual() < 1e-14);
            assert!(t.algebra_residual() < 1e-11, "spin {s}: {}", t.algebra_residual());
        }
    }

    #[test]
    fn spatial_inverse_metric_inverts_space_block() {
        let u = FourVelocity::new(0.4, -1.1, 0.6).unwrap();
        let g = metric(&u).covariant.fixed_view::<3, 3>(1, 1).into_owned();
        assert!((spatial_inverse_metric(&u) * g - Matrix3::identity()).norm() < 1e-13);
    }

    #[test]
    fn spatial_metric_congruence_and_bilinear_invariance() {
        use crate::kinematics::FrameTransform;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let u = lorentz::random_four_velocity(&mut rng, 0.8);
            let lambda = lorentz::random_lorentz(&mut rng, 0.9);
            let d = FrameTransform::from_lorentz(&lambda, &u).unwrap();
            let omega = d.space_block();
            let omega_inv = omega.try_inverse().unwrap();
            let g = |v: &FourVelocity| metric(v).covariant.fixed_view::<3, 3>(1, 1).into_owned();
            let lhs = g(&d.target_u);
            let rhs = omega_inv.transpose() * g(&u) * omega_inv;
            assert!((lhs - rhs).norm() < 1e-11);

            let m_prime = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let m = transform_spatial_tensor(&omega, &m_prime);
            let a = bilinear_form(&u, &m);
            let b = bilinear_form(&d.target_u, &m_prime);
            assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn spin_square_examples() {
        let sq = spin_square(&FourVelocity::preferred(), Spin::HALF);
        assert!((sq - CMatrix::identity(2, 2) * c(0.75, 0.0)).norm() < 1e-15);
        let u = FourVelocity::new(0.75, 0.0, 0.0).unwrap();
        let sq = spin_square(&u, Spin::ONE);
        assert!((sq - CMatrix::identity(3, 3) * c(2.0, 0.0)).norm() < 1e-12);
        assert_eq!(spin_square(&u, Spin::ZERO).norm(), 0.0);
        let u = FourVelocity::new(-0.3, 0.8, 1.4).unwrap();
        for s in all_spins() {
            let a = spin_square(&u, s);
            let b = spin_square_expanded(&u, s);
            assert!((&a - &b).norm() < 1e-11);
            let target = CMatrix::identity(s.dim(), s.dim()) * c(s.casimir(), 0.0);
            assert!((a - target).norm() < 1e-11);
        }
    }

    #[test]
    fn rotation_rep_examples() {
        let id = rotation_rep(&Matrix3::identity(), Spin::from_twice(3)).unwrap();
        assert!((id - CMatrix::identity(4, 4)).norm() < 1e-15);
        let d = rotation_rep(&lorentz::rot_z(FRAC_PI_2), Spin::HALF).unwrap();
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4),
                c(0.0, 0.0),
                c(0.0, 0.0),
                Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4),
            ],
        );
        assert!((d - expected).norm() < 1e-15);
        let bad = Matrix3::new(2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(rotation_rep(&bad, Spin::ONE).is_err());
    }

    /// `D J_k D^dagger = R_lk J_l`: conjugation acts as the vector
    /// representation on the generator index.
    #[test]
    fn adjoint_action_matches_vector_rep() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for s in [Spin::HALF, Spin::ONE, Spin::from_twice(3)] {
            let rep = angular_momentum_matrices(s);
            for _ in 0..20 {
                let r = lorentz::random_rotation(&mut rng);
                let d = rotation_rep(&r, s).unwrap();
                assert!(unitarity_residual(&d) < 1e-12);
                for k in 0..3 {
                    let lhs = &d * &rep.j[k] * d.adjoint();
                    let rhs = (0..3).fold(CMatrix::zeros(s.dim(), s.dim()), |acc, l| {
                        acc + &rep.j[l] * c(r[(l, k)], 0.0)
                    });
                    assert!((lhs - rhs).norm() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn composition_is_projective_for_half_integer() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for s in all_spins() {
            for _ in 0..20 {
                let r1 = lorentz::random_rotation(&mut rng);
                let r2 = lorentz::random_rotation(&mut rng);
                let lhs = rotation_rep(&r1, s).unwrap() * rotation_rep(&r2, s).unwrap();
                let rhs = rotation_rep(&(r1 * r2), s).unwrap();
                let plus = (&lhs - &rhs).norm();
                let minus = (&lhs + &rhs).norm();
                if s.is_half_integer() {
                    assert!(plus.min(minus) < 1e-11);
                } else {
                    assert!(plus < 1e-11);
                }
            }
        }
    }

    #[test]
    fn json_is_re_im_pairs() {
        let v = matrix_to_json(&angular_momentum_matrices(Spin::HALF).j[1]);
        assert_eq!(v[0][1], serde_json::json!([0.0, -0.5]));
        let t = spin_tensor(&FourVelocity::preferred(), Spin::HALF).to_json();
        assert_eq!(t["s"], 0.5);
        assert_eq!(t["components"][0][1][0][0], serde_json::json!([0.5, 0.0]));
    }
}
