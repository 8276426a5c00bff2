//! Randomized verification suites.
//!
//! Every suite draws its cases from a ChaCha8 stream derived from the seed
//! and the suite name, so a suite produces the same entries whether it runs
//! alone or as part of `all`. Each entry records the worst residual over
//! its cases.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{
    bracket_observable, canonical_momenta, lagrangian, poisson_bracket, Observable, PhaseSpacePoint, Quadratic,
};
use crate::error::{CtError, Result};
use crate::kinematics::{closed_path_average, light_speed, lorentz, metric, FourVelocity, FrameTransform};
use crate::representation::{
    covariant_momentum, dispersion_energy, lorentz_action, translate_state, uk, wigner_rotation, Normalization,
    StateVector, Term,
};
use crate::spin::{angular_momentum_matrices, rotation_rep, spin_square, spin_tensor, CMatrix, Spin};
use crate::wavepacket::{
    commutator_residual, eigen_residual, gaussian, localized_wavefunction, mass_squared_apply, newton_wigner_apply,
    position_apply, position_apply_invariant, rescale, scalar_product, MomentumGrid, OperatorPair, WavePacket,
};

pub const SCHEMA: u32 = 1;
pub const DEFAULT_CASES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Group,
    Metric,
    Classical,
    Representation,
    Spin,
    Position,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Group,
        Suite::Metric,
        Suite::Classical,
        Suite::Representation,
        Suite::Spin,
        Suite::Position,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Group => "group",
            Suite::Metric => "metric",
            Suite::Classical => "classical",
            Suite::Representation => "representation",
            Suite::Spin => "spin",
            Suite::Position => "position",
            Suite::All => "all",
        }
    }

    fn stream(&self) -> u64 {
        Suite::EACH.iter().position(|s| s == self).unwrap_or(0) as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = CtError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| CtError::Domain(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub test: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Entry {
    pub fn new(test: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            test: test.into(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual < tolerance,
        }
    }

    fn from_result(test: &str, residual: Result<f64>, tolerance: f64) -> Self {
        Self::new(test, residual.unwrap_or(f64::INFINITY), tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub suite: Suite,
    pub seed: u64,
    pub n_cases: usize,
    pub entries: Vec<Entry>,
    pub pass: bool,
    /// Wall-clock seconds; absent unless timing was requested, which keeps
    /// reports byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

pub fn run_suite(suite: Suite, seed: u64, n_cases: usize) -> VerificationReport {
    let mut entries = Vec::new();
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    for s in suites {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s.stream());
        let n = n_cases.max(1);
        entries.extend(match s {
            Suite::Group => group_suite(&mut rng, n),
            Suite::Metric => metric_suite(&mut rng, n),
            Suite::Classical => classical_suite(&mut rng, n),
            Suite::Representation => representation_suite(&mut rng, n),
            Suite::Spin => spin_suite(&mut rng, n),
            Suite::Position => position_suite(&mut rng, n),
            Suite::All => unreachable!(),
        });
    }
    entries.sort_by(|a, b| a.test.cmp(&b.test));
    let pass = entries.iter().all(|e| e.pass);
    VerificationReport {
        schema: SCHEMA,
        suite,
        seed,
        n_cases,
        entries,
        pass,
        duration_s: None,
    }
}

/// Worst value of a fallible per-case residual.
fn worst<R: Rng>(rng: &mut R, n: usize, mut case: impl FnMut(&mut R) -> Result<f64>) -> Result<f64> {
    let mut acc: f64 = 0.0;
    for _ in 0..n {
        let r = case(rng)?;
        if !r.is_finite() {
            return Ok(f64::INFINITY);
        }
        acc = acc.max(r);
    }
    Ok(acc)
}

fn rand_vec<R: Rng>(rng: &mut R, r: f64) -> Vector3<f64> {
    Vector3::new(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn group_suite(rng: &mut ChaCha8Rng, n: usize) -> Vec<Entry> {
    let composition = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.95);
        let l1 = lorentz::random_lorentz(rng, 0.95);
        let l2 = lorentz::random_lorentz(rng, 0.95);
        let d1 = FrameTransform::from_lorentz(&l1, &u)?;
        let d2 = FrameTransform::from_lorentz(&l2, &d1.target_u)?;
        let d21 = FrameTransform::from_lorentz(&(l2 * l1), &u)?;
        let frame = (d2.target_u.contravariant() - d21.target_u.contravariant()).norm();
        Ok((d2.matrix * d1.matrix - d21.matrix).norm().max(frame))
    });
    let inverse = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.95);
        let l = lorentz::random_lorentz(rng, 0.95);
        let d = FrameTransform::from_lorentz(&l, &u)?;
        let back = FrameTransform::from_lorentz(&l.try_inverse().unwrap_or_else(Matrix4::zeros), &d.target_u)?;
        Ok((back.matrix * d.matrix - Matrix4::identity()).norm())
    });
    let four_velocity = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.95);
        let l = lorentz::random_lorentz(rng, 0.95);
        let d = FrameTransform::from_lorentz(&l, &u)?;
        Ok((d.matrix * u.contravariant() - d.target_u.contravariant()).norm())
    });
    vec![
        Entry::from_result("group.composition", composition, 1e-10),
        Entry::from_result("group.inverse", inverse, 1e-10),
        Entry::from_result("group.four_velocity_image", four_velocity, 1e-10),
    ]
}

fn metric_suite(rng: &mut ChaCha8Rng, n: usize) -> Vec<Entry> {
    let invariance = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let l = lorentz::random_lorentz(rng, 0.8);
        Ok(FrameTransform::from_lorentz(&l, &u)?.metric_residual())
    });
    let identities = worst(rng, 5 * n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.95);
        let cov = metric(&u).covariant * u.contravariant();
        let norm = u.contravariant().dot(&cov) - 1.0;
        let u0 = u.u0();
        let eq19 = 1.0 / (u0 * u0) - u.space().norm_squared() - 1.0;
        Ok(cov.fixed_rows::<3>(1).amax().max(norm.abs()).max(eq19.abs()))
    });
    let round_trip = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.95);
        let dir = lorentz::random_direction(rng);
        let pair = (light_speed(&u, &dir)?.round_trip_average - 1.0).abs();
        let tri = [rand_vec(rng, 1.0), rand_vec(rng, 1.0), rand_vec(rng, 1.0)];
        let (_, avg) = closed_path_average(&u, &tri)?;
        Ok(pair.max((avg - 1.0).abs()))
    });
    let worked = (|| -> Result<f64> {
        let u = FourVelocity::new(0.75, 0.0, 0.0)?;
        let f = light_speed(&u, &Vector3::x())?;
        let b = light_speed(&u, &-Vector3::x())?;
        Ok((f.one_way - 2.5).abs().max((b.one_way - 0.625).abs()))
    })();
    vec![
        Entry::from_result("metric.invariance", invariance, 1e-12),
        Entry::from_result("metric.four_velocity_identities", identities, 1e-13),
        Entry::from_result("metric.light_round_trip", round_trip, 1e-13),
        Entry::from_result("metric.light_worked_case", worked, 1e-15),
    ]
}

fn random_point<R: Rng>(rng: &mut R) -> Result<(PhaseSpacePoint, f64)> {
    let u = lorentz::random_four_velocity(rng, 0.8);
    let m = rng.gen_range(0.5..3.0);
    let x = Vector4::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    Ok((PhaseSpacePoint::on_shell(x, rand_vec(rng, 2.0), u, m)?, m))
}

/// Worst deviation from the bracket table `{x^mu, x^nu} = {k_mu, k_nu} = 0`,
/// `{x^0, k_mu} = 0`, `{x^i, k_j} = -delta`, `{x^i, k_0} = k^i/k^0`.
fn bracket_table_residual(p: &PhaseSpacePoint, analytic: bool) -> Result<f64> {
    let obs = |o: Observable| if analytic { o } else { o.without_gradient() };
    let x = |mu| obs(Observable::position(mu));
    let k = |mu| obs(Observable::momentum(mu));
    let ku = p.k_upper();
    let mut acc: f64 = 0.0;
    for mu in 0..4 {
        for nu in 0..4 {
            acc = acc.max(poisson_bracket(&x(mu), &x(nu), p)?.abs());
            acc = acc.max(poisson_bracket(&k(mu), &k(nu), p)?.abs());
        }
        acc = acc.max(poisson_bracket(&x(0), &k(mu), p)?.abs());
    }
    for i in 1..4 {
        for j in 1..4 {
            let d = if i == j { 1.0 } else { 0.0 };
            acc = acc.max((poisson_bracket(&x(i), &k(j), p)? + d).abs());
        }
        acc = acc.max((poisson_bracket(&x(i), &k(0), p)? - ku[i] / ku[0]).abs());
    }
    Ok(acc)
}

fn timelike_velocity<R: Rng>(rng: &mut R, u: &FourVelocity) -> Vector3<f64> {
    loop {
        let v = rand_vec(rng, 1.0);
        let a = 1.0 + u.u0() * u.space().dot(&v);
        if a * a - v.norm_squared() > 0.05 {
            return v;
        }
    }
}

fn classical_suite(rng: &mut ChaCha8Rng, n: usize) -> Vec<Entry> {
    let cases = n.min(100);
    let analytic = worst(rng, cases, |rng| bracket_table_residual(&random_point(rng)?.0, true));
    let fd = worst(rng, cases, |rng| bracket_table_residual(&random_point(rng)?.0, false));
    let jacobi = worst(rng, cases.min(30), |rng| {
        let (p, _) = random_point(rng)?;
        let a = Observable::quadratic(Quadratic::random(rng, 1.0));
        let b = Observable::quadratic(Quadratic::random(rng, 1.0));
        let c = Observable::quadratic(Quadratic::random(rng, 1.0));
        let u = p.u;
        Ok((poisson_bracket(&a, &bracket_observable(&b, &c, u), &p)?
            + poisson_bracket(&b, &bracket_observable(&c, &a, u), &p)?
            + poisson_bracket(&c, &bracket_observable(&a, &b, u), &p)?)
        .abs())
    });
    // H from the Legendre transform pi.v - L against the dispersion root.
    let legendre = worst(rng, 5 * n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let m = rng.gen_range(0.5..3.0);
        let v = timelike_velocity(rng, &u);
        let pi = canonical_momenta(&u, &v, m)?;
        let h = pi.dot(&v) - lagrangian(&u, &v, m)?;
        Ok((h - dispersion_energy(&-pi, &u, m).0).abs())
    });
    let mut shell_worst: f64 = 0.0;
    let k0_identity = worst(rng, 5 * n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let m = rng.gen_range(0.5..3.0);
        let kb = rand_vec(rng, 3.0);
        let k = covariant_momentum(&kb, &u, m);
        let g = metric(&u).contravariant;
        shell_worst = shell_worst.max((k.dot(&(g * k)) - m * m).abs());
        let up0 = (g * k)[0];
        let uk_direct = u.contravariant().dot(&k);
        Ok((up0 - u.u0() * uk_direct).abs().max((uk_direct - uk(&kb, &u, m)).abs()))
    });
    vec![
        Entry::from_result("classical.bracket_table_analytic", analytic, 1e-12),
        Entry::from_result("classical.bracket_table_fd", fd, 1e-9),
        Entry::from_result("classical.jacobi", jacobi, 1e-8),
        Entry::from_result("classical.hamiltonian_dispersion", legendre, 1e-12),
        Entry::new("classical.mass_shell", shell_worst, 1e-11),
        Entry::from_result("classical.k0_identity", k0_identity, 1e-13),
    ]
}

fn random_state<R: Rng>(rng: &mut R, u: FourVelocity, spin: Spin, n: usize) -> Result<StateVector> {
    let norm = if rng.gen_bool(0.5) { Normalization::Standard } else { Normalization::Invariant };
    let mut psi = StateVector::empty(u, rng.gen_range(0.5..3.0), spin, norm)?;
    for _ in 0..n {
        let idx = rng.gen_range(0..spin.dim());
        psi.push(Term {
            amplitude: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            kbreve: rand_vec(rng, 2.0),
            twice_lambda: spin.twice_lambda(idx),
            delta_volume: rng.gen_range(0.5..2.0),
        })?;
    }
    let s = 1.0 / psi.norm_squared().sqrt();
    psi.terms.iter_mut().for_each(|t| t.amplitude *= s);
    Ok(psi)
}

/// Largest amplitude difference between two states, and between `a` and
/// `-b`.
fn state_distance(a: &StateVector, b: &StateVector) -> (f64, f64) {
    let mut plus: f64 = 0.0;
    let mut minus: f64 = 0.0;
    let mut check = |x: &StateVector, y: &StateVector| {
        for t in &y.terms {
            let other = x.amplitude_at(&t.kbreve, t.twice_lambda, 1e-9).map_or(Complex64::new(0.0, 0.0), |p| p.0);
            plus = plus.max((other - t.amplitude).norm());
            minus = minus.max((other + t.amplitude).norm());
        }
    };
    check(a, b);
    check(b, a);
    (plus, minus)
}

fn random_spin<R: Rng>(rng: &mut R) -> Spin {
    Spin::from_twice(rng.gen_range(0..=3))
}

fn representation_suite(rng: &mut ChaCha8Rng, n: usize) -> Vec<Entry> {
    let orthogonal = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let l = lorentz::random_lorentz(rng, 0.9);
        let r = wigner_rotation(&l, &u)?;
        Ok((r.transpose() * r - Matrix3::identity()).norm().max((r.determinant() - 1.0).abs()))
    });
    let rest_boost = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let r = wigner_rotation(&lorentz::frame_boost(&u), &FourVelocity::preferred())?;
        Ok((r - Matrix3::identity()).norm())
    });
    let translation = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let spin = random_spin(rng);
        let psi = random_state(rng, u, spin, 4)?;
        let moved = translate_state(&psi, &rand_vec(rng, 2.0), rng.gen_range(-2.0..2.0));
        Ok((moved.norm_squared() - 1.0).abs())
    });
    let lorentz_norm = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let spin = random_spin(rng);
        let psi = random_state(rng, u, spin, 3)?;
        let l = lorentz::random_lorentz(rng, 0.9);
        let out = lorentz_action(&l, &psi, &angular_momentum_matrices(spin))?;
        Ok((out.norm_squared() - 1.0).abs())
    });
    let composition = worst(rng, n, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let spin = Spin::from_twice(rng.gen_range(1..=3));
        let rep = angular_momentum_matrices(spin);
        let psi = random_state(rng, u, spin, 2)?;
        let l1 = lorentz::random_lorentz(rng, 0.9);
        let l2 = lorentz::random_lorentz(rng, 0.9);
        let a = lorentz_action(&l2, &lorentz_action(&l1, &psi, &rep)?, &rep)?;
        let b = lorentz_action(&(l2 * l1), &psi, &rep)?;
        let (plus, minus) = state_distance(&a, &b);
        Ok(if spin.is_half_integer() { plus.min(minus) } else { plus })
    });
    vec![
        Entry::from_result("representation.wigner_orthogonal", orthogonal, 1e-11),
        Entry::from_result("representation.wigner_rest_boost", rest_boost, 1e-12),
        Entry::from_result("representation.translation_unitarity", translation, 1e-10),
        Entry::from_result("representation.lorentz_unitarity", lorentz_norm, 1e-10),
        Entry::from_result("representation.composition", composition, 1e-9),
    ]
}

fn cm(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Largest deviation from
/// `D(R) S_ij(u) D(R)^dagger = Omega_ki S_kl(u') Omega_lj`.
pub fn spin_consistency_residual(lambda: &Matrix4<f64>, u: &FourVelocity, spin: Spin) -> Result<f64> {
    let d = FrameTransform::from_lorentz(lambda, u)?;
    let r = wigner_rotation(lambda, u)?;
    let dr = rotation_rep(&r, spin)?;
    let omega = d.space_block();
    let before = spin_tensor(u, spin);
    let after = spin_tensor(&d.target_u, spin);
    let n = spin.dim();
    let mut acc: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let lhs = &dr * before.get(i, j) * dr.adjoint();
            let mut rhs = CMatrix::zeros(n, n);
            for k in 0..3 {
                for l in 0..3 {
                    rhs += after.get(k, l) * cm(omega[(k, i)] * omega[(l, j)]);
                }
            }
            acc = acc.max((lhs - rhs).norm());
        }
    }
    Ok(acc)
}

fn spin_suite(rng: &mut ChaCha8Rng, n: usize) -> Vec<Entry> {
    let cases = n.min(50);
    let spins: Vec<Spin> = (1..=5).map(Spin::from_twice).collect();
    let mut algebra: f64 = 0.0;
    let mut square: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for _ in 0..cases {
        let u = lorentz::random_four_velocity(rng, 0.8);
        for &s in &spins {
            let t = spin_tensor(&u, s);
            algebra = algebra.max(t.algebra_residual());
            symmetry = symmetry.max(t.symmetry_residual());
            let casimir = CMatrix::identity(s.dim(), s.dim()) * cm(s.casimir());
            square = square.max((spin_square(&u, s) - casimir).norm());
        }
    }
    let rest = spins
        .iter()
        .map(|&s| spin_tensor(&FourVelocity::preferred(), s).algebra_residual())
        .fold(0.0, f64::max);
    let consistency = worst(rng, cases, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let l = lorentz::random_lorentz(rng, 0.9);
        let s = Spin::from_twice(rng.gen_range(1..=5));
        spin_consistency_residual(&l, &u, s)
    });
    vec![
        Entry::new("spin.algebra_frame", algebra, 1e-11),
        Entry::new("spin.algebra_rest", rest, 1e-11),
        Entry::from_result("spin.consistency", consistency, 1e-10),
        Entry::new("spin.hermitian_antisymmetric", symmetry, 1e-12),
        Entry::new("spin.square", square, 1e-11),
    ]
}

/// Default operator-test grid: 257 points over `[-8, 8]` along `k_1`.
pub fn default_line() -> MomentumGrid {
    MomentumGrid::line(-8.0, 8.0, 257).expect("valid grid")
}

/// Normalized Gaussian with spread `sigma`, centre within 0.5 of the
/// origin and a plane phase `e^{i k.a}` with `|a_i| < max_offset`.
pub fn random_gaussian<R: Rng>(
    rng: &mut R,
    grid: &MomentumGrid,
    u: &FourVelocity,
    m: f64,
    sigma: f64,
    max_offset: f64,
) -> Result<WavePacket> {
    let mut center = Vector3::zeros();
    let mut offset = Vector3::zeros();
    for a in 0..3 {
        if grid.axes[a].n > 1 {
            center[a] = rng.gen_range(-0.5..0.5);
            offset[a] = rng.gen_range(-max_offset..max_offset);
        }
    }
    Ok(gaussian(grid, u, m, &center, sigma, &offset, Normalization::Standard)?.normalized())
}

/// Analytic-gradient packets use `sigma = 1`; finite-difference packets use
/// `sigma = 2` and `m = 2` in moderately boosted frames.
fn position_suite(rng: &mut ChaCha8Rng, n: usize) -> Vec<Entry> {
    let line = default_line();
    let cases = n.min(20);
    let xp_analytic = worst(rng, cases, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let m = rng.gen_range(0.5..3.0);
        let psi = random_gaussian(rng, &line, &u, m, 1.0, 1.0)?;
        let mut acc: f64 = 0.0;
        for mu in 0..4 {
            acc = acc.max(commutator_residual(OperatorPair::PositionMomentum { i: 0, mu }, &psi)?);
        }
        acc = acc.max(commutator_residual(OperatorPair::PositionMassSquared { i: 0 }, &psi)?);
        Ok(acc)
    });
    let xp_fd = worst(rng, cases, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.5);
        let psi = random_gaussian(rng, &line, &u, 2.0, 2.0, 0.25)?.without_gradient();
        let mut acc: f64 = 0.0;
        for mu in 0..4 {
            acc = acc.max(commutator_residual(OperatorPair::PositionMomentum { i: 0, mu }, &psi)?);
        }
        Ok(acc)
    });
    let plane = MomentumGrid::plane(-8.0, 8.0, 257).expect("valid grid");
    let xx = (|| -> Result<(f64, f64)> {
        let u = lorentz::random_four_velocity(rng, 0.5);
        let psi = random_gaussian(rng, &plane, &u, 2.0, 1.5, 0.25)?;
        let pair = OperatorPair::PositionPosition { i: 0, j: 1 };
        Ok((commutator_residual(pair, &psi)?, commutator_residual(pair, &psi.without_gradient())?))
    })();
    let (xx_analytic, xx_fd) = match xx {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    let rest = FourVelocity::preferred();
    let nw = worst(rng, cases, |rng| {
        let m = rng.gen_range(0.5..3.0);
        let sigma = rng.gen_range(1.0..1.1);
        let psi = random_gaussian(rng, &line, &rest, m, sigma, 1.0)?;
        let x = position_apply(&psi, 0)?;
        let q = newton_wigner_apply(&psi, 0)?;
        Ok(x.add_scaled(cm(-1.0), &q)?.norm() / x.norm())
    });
    let nw_commutator = worst(rng, cases, |rng| {
        let m = rng.gen_range(0.5..3.0);
        let psi = random_gaussian(rng, &line, &rest, m, 1.0, 1.0)?;
        commutator_residual(OperatorPair::NewtonWignerMomentum { i: 0, j: 1 }, &psi)
    });
    let hermitian = worst(rng, cases, |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let m = rng.gen_range(0.5..3.0);
        let a = random_gaussian(rng, &line, &u, m, 1.0, 1.0)?;
        let b = random_gaussian(rng, &line, &u, m, 1.0, 1.0)?;
        let lhs = scalar_product(&a, &position_apply(&b, 0)?)?;
        let rhs = scalar_product(&position_apply(&a, 0)?, &b)?;
        Ok((lhs - rhs).norm())
    });

    let periodic = MomentumGrid::periodic_line(-8.0, 8.0, 257).expect("valid grid");
    let inner: Vec<usize> = (8..periodic.len() - 8).collect();
    let all: Vec<usize> = (0..periodic.len()).collect();
    let mut mass_worst: f64 = 0.0;
    let mut inv_eigen: f64 = 0.0;
    let eigen = worst(rng, cases.min(10), |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let m = 2.0;
        let xi = periodic.dual_lattice_point([rng.gen_range(-2..=2), 0, 0]);
        let chi = localized_wavefunction(&xi, 0.0, 0.0, &periodic, &u, m, Normalization::Standard)?;
        let exact = eigen_residual(&position_apply(&chi, 0)?, &chi, xi[0], &all);
        let fd = eigen_residual(&position_apply(&chi.clone().without_gradient(), 0)?, &chi, xi[0], &inner);
        mass_worst = mass_worst.max(eigen_residual(&mass_squared_apply(&chi)?, &chi, m * m, &all));
        let inv = localized_wavefunction(&xi, 0.0, 0.0, &periodic, &u, m, Normalization::Invariant)?;
        inv_eigen = inv_eigen.max(eigen_residual(&position_apply_invariant(&inv, 0)?, &inv, xi[0], &all));
        Ok(exact.max(fd))
    });

    let cube = MomentumGrid::cube(-4.0, 4.0, 12, true).expect("valid grid");
    let orthogonality = worst(rng, cases.min(10), |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let m = rng.gen_range(0.5..3.0);
        let lattice = |rng: &mut ChaCha8Rng| [rng.gen_range(-3..=3), rng.gen_range(-3..=3), rng.gen_range(-3..=3)];
        let (na, mut nb) = (lattice(rng), lattice(rng));
        if na == nb {
            nb[0] += 1;
        }
        let chi = |n: [i64; 3]| localized_wavefunction(&cube.dual_lattice_point(n), 0.0, 0.0, &cube, &u, m, Normalization::Standard);
        let (a, b) = (chi(na)?, chi(nb)?);
        let cell: f64 = (0..3).map(|i| 2.0 * std::f64::consts::PI / cube.axes[i].length()).product();
        let expected = 1.0 / (2.0 * u.u0()) / cell;
        let diag = (scalar_product(&a, &a)? - cm(expected)).norm() / expected;
        let off = scalar_product(&a, &b)?.norm() / expected;
        Ok(diag.max(off))
    });

    let mut product_worst: f64 = 0.0;
    let conjugation = worst(rng, n.min(50), |rng| {
        let u = lorentz::random_four_velocity(rng, 0.8);
        let m = rng.gen_range(0.5..3.0);
        let g = random_gaussian(rng, &line, &u, m, 1.0, 1.0)?;
        let h = random_gaussian(rng, &line, &u, m, 1.0, 1.0)?;
        let direct = position_apply(&g, 0)?;
        let via = rescale(&position_apply_invariant(&rescale(&g, Normalization::Invariant), 0)?, Normalization::Standard);
        let s1 = scalar_product(&g, &h)?;
        let s2 = scalar_product(&rescale(&g, Normalization::Invariant), &rescale(&h, Normalization::Invariant))?;
        product_worst = product_worst.max((s1 - s2).norm());
        Ok(direct.add_scaled(cm(-1.0), &via)?.norm() / direct.norm())
    });

    vec![
        Entry::from_result("position.xp_analytic", xp_analytic, 1e-8),
        Entry::from_result("position.xp_fd", xp_fd, 1e-6),
        Entry::from_result("position.xx_analytic", xx_analytic, 1e-8),
        Entry::from_result("position.xx_fd", xx_fd, 1e-6),
        Entry::from_result("position.newton_wigner", nw, 1e-9),
        Entry::from_result("position.newton_wigner_commutator", nw_commutator, 1e-8),
        Entry::from_result("position.hermiticity", hermitian, 1e-8),
        Entry::from_result("position.eigenvalue", eigen, 1e-6),
        Entry::new("position.definite_mass", mass_worst, 1e-12),
        Entry::from_result("position.orthogonality", orthogonality, 1e-12),
        Entry::from_result("position.measure_conjugation", conjugation, 1e-8),
        Entry::new("position.measure_scalar_product", product_worst, 1e-10),
        Entry::new("position.invariant_eigenvalue", inv_eigen, 1e-10),
    ]
}
