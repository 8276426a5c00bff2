//! Free-particle canonical mechanics in CT coordinates.
//!
//! Sign bookkeeping: the canonical momenta are `pi_i = -m omega_i` while the
//! covariant four-momentum is `k_mu = m omega_mu`, so the spatial parts are
//! related by `k = -pi`. The Hamiltonian `H(pi)` then coincides with the
//! energy `k_0(k)` of the dispersion relation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{SMatrix, SVector, Vector3, Vector4};
use rand::Rng;
use serde::Serialize;

use crate::error::{CtError, Result};
use crate::kinematics::{metric, FourVelocity};
use crate::representation::dispersion_energy;

/// Relative central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Agreement required between a supplied gradient and finite differences.
pub const GRADIENT_TOL: f64 = 1e-7;

/// Radicand `(1 + u^0 u.v)^2 - v^2` of the Lagrangian.
fn radicand(u: &FourVelocity, v: &Vector3<f64>) -> f64 {
    let a = 1.0 + u.u0() * u.space().dot(v);
    a * a - v.norm_squared()
}

fn admissible(u: &FourVelocity, v: &Vector3<f64>) -> Result<f64> {
    let r = radicand(u, v);
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(CtError::Domain(format!(
            "velocity {v:?} is not timelike in this frame (radicand {r})"
        )))
    }
}

/// `L = -m sqrt((1 + u^0 u.v)^2 - v^2)`
pub fn lagrangian(u: &FourVelocity, v: &Vector3<f64>, m: f64) -> Result<f64> {
    Ok(-m * admissible(u, v)?.sqrt())
}

/// `pi_i = dL/dv^i`
pub fn canonical_momenta(u: &FourVelocity, v: &Vector3<f64>, m: f64) -> Result<Vector3<f64>> {
    let r = admissible(u, v)?.sqrt();
    let a = 1.0 + u.u0() * u.space().dot(v);
    Ok((v - u.space() * (u.u0() * a)) * (m / r))
}

/// `H(pi) = (u.pi + sqrt((u.pi)^2 + pi^2 + m^2)) / u^0`
pub fn hamiltonian(u: &FourVelocity, pi: &Vector3<f64>, m: f64) -> f64 {
    dispersion_energy(&-pi, u, m).0
}

/// Velocity `v^i = k^i / k^0` of the on-shell momentum with spatial part
/// `-pi`, the inverse of [`canonical_momenta`].
pub fn velocity_from_momenta(u: &FourVelocity, pi: &Vector3<f64>, m: f64) -> Vector3<f64> {
    let k = crate::representation::covariant_momentum(&-pi, u, m);
    let up = metric(u).contravariant * k;
    Vector3::new(up[1], up[2], up[3]) / up[0]
}

/// Point `(x^mu, k_mu)` of the extended phase space of the frame `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseSpacePoint {
    pub x: Vector4<f64>,
    pub k: Vector4<f64>,
    #[serde(rename = "frame_u")]
    pub u: FourVelocity,
}

impl PhaseSpacePoint {
    pub fn new(x: Vector4<f64>, k: Vector4<f64>, u: FourVelocity) -> Self {
        Self { x, k, u }
    }

    /// Point with `k_0` fixed by the dispersion relation.
    pub fn on_shell(x: Vector4<f64>, kbreve: Vector3<f64>, u: FourVelocity, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(CtError::Domain(format!("mass must be positive, got {m}")));
        }
        let k = crate::representation::covariant_momentum(&kbreve, &u, m);
        Ok(Self { x, k, u })
    }

    pub fn kbreve(&self) -> Vector3<f64> {
        Vector3::new(self.k[1], self.k[2], self.k[3])
    }

    /// `k^mu = g^{mu nu}(u) k_nu`
    pub fn k_upper(&self) -> Vector4<f64> {
        metric(&self.u).contravariant * self.k
    }

    /// `u^mu k_mu`
    pub fn uk(&self) -> f64 {
        self.u.dot_covariant(&self.k)
    }

    /// `g^{mu nu} k_mu k_nu`
    pub fn mass_squared(&self) -> f64 {
        self.k.dot(&self.k_upper())
    }

    pub fn shell_residual(&self, m: f64) -> f64 {
        (self.mass_squared() - m * m).abs()
    }

    /// Replaces `k_0` by the positive-energy solution of the dispersion
    /// relation for mass `m`.
    pub fn project_to_shell(&self, m: f64) -> Result<Self> {
        Self::on_shell(self.x, self.kbreve(), self.u, m)
    }
}

/// Partial derivatives `dA/dx^mu` and `dA/dk_nu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gradient {
    pub dx: Vector4<f64>,
    pub dk: Vector4<f64>,
}

type ValueFn = Arc<dyn Fn(&Vector4<f64>, &Vector4<f64>) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&Vector4<f64>, &Vector4<f64>) -> Gradient + Send + Sync>;

/// Phase-space function `A(x, k)` with optional closed-form gradient and
/// optional explicit time derivative.
#[derive(Clone)]
pub struct Observable {
    value: ValueFn,
    gradient: Option<GradientFn>,
    time_derivative: Option<ValueFn>,
    fd_step: f64,
    fd_fourth_order: bool,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("analytic_gradient", &self.gradient.is_some())
            .field("explicit_time", &self.time_derivative.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl Observable {
    pub fn new(value: impl Fn(&Vector4<f64>, &Vector4<f64>) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            time_derivative: None,
            fd_step: FD_STEP,
            fd_fourth_order: false,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&Vector4<f64>, &Vector4<f64>) -> Gradient + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_time_derivative(
        mut self,
        dt: impl Fn(&Vector4<f64>, &Vector4<f64>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.time_derivative = Some(Arc::new(dt));
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    /// Switches finite differences to the five-point stencil with the
    /// given relative step.
    pub fn with_fourth_order_fd(mut self, step: f64) -> Self {
        self.fd_step = step;
        self.fd_fourth_order = true;
        self
    }

    /// Drops the closed-form gradient so that finite differences are used.
    pub fn without_gradient(mut self) -> Self {
        self.gradient = None;
        self
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Coordinate `x^mu`.
    pub fn position(mu: usize) -> Self {
        assert!(mu < 4);
        Self::new(move |x, _| x[mu]).with_gradient(move |_, _| Gradient {
            dx: Vector4::ith(mu, 1.0),
            dk: Vector4::zeros(),
        })
    }

    /// Momentum component `k_nu`.
    pub fn momentum(nu: usize) -> Self {
        assert!(nu < 4);
        Self::new(move |_, k| k[nu]).with_gradient(move |_, _| Gradient {
            dx: Vector4::zeros(),
            dk: Vector4::ith(nu, 1.0),
        })
    }

    /// `k^2 = g^{mu nu}(u) k_mu k_nu`
    pub fn mass_shell(u: &FourVelocity) -> Self {
        let g = metric(u).contravariant;
        Self::new(move |_, k| k.dot(&(g * k))).with_gradient(move |_, k| Gradient {
            dx: Vector4::zeros(),
            dk: (g + g.transpose()) * k,
        })
    }

    pub fn quadratic(q: Quadratic) -> Self {
        let q2 = q.clone();
        Self::new(move |x, k| q.value(x, k)).with_gradient(move |x, k| q2.gradient(x, k))
    }

    pub fn value(&self, p: &PhaseSpacePoint) -> f64 {
        (self.value)(&p.x, &p.k)
    }

    pub fn eval(&self, x: &Vector4<f64>, k: &Vector4<f64>) -> f64 {
        (self.value)(x, k)
    }

    pub fn partial_t(&self, p: &PhaseSpacePoint) -> f64 {
        self.time_derivative.as_ref().map_or(0.0, |f| f(&p.x, &p.k))
    }

    /// Closed-form gradient if present, finite differences otherwise.
    pub fn gradient(&self, p: &PhaseSpacePoint) -> Gradient {
        match &self.gradient {
            Some(g) => g(&p.x, &p.k),
            None => self.fd_gradient(p),
        }
    }

    /// Central differences with step `fd_step * max(1, |z|)` per variable.
    pub fn fd_gradient(&self, p: &PhaseSpacePoint) -> Gradient {
        let mut dx = Vector4::zeros();
        let mut dk = Vector4::zeros();
        for i in 0..4 {
            dx[i] = self.partial(p.x[i], |t| {
                let mut x = p.x;
                x[i] = t;
                self.eval(&x, &p.k)
            });
            dk[i] = self.partial(p.k[i], |t| {
                let mut k = p.k;
                k[i] = t;
                self.eval(&p.x, &k)
            });
        }
        Gradient { dx, dk }
    }

    fn partial(&self, z: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.fd_step * z.abs().max(1.0);
        if self.fd_fourth_order {
            (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h)
        } else {
            (f(z + h) - f(z - h)) / (2.0 * h)
        }
    }

    /// Max deviation between the supplied gradient and finite differences.
    pub fn gradient_residual(&self, p: &PhaseSpacePoint) -> Option<f64> {
        let g = self.gradient.as_ref()?(&p.x, &p.k);
        let fd = self.fd_gradient(p);
        Some((g.dx - fd.dx).amax().max((g.dk - fd.dk).amax()))
    }
}

/// `c + l.z + z^T Q z` with `z = (x^0..x^3, k_0..k_3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    pub constant: f64,
    pub linear: SVector<f64, 8>,
    pub quadratic: SMatrix<f64, 8, 8>,
}

fn stack(x: &Vector4<f64>, k: &Vector4<f64>) -> SVector<f64, 8> {
    SVector::<f64, 8>::from_iterator(x.iter().chain(k.iter()).copied())
}

impl Quadratic {
    /// Coefficients uniform in `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Self {
        Self {
            constant: rng.gen_range(-scale..scale),
            linear: SVector::from_fn(|_, _| rng.gen_range(-scale..scale)),
            quadratic: SMatrix::from_fn(|_, _| rng.gen_range(-scale..scale)),
        }
    }

    pub fn value(&self, x: &Vector4<f64>, k: &Vector4<f64>) -> f64 {
        let z = stack(x, k);
        self.constant + self.linear.dot(&z) + z.dot(&(self.quadratic * z))
    }

    pub fn gradient(&self, x: &Vector4<f64>, k: &Vector4<f64>) -> Gradient {
        let z = stack(x, k);
        let g = self.linear + (self.quadratic + self.quadratic.transpose()) * z;
        Gradient {
            dx: g.fixed_rows::<4>(0).into_owned(),
            dk: g.fixed_rows::<4>(4).into_owned(),
        }
    }
}

/// Projector `P^mu_nu = delta^mu_nu - k^mu u_nu / (uk)`.
pub fn projector(p: &PhaseSpacePoint) -> Result<nalgebra::Matrix4<f64>> {
    let uk = p.uk();
    if !(uk.abs() > 1e-300) || !uk.is_finite() {
        return Err(CtError::SingularBracket(uk));
    }
    Ok(nalgebra::Matrix4::identity() - p.k_upper() * p.u.covariant().transpose() / uk)
}

/// `{A, B} = -P^mu_nu (dA/dx^mu dB/dk_nu - dB/dx^mu dA/dk_nu)`
pub fn poisson_bracket(a: &Observable, b: &Observable, p: &PhaseSpacePoint) -> Result<f64> {
    let proj = projector(p)?;
    let ga = a.gradient(p);
    let gb = b.gradient(p);
    Ok(-(ga.dx.dot(&(proj * gb.dk)) - gb.dx.dot(&(proj * ga.dk))))
}

/// `{A, B}` as an observable on the extended phase space of `u`.
///
/// Its gradient differentiates the projector in closed form and applies the
/// five-point stencil (relative step 1e-3) to the gradients of `A` and `B`
/// only; for polynomial observables of degree at most 5 this is exact up to
/// roundoff.
pub fn bracket_observable(a: &Observable, b: &Observable, u: FourVelocity) -> Observable {
    let (a, b) = (a.clone(), b.clone());
    let (ga, gb) = (a.clone(), b.clone());
    Observable::new(move |x, k| {
        poisson_bracket(&a, &b, &PhaseSpacePoint::new(*x, *k, u)).unwrap_or(f64::NAN)
    })
    .with_gradient(move |x, k| bracket_gradient(&ga, &gb, &PhaseSpacePoint::new(*x, *k, u)))
    .with_fourth_order_fd(1e-3)
}

fn bracket_gradient(a: &Observable, b: &Observable, p: &PhaseSpacePoint) -> Gradient {
    let nan = Gradient {
        dx: Vector4::from_element(f64::NAN),
        dk: Vector4::from_element(f64::NAN),
    };
    let Ok(proj) = projector(p) else {
        return nan;
    };
    let (ga, gb) = (a.gradient(p), b.gradient(p));
    let g = metric(&p.u).contravariant;
    let u_low = p.u.covariant();
    let u_up = p.u.contravariant();
    let ku = p.k_upper();
    let uk = p.uk();
    let step = 1e-3;
    // d/dz of both gradients at (x, k) shifted along coordinate `i` of x or k
    let shifted = |in_k: bool, i: usize| {
        let z = if in_k { p.k[i] } else { p.x[i] };
        let h = step * z.abs().max(1.0);
        let at = |t: f64| {
            let mut q = *p;
            if in_k {
                q.k[i] = t;
            } else {
                q.x[i] = t;
            }
            (a.gradient(&q), b.gradient(&q))
        };
        let (m2, m1, p1, p2) = (at(z - 2.0 * h), at(z - h), at(z + h), at(z + 2.0 * h));
        let d = |f: &dyn Fn(&(Gradient, Gradient)) -> Vector4<f64>| {
            (f(&m2) - f(&m1) * 8.0 + f(&p1) * 8.0 - f(&p2)) / (12.0 * h)
        };
        (
            Gradient { dx: d(&|g| g.0.dx), dk: d(&|g| g.0.dk) },
            Gradient { dx: d(&|g| g.1.dx), dk: d(&|g| g.1.dk) },
        )
    };
    let mut out = Gradient {
        dx: Vector4::zeros(),
        dk: Vector4::zeros(),
    };
    for in_k in [false, true] {
        for i in 0..4 {
            let (da, db) = shifted(in_k, i);
            let mut v = da.dx.dot(&(proj * gb.dk)) + ga.dx.dot(&(proj * db.dk))
                - db.dx.dot(&(proj * ga.dk))
                - gb.dx.dot(&(proj * da.dk));
            if in_k {
                // dP/dk_i = -g^{mu i} u_nu/(uk) + k^mu u_nu u^i/(uk)^2
                let dp = -g.column(i) * u_low.transpose() / uk + ku * u_low.transpose() * (u_up[i] / (uk * uk));
                v += ga.dx.dot(&(dp * gb.dk)) - gb.dx.dot(&(dp * ga.dk));
                out.dk[i] = -v;
            } else {
                out.dx[i] = -v;
            }
        }
    }
    out
}

/// `dA/dt = dA/dt|explicit + {A, k_0}` evaluated on the mass shell `m`.
pub fn evolve_observable(a: &Observable, p: &PhaseSpacePoint, m: f64) -> Result<f64> {
    let q = p.project_to_shell(m)?;
    Ok(a.partial_t(&q) + poisson_bracket(a, &Observable::momentum(0), &q)?)
}

/// One sample of a free trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: PhaseSpacePoint,
    pub shell_residual: f64,
}

impl TrajectorySample {
    pub const CSV_HEADER: &'static str = "t,x1,x2,x3,k1,k2,k3,k0,shell_residual";

    pub fn csv_row(&self) -> String {
        let p = &self.point;
        format!(
            "{},{},{},{},{},{},{},{},{:e}",
            self.t, p.x[1], p.x[2], p.x[3], p.k[1], p.k[2], p.k[3], p.k[0], self.shell_residual
        )
    }
}

/// Free motion `x^i(t) = x^i(0) + (k^i/k^0) t` with constant `k`,
/// sampled every `dt` with the final step clipped to `t_final`.
pub fn integrate_trajectory(p0: &PhaseSpacePoint, m: f64, t_final: f64, dt: f64) -> Result<Vec<TrajectorySample>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CtError::Domain(format!("time step must be positive, got {dt}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(CtError::Domain(format!("final time must be nonnegative, got {t_final}")));
    }
    let start = p0.project_to_shell(m)?;
    let ku = start.k_upper();
    let mut velocity = ku / ku[0];
    velocity[0] = 1.0;
    let steps = (t_final / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let t = (j as f64 * dt).min(t_final);
        let point = PhaseSpacePoint::new(start.x + velocity * t, start.k, start.u);
        out.push(TrajectorySample {
            t,
            point,
            shell_residual: point.shell_residual(m),
        });
    }
    Ok(out)
}
