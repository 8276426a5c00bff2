//! Momentum-space wave functions on Cartesian grids and the covariant
//! position operator.
//!
//! Samples live on a grid of covariant spatial momenta `k_i`; `k_0` is
//! always the on-shell energy of the frame. Derivatives come from a
//! closed-form gradient when the packet carries one and from fourth-order
//! differences otherwise (one-sided at the ends of non-periodic axes).
//!
//! A length-one axis is a frozen coordinate: it contributes unit weight to
//! the quadrature and cannot be differentiated numerically.

use std::f64::consts::PI;

use nalgebra::{Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CtError, Result};
use crate::kinematics::{metric, FourVelocity};
use crate::representation::{covariant_momentum, uk, Normalization};
use crate::spin::Spin;

/// Minimum number of points for the five-point stencil.
pub const MIN_STENCIL_POINTS: usize = 9;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform sampling of one momentum component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    /// Periodic axes sample `[min, max)` with spacing `(max - min)/n`;
    /// otherwise both ends are included.
    #[serde(default)]
    pub periodic: bool,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::build(min, max, n, false)
    }

    pub fn periodic(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::build(min, max, n, true)
    }

    /// A frozen coordinate.
    pub fn fixed(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            n: 1,
            periodic: false,
        }
    }

    fn build(min: f64, max: f64, n: usize, periodic: bool) -> Result<Self> {
        if n == 0 || !(min.is_finite() && max.is_finite()) || (n > 1 && !(max > min)) {
            return Err(CtError::Domain(format!("bad axis [{min}, {max}] with {n} points")));
        }
        Ok(Self { min, max, n, periodic })
    }

    pub fn spacing(&self) -> f64 {
        match (self.n, self.periodic) {
            (1, _) => 1.0,
            (n, true) => (self.max - self.min) / n as f64,
            (n, false) => (self.max - self.min) / (n - 1) as f64,
        }
    }

    pub fn point(&self, j: usize) -> f64 {
        if self.n == 1 {
            self.min
        } else {
            self.min + j as f64 * self.spacing()
        }
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }
}

/// Tensor-product grid over `(k_1, k_2, k_3)`, with the last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub axes: [Axis; 3],
}

impl MomentumGrid {
    pub fn new(axes: [Axis; 3]) -> Self {
        Self { axes }
    }

    /// Line along `k_1` through `k_2 = k_3 = 0`.
    pub fn line(min: f64, max: f64, n: usize) -> Result<Self> {
        Ok(Self::new([Axis::new(min, max, n)?, Axis::fixed(0.0), Axis::fixed(0.0)]))
    }

    pub fn periodic_line(min: f64, max: f64, n: usize) -> Result<Self> {
        Ok(Self::new([Axis::periodic(min, max, n)?, Axis::fixed(0.0), Axis::fixed(0.0)]))
    }

    /// Plane in `(k_1, k_2)` at `k_3 = 0`.
    pub fn plane(min: f64, max: f64, n: usize) -> Result<Self> {
        let a = Axis::new(min, max, n)?;
        Ok(Self::new([a, a, Axis::fixed(0.0)]))
    }

    pub fn cube(min: f64, max: f64, n: usize, periodic: bool) -> Result<Self> {
        let a = Axis::build(min, max, n, periodic)?;
        Ok(Self::new([a, a, a]))
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.axes[1].n + idx[1]) * self.axes[2].n + idx[2]
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n2 = self.axes[2].n;
        let n1 = self.axes[1].n;
        [flat / (n1 * n2), (flat / n2) % n1, flat % n2]
    }

    pub fn point(&self, flat: usize) -> Vector3<f64> {
        let [a, b, c] = self.multi_index(flat);
        Vector3::new(self.axes[0].point(a), self.axes[1].point(b), self.axes[2].point(c))
    }

    pub fn points(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// `2 pi n_a / L_a` on each periodic axis, zero on frozen axes.
    pub fn dual_lattice_point(&self, n: [i64; 3]) -> Vector3<f64> {
        Vector3::from_fn(|a, _| {
            if self.axes[a].n == 1 {
                0.0
            } else {
                2.0 * PI * n[a] as f64 / self.axes[a].length()
            }
        })
    }

    /// Points at least `margin` samples away from every non-periodic end.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&f| {
                let idx = self.multi_index(f);
                (0..3).all(|a| {
                    let ax = &self.axes[a];
                    ax.n == 1 || ax.periodic || (idx[a] >= margin && idx[a] + margin < ax.n)
                })
            })
            .collect()
    }
}

/// Fourth-order derivative of grid samples along `axis`.
pub fn differentiate(grid: &MomentumGrid, f: &[Complex64], axis: usize) -> Result<Vec<Complex64>> {
    let ax = grid.axes[axis];
    if ax.n < MIN_STENCIL_POINTS {
        return Err(CtError::GridTooSmall(format!(
            "axis {} has {} points, the stencil needs {MIN_STENCIL_POINTS}",
            axis + 1,
            ax.n
        )));
    }
    let n = ax.n;
    let h12 = 12.0 * ax.spacing();
    let mut out = vec![ZERO; f.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let idx = grid.multi_index(flat);
        let j = idx[axis];
        let at = |jj: usize| {
            let mut m = idx;
            m[axis] = jj;
            f[grid.flat_index(m)]
        };
        *slot = if ax.periodic {
            let w = |d: isize| at(((j as isize + d).rem_euclid(n as isize)) as usize);
            (w(-2) - w(-1) * 8.0 + w(1) * 8.0 - w(2)) / h12
        } else if j >= 2 && j + 2 < n {
            (at(j - 2) - at(j - 1) * 8.0 + at(j + 1) * 8.0 - at(j + 2)) / h12
        } else if j == 0 {
            (at(0) * -25.0 + at(1) * 48.0 - at(2) * 36.0 + at(3) * 16.0 - at(4) * 3.0) / h12
        } else if j == 1 {
            (at(0) * -3.0 - at(1) * 10.0 + at(2) * 18.0 - at(3) * 6.0 + at(4)) / h12
        } else if j == n - 1 {
            -(at(n - 1) * -25.0 + at(n - 2) * 48.0 - at(n - 3) * 36.0 + at(n - 4) * 16.0
                - at(n - 5) * 3.0)
                / h12
        } else {
            -(at(n - 1) * -3.0 - at(n - 2) * 10.0 + at(n - 3) * 18.0 - at(n - 4) * 6.0 + at(n - 5))
                / h12
        };
    }
    Ok(out)
}

/// Pointwise kinematic data of a grid in frame `u`.
struct Kinematics {
    /// covariant `k_mu` on shell
    k: Vec<Vector4<f64>>,
    /// contravariant `k^mu`
    k_up: Vec<Vector4<f64>>,
    uk: Vec<f64>,
}

impl Kinematics {
    fn new(grid: &MomentumGrid, u: &FourVelocity, m: f64) -> Self {
        let g = metric(u).contravariant;
        let mut k = Vec::with_capacity(grid.len());
        let mut k_up = Vec::with_capacity(grid.len());
        let mut uks = Vec::with_capacity(grid.len());
        for p in grid.points() {
            let kc = covariant_momentum(&p, u, m);
            k.push(kc);
            k_up.push(g * kc);
            uks.push(uk(&p, u, m));
        }
        Self { k, k_up, uk: uks }
    }

    /// `d k_mu / d k_i` with `k_0` on shell.
    fn dk(&self, n: usize, mu: usize, i: usize) -> f64 {
        if mu == 0 {
            -self.k_up[n][i + 1] / self.k_up[n][0]
        } else if mu == i + 1 {
            1.0
        } else {
            0.0
        }
    }

    /// `d(uk)/d k_i = u^i - k^i/(uk)`
    fn duk(&self, u: &FourVelocity, n: usize, i: usize) -> f64 {
        u.space()[i] - self.k_up[n][i + 1] / self.uk[n]
    }
}

/// Wave function `psi_lambda(k, u)` sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub grid: MomentumGrid,
    pub u: FourVelocity,
    pub m: f64,
    pub spin: Spin,
    pub twice_lambda: i32,
    pub measure: Normalization,
    pub samples: Vec<Complex64>,
    /// Closed-form `d psi / d k_i`, one vector per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<[Vec<Complex64>; 3]>,
}

impl WavePacket {
    pub fn from_fn(
        grid: MomentumGrid,
        u: FourVelocity,
        m: f64,
        measure: Normalization,
        f: impl Fn(&Vector3<f64>) -> Complex64,
    ) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(CtError::Domain(format!("mass must be positive, got {m}")));
        }
        let samples = grid.points().map(|p| f(&p)).collect();
        Ok(Self {
            grid,
            u,
            m,
            spin: Spin::ZERO,
            twice_lambda: 0,
            measure,
            samples,
            gradient: None,
        })
    }

    pub fn with_spin(mut self, spin: Spin, twice_lambda: i32) -> Result<Self> {
        if spin.index_of(twice_lambda).is_none() {
            return Err(CtError::InvalidSpin(format!(
                "lambda = {} is not in the spin-{spin} multiplet",
                f64::from(twice_lambda) / 2.0
            )));
        }
        self.spin = spin;
        self.twice_lambda = twice_lambda;
        Ok(self)
    }

    pub fn without_gradient(mut self) -> Self {
        self.gradient = None;
        self
    }

    fn kinematics(&self) -> Kinematics {
        Kinematics::new(&self.grid, &self.u, self.m)
    }

    fn like(&self, samples: Vec<Complex64>, gradient: Option<[Vec<Complex64>; 3]>) -> Self {
        Self {
            samples,
            gradient,
            ..self.clone()
        }
    }

    /// `d psi / d k_i`, closed form when available.
    pub fn derivative(&self, i: usize) -> Result<Vec<Complex64>> {
        match &self.gradient {
            Some(g) => Ok(g[i].clone()),
            None => differentiate(&self.grid, &self.samples, i),
        }
    }

    /// Largest relative deviation between the closed-form gradient and
    /// finite differences over points `margin` samples from the ends.
    pub fn gradient_residual(&self, margin: usize) -> Result<Option<f64>> {
        let Some(g) = &self.gradient else {
            return Ok(None);
        };
        let interior = self.grid.interior(margin);
        let scale = self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            if self.grid.axes[a].n == 1 {
                continue;
            }
            let fd = differentiate(&self.grid, &self.samples, a)?;
            for &n in &interior {
                worst = worst.max((fd[n] - g[a][n]).norm() / scale);
            }
        }
        Ok(Some(worst))
    }

    /// `sqrt(<psi|psi>)`
    pub fn norm(&self) -> f64 {
        scalar_product(self, self).map_or(f64::NAN, |c| c.re.sqrt())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        let mut out = self.clone();
        out.scale(Complex64::new(1.0 / n, 0.0));
        out
    }

    pub fn scale(&mut self, c: Complex64) {
        self.samples.iter_mut().for_each(|s| *s *= c);
        if let Some(g) = &mut self.gradient {
            g.iter_mut().flatten().for_each(|s| *s *= c);
        }
    }

    /// `self + c * other` on the same grid; the gradient survives only if
    /// both operands carry one.
    pub fn add_scaled(&self, c: Complex64, other: &WavePacket) -> Result<WavePacket> {
        check_compatible(self, other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b * c).collect();
        let gradient = match (&self.gradient, &other.gradient) {
            (Some(a), Some(b)) => Some(std::array::from_fn(|i| {
                a[i].iter().zip(&b[i]).map(|(x, y)| x + y * c).collect()
            })),
            _ => None,
        };
        Ok(self.like(samples, gradient))
    }

    /// Largest `|psi|` over the ends of non-periodic axes.
    pub fn boundary_amplitude(&self) -> f64 {
        let edge = |f: usize| {
            let idx = self.grid.multi_index(f);
            (0..3).any(|a| {
                let ax = &self.grid.axes[a];
                ax.n > 1 && !ax.periodic && (idx[a] == 0 || idx[a] + 1 == ax.n)
            })
        };
        (0..self.samples.len())
            .filter(|&f| edge(f))
            .map(|f| self.samples[f].norm())
            .fold(0.0, f64::max)
    }
}

/// `exp(-|k - c|^2 / (4 sigma^2) + i k.a)` with its closed-form gradient;
/// `sigma` is the spread of `|psi|^2`.
pub fn gaussian(
    grid: &MomentumGrid,
    u: &FourVelocity,
    m: f64,
    center: &Vector3<f64>,
    sigma: f64,
    offset: &Vector3<f64>,
    measure: Normalization,
) -> Result<WavePacket> {
    if !(sigma > 0.0) {
        return Err(CtError::Domain(format!("width must be positive, got {sigma}")));
    }
    let f = |k: &Vector3<f64>| {
        Complex64::new(-(k - center).norm_squared() / (4.0 * sigma * sigma), k.dot(offset)).exp()
    };
    let mut psi = WavePacket::from_fn(*grid, *u, m, measure, f)?;
    let grad = std::array::from_fn(|i| {
        grid.points()
            .zip(&psi.samples)
            .map(|(k, s)| s * Complex64::new(-(k[i] - center[i]) / (2.0 * sigma * sigma), offset[i]))
            .collect()
    });
    psi.gradient = Some(grad);
    Ok(psi)
}

/// Wave function of the state localized at `xi` at time `tau`, seen at
/// time `t`: `(2 pi)^{-3/2} sqrt(uk) e^{i k_mu xi^mu}` with
/// `xi^0 = tau - t`. The invariant measure drops `sqrt(uk)`.
pub fn localized_wavefunction(
    xi: &Vector3<f64>,
    tau: f64,
    t: f64,
    grid: &MomentumGrid,
    u: &FourVelocity,
    m: f64,
    measure: Normalization,
) -> Result<WavePacket> {
    let xi0 = tau - t;
    let pref = (2.0 * PI).powf(-1.5);
    let mut psi = WavePacket::from_fn(*grid, *u, m, measure, |_| ZERO)?;
    let kin = psi.kinematics();
    let mut grad: [Vec<Complex64>; 3] = std::array::from_fn(|_| Vec::with_capacity(grid.len()));
    for n in 0..grid.len() {
        let k = kin.k[n];
        let phase = k[0] * xi0 + k[1] * xi[0] + k[2] * xi[1] + k[3] * xi[2];
        let amp = match measure {
            Normalization::Standard => pref * kin.uk[n].sqrt(),
            Normalization::Invariant => pref,
        };
        let v = Complex64::from_polar(amp, phase);
        psi.samples[n] = v;
        for (i, g) in grad.iter_mut().enumerate() {
            let dphase = xi0 * kin.dk(n, 0, i) + xi[i];
            let damp = match measure {
                Normalization::Standard => kin.duk(u, n, i) / (2.0 * kin.uk[n]),
                Normalization::Invariant => 0.0,
            };
            g.push(v * Complex64::new(damp, dphase));
        }
    }
    psi.gradient = Some(grad);
    Ok(psi)
}

fn require_measure(psi: &WavePacket, measure: Normalization) -> Result<()> {
    if psi.measure != measure {
        return Err(CtError::Normalization(format!(
            "operator expects the {measure:?} measure, packet uses {:?}",
            psi.measure
        )));
    }
    Ok(())
}

fn check_axis(i: usize) -> Result<()> {
    if i < 3 {
        Ok(())
    } else {
        Err(CtError::Domain(format!("spatial index must be 0, 1 or 2, got {i}")))
    }
}

/// `x^i = -i d/dk_i + (i/2)(u^i/(uk) - k^i/(uk)^2)` for the standard measure.
pub fn position_apply(psi: &WavePacket, i: usize) -> Result<WavePacket> {
    check_axis(i)?;
    require_measure(psi, Normalization::Standard)?;
    let d = psi.derivative(i)?;
    let kin = psi.kinematics();
    let ui = psi.u.space()[i];
    let out = (0..psi.samples.len())
        .map(|n| {
            let uk = kin.uk[n];
            let corr = 0.5 * (ui / uk - kin.k_up[n][i + 1] / (uk * uk));
            -I * d[n] + I * corr * psi.samples[n]
        })
        .collect();
    Ok(psi.like(out, None))
}

/// `x^i = -i d/dk_i` for the invariant measure.
pub fn position_apply_invariant(psi: &WavePacket, i: usize) -> Result<WavePacket> {
    check_axis(i)?;
    require_measure(psi, Normalization::Invariant)?;
    let d = psi.derivative(i)?;
    Ok(psi.like(d.into_iter().map(|c| -I * c).collect(), None))
}

/// `q^i = -i (d/dk_i + k^i / (2 (k^2 + m^2)))` with `k^i = -k_i`, defined in
/// the preferred frame only.
pub fn newton_wigner_apply(psi: &WavePacket, i: usize) -> Result<WavePacket> {
    check_axis(i)?;
    if !psi.u.is_preferred() {
        return Err(CtError::Frame("the Newton-Wigner operator is defined in the preferred frame only".into()));
    }
    let d = psi.derivative(i)?;
    let out = psi
        .grid
        .points()
        .zip(d)
        .zip(&psi.samples)
        .map(|((k, dn), s)| {
            let k_up = -k[i];
            -I * (dn + s * (0.5 * k_up / (k.norm_squared() + psi.m * psi.m)))
        })
        .collect();
    Ok(psi.like(out, None))
}

/// Multiplication by the on-shell `k_mu`; closed-form gradients are carried
/// through.
pub fn momentum_apply(psi: &WavePacket, mu: usize) -> Result<WavePacket> {
    if mu > 3 {
        return Err(CtError::Domain(format!("four-index must be 0..=3, got {mu}")));
    }
    let kin = psi.kinematics();
    let out = (0..psi.samples.len()).map(|n| psi.samples[n] * kin.k[n][mu]).collect();
    let grad = psi.gradient.as_ref().map(|g| {
        std::array::from_fn(|i| {
            (0..psi.samples.len())
                .map(|n| g[i][n] * kin.k[n][mu] + psi.samples[n] * kin.dk(n, mu, i))
                .collect()
        })
    });
    Ok(psi.like(out, grad))
}

/// `p^2 = g^{mu nu} p_mu p_nu`, assembled from the component operators.
pub fn mass_squared_apply(psi: &WavePacket) -> Result<WavePacket> {
    let g = metric(&psi.u).contravariant;
    let mut acc = psi.like(vec![ZERO; psi.samples.len()], None);
    for mu in 0..4 {
        let pmu = momentum_apply(psi, mu)?;
        for nu in 0..4 {
            if g[(mu, nu)] != 0.0 {
                let term = momentum_apply(&pmu, nu)?;
                acc = acc.add_scaled(Complex64::new(g[(mu, nu)], 0.0), &term.without_gradient())?;
            }
        }
    }
    Ok(acc)
}

/// Multiplies by `exp(-i k_0 t)`.
pub fn evolve(psi: &WavePacket, t: f64) -> WavePacket {
    let kin = psi.kinematics();
    let phase: Vec<Complex64> = kin.k.iter().map(|k| Complex64::from_polar(1.0, -k[0] * t)).collect();
    let out = psi.samples.iter().zip(&phase).map(|(s, p)| s * p).collect();
    let grad = psi.gradient.as_ref().map(|g| {
        std::array::from_fn(|i| {
            (0..psi.samples.len())
                .map(|n| (g[i][n] - I * t * kin.dk(n, 0, i) * psi.samples[n]) * phase[n])
                .collect()
        })
    });
    psi.like(out, grad)
}

/// Converts between `psi` (standard) and `psi / sqrt(uk)` (invariant).
pub fn rescale(psi: &WavePacket, to: Normalization) -> WavePacket {
    if psi.measure == to {
        return psi.clone();
    }
    let kin = psi.kinematics();
    // f = (uk)^p with p = -1/2 towards the invariant measure
    let p = if to == Normalization::Invariant { -0.5 } else { 0.5 };
    let f: Vec<f64> = kin.uk.iter().map(|x| x.powf(p)).collect();
    let out = psi.samples.iter().zip(&f).map(|(s, w)| s * *w).collect();
    let grad = psi.gradient.as_ref().map(|g| {
        std::array::from_fn(|i| {
            (0..psi.samples.len())
                .map(|n| {
                    let df = p * f[n] / kin.uk[n] * kin.duk(&psi.u, n, i);
                    g[i][n] * f[n] + psi.samples[n] * df
                })
                .collect()
        })
    });
    WavePacket {
        measure: to,
        ..psi.like(out, grad)
    }
}

fn check_compatible(a: &WavePacket, b: &WavePacket) -> Result<()> {
    if a.grid != b.grid {
        return Err(CtError::Consistency("packets live on different grids".into()));
    }
    if !a.u.same_frame(&b.u) {
        return Err(CtError::Frame("packets live in different frames".into()));
    }
    if a.measure != b.measure {
        return Err(CtError::Normalization("packets use different measures".into()));
    }
    if a.m != b.m || a.spin != b.spin {
        return Err(CtError::Consistency("packets carry different (m, s)".into()));
    }
    Ok(())
}

/// Riemann sum of `conj(phi) psi` with weight `1/(2 omega)` (standard) or
/// `1/(2 u^0)` (invariant).
pub fn scalar_product(phi: &WavePacket, psi: &WavePacket) -> Result<Complex64> {
    check_compatible(phi, psi)?;
    if phi.twice_lambda != psi.twice_lambda {
        return Ok(ZERO);
    }
    let dv = phi.grid.cell_volume();
    let acc: Complex64 = match phi.measure {
        Normalization::Standard => {
            let kin = phi.kinematics();
            phi.samples
                .iter()
                .zip(&psi.samples)
                .zip(&kin.k_up)
                .map(|((a, b), k)| a.conj() * b / (2.0 * k[0]))
                .sum()
        }
        Normalization::Invariant => {
            phi.samples.iter().zip(&psi.samples).map(|(a, b)| a.conj() * b).sum::<Complex64>()
                / (2.0 * phi.u.u0())
        }
    };
    Ok(acc * dv)
}

/// Operator pairs whose commutators have closed-form right-hand sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorPair {
    /// `[x^i, p_mu] = i (u_mu p^i/(up) - delta^i_mu)`
    PositionMomentum { i: usize, mu: usize },
    /// `[x^i, x^j] = 0`
    PositionPosition { i: usize, j: usize },
    /// `[x^i, p^2] = 0`
    PositionMassSquared { i: usize },
    /// `[x^i, p_j] = -i delta^i_j` with the invariant-measure operator
    InvariantPositionMomentum { i: usize, j: usize },
    /// `[q^i, p_j] = -i delta^i_j`
    NewtonWignerMomentum { i: usize, j: usize },
}

fn commutator_parts(pair: OperatorPair, psi: &WavePacket) -> Result<(WavePacket, WavePacket)> {
    let x = |p: &WavePacket, i| match pair {
        OperatorPair::InvariantPositionMomentum { .. } => position_apply_invariant(p, i),
        OperatorPair::NewtonWignerMomentum { .. } => newton_wigner_apply(p, i),
        _ => position_apply(p, i),
    };
    Ok(match pair {
        OperatorPair::PositionMomentum { i, mu: j }
        | OperatorPair::InvariantPositionMomentum { i, j }
        | OperatorPair::NewtonWignerMomentum { i, j } => {
            (x(&momentum_apply(psi, j)?, i)?, momentum_apply(&x(psi, i)?, j)?)
        }
        OperatorPair::PositionPosition { i, j } if psi.gradient.is_some() => {
            check_axis(i)?;
            check_axis(j)?;
            require_measure(psi, Normalization::Standard)?;
            (position_curl(psi, i, j), psi.like(vec![ZERO; psi.samples.len()], None))
        }
        OperatorPair::PositionPosition { i, j } => (x(&x(psi, j)?, i)?, x(&x(psi, i)?, j)?),
        OperatorPair::PositionMassSquared { i } => {
            let p2 = mass_squared_apply(psi)?;
            let p2 = psi.like(p2.samples, mass_squared_gradient(psi));
            (x(&p2, i)?, mass_squared_apply(&x(psi, i)?)?)
        }
    })
}

/// `[x^i, x^j] psi` in closed form: second derivatives of `psi` cancel,
/// leaving `-i (d_i f_j - d_j f_i) psi` for the correction term `f`.
fn position_curl(psi: &WavePacket, i: usize, j: usize) -> WavePacket {
    let kin = psi.kinematics();
    let u = &psi.u;
    // d/dk_a of (u^b/(uk) - k^b/(uk)^2)
    let df = |n: usize, a: usize, b: usize| {
        let uk = kin.uk[n];
        let duk = kin.duk(u, n, a);
        let dkb = u.u0() * u.space()[b] * kin.dk(n, 0, a) - if a == b { 1.0 } else { 0.0 };
        -u.space()[b] * duk / (uk * uk) - dkb / (uk * uk) + 2.0 * kin.k_up[n][b + 1] * duk / (uk * uk * uk)
    };
    let out = (0..psi.samples.len())
        .map(|n| {
            let curl = 0.5 * I * (df(n, i, j) - df(n, j, i));
            -I * curl * psi.samples[n]
        })
        .collect();
    psi.like(out, None)
}

/// `p^2` acts as a multiplication by the constant `k^2` on shell, which
/// keeps closed-form gradients exact.
fn mass_squared_gradient(psi: &WavePacket) -> Option<[Vec<Complex64>; 3]> {
    let g = metric(&psi.u).contravariant;
    let kin = psi.kinematics();
    psi.gradient.as_ref().map(|grad| {
        std::array::from_fn(|i| {
            (0..psi.samples.len())
                .map(|n| grad[i][n] * kin.k[n].dot(&(g * kin.k[n])))
                .collect()
        })
    })
}

fn expected_commutator(pair: OperatorPair, psi: &WavePacket) -> Vec<Complex64> {
    match pair {
        OperatorPair::PositionMomentum { i, mu } => {
            let kin = psi.kinematics();
            let u_low = psi.u.covariant();
            let delta = if mu == i + 1 { 1.0 } else { 0.0 };
            (0..psi.samples.len())
                .map(|n| I * (u_low[mu] * kin.k_up[n][i + 1] / kin.uk[n] - delta) * psi.samples[n])
                .collect()
        }
        OperatorPair::InvariantPositionMomentum { i, j } | OperatorPair::NewtonWignerMomentum { i, j } => {
            let delta = if j == i + 1 { 1.0 } else { 0.0 };
            psi.samples.iter().map(|s| -I * delta * s).collect()
        }
        OperatorPair::PositionPosition { .. } | OperatorPair::PositionMassSquared { .. } => {
            vec![ZERO; psi.samples.len()]
        }
    }
}

/// `||(AB - BA) psi - C psi|| / ||psi||` with `C` the closed-form
/// commutator. Momentum indices follow the four-vector convention
/// (`1..=3` spatial), spatial position indices are `0..=2`.
pub fn commutator_residual(pair: OperatorPair, psi: &WavePacket) -> Result<f64> {
    let (ab, ba) = commutator_parts(pair, psi)?;
    let expected = expected_commutator(pair, psi);
    let diff: Vec<Complex64> = (0..psi.samples.len())
        .map(|n| ab.samples[n] - ba.samples[n] - expected[n])
        .collect();
    let diff = psi.like(diff, None);
    let num = scalar_product(&diff, &diff)?.re.max(0.0).sqrt();
    Ok(num / psi.norm())
}

/// Largest `|A psi - lambda psi| / max|psi|` over the given points.
pub fn eigen_residual(applied: &WavePacket, psi: &WavePacket, eigenvalue: f64, points: &[usize]) -> f64 {
    let scale = psi.samples.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    points
        .iter()
        .map(|&n| (applied.samples[n] - psi.samples[n] * eigenvalue).norm() / scale)
        .fold(0.0, f64::max)
}
