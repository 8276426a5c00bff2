//! Momentum eigenstates of the frame Hilbert space `H_u`, their
//! translations and the Lorentz action with Wigner rotations.
//!
//! Continuum kets are modelled by finite sums of labelled terms. The
//! Dirac delta of the normalization is replaced by a label match: two
//! terms with equal `k` labels and spin index contribute
//! `2 k^0 conj(a) b / V` (standard) or `2 u^0 conj(a) b / V` (invariant),
//! where `V` is the term's `delta_volume`. The volume records
//! the Jacobian picked up by the delta function when the labels are moved
//! by a Lorentz transformation, so that the action stays unitary inside
//! the surrogate.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CtError, Result};
use crate::kinematics::{boost_to_frame, lorentz, FourVelocity, FrameTransform};
use crate::spin::{CMatrix, Spin, SpinRepresentation, SpinTensor};

/// Default tolerance for matching momentum labels.
pub const LABEL_TOL: f64 = 1e-9;

/// Block-form tolerance for the little-group product.
pub const WIGNER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `<k'|k> = 2 k^0 delta(k' - k)`
    Standard,
    /// `<k'|k> = 2 u^0 delta(k' - k)`, kets rescaled by `1/sqrt(uk)`.
    Invariant,
}

/// `sqrt((u.k)^2 + k^2 + m^2)`, which equals `u^mu k_mu` on shell.
pub fn uk(kbreve: &Vector3<f64>, u: &FourVelocity, m: f64) -> f64 {
    let uk = u.space().dot(kbreve);
    (uk * uk + kbreve.norm_squared() + m * m).sqrt()
}

/// Positive-energy solution `(k_0, k^0)` of the dispersion relation.
pub fn dispersion_energy(kbreve: &Vector3<f64>, u: &FourVelocity, m: f64) -> (f64, f64) {
    let b = u.space().dot(kbreve);
    let root = uk(kbreve, u, m);
    // Rationalized form avoids cancellation when u.k is large and positive.
    let k0 = if b > 0.0 {
        (kbreve.norm_squared() + m * m) / (u.u0() * (b + root))
    } else {
        (root - b) / u.u0()
    };
    (k0, u.u0() * root)
}

/// On-shell covariant four-momentum `(k_0, k)`.
pub fn covariant_momentum(kbreve: &Vector3<f64>, u: &FourVelocity, m: f64) -> Vector4<f64> {
    let (k0, _) = dispersion_energy(kbreve, u, m);
    Vector4::new(k0, kbreve[0], kbreve[1], kbreve[2])
}

/// Energy shift `q_0` accompanying the spatial shift `q`.
pub fn q0_shift(kbreve: &Vector3<f64>, qbreve: &Vector3<f64>, u: &FourVelocity, m: f64) -> f64 {
    let before = uk(kbreve, u, m);
    let after = uk(&(kbreve + qbreve), u, m);
    (after - before - u.space().dot(qbreve)) / u.u0()
}

/// `1/(2 omega(k))` for the standard measure, `1/(2 u^0)` for the
/// invariant one.
pub fn measure_weight(kbreve: &Vector3<f64>, u: &FourVelocity, m: f64, convention: Normalization) -> f64 {
    match convention {
        Normalization::Standard => 0.5 / dispersion_energy(kbreve, u, m).1,
        Normalization::Invariant => 0.5 / u.u0(),
    }
}

fn check_mass(m: f64) -> Result<()> {
    if m.is_finite() && m > 0.0 {
        Ok(())
    } else {
        Err(CtError::Domain(format!("mass must be positive, got {m}")))
    }
}

/// Label of a single ket `|k, u, m; s, lambda>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumBasisState {
    pub kbreve: Vector3<f64>,
    pub u: FourVelocity,
    pub m: f64,
    pub spin: Spin,
    /// `2 lambda`
    pub twice_lambda: i32,
    pub normalization: Normalization,
}

impl MomentumBasisState {
    pub fn new(
        kbreve: Vector3<f64>,
        u: FourVelocity,
        m: f64,
        spin: Spin,
        twice_lambda: i32,
        normalization: Normalization,
    ) -> Result<Self> {
        check_mass(m)?;
        check_lambda(spin, twice_lambda)?;
        Ok(Self {
            kbreve,
            u,
            m,
            spin,
            twice_lambda,
            normalization,
        })
    }

    pub fn k_covariant(&self) -> Vector4<f64> {
        covariant_momentum(&self.kbreve, &self.u, self.m)
    }

    pub fn k_upper0(&self) -> f64 {
        dispersion_energy(&self.kbreve, &self.u, self.m).1
    }

    pub fn uk(&self) -> f64 {
        uk(&self.kbreve, &self.u, self.m)
    }
}

fn check_lambda(spin: Spin, twice_lambda: i32) -> Result<()> {
    spin.index_of(twice_lambda).map(|_| ()).ok_or_else(|| {
        CtError::InvalidSpin(format!(
            "lambda = {} is not in the spin-{spin} multiplet",
            f64::from(twice_lambda) / 2.0
        ))
    })
}

/// One amplitude of a finite-sum state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub amplitude: Complex64,
    pub kbreve: Vector3<f64>,
    pub twice_lambda: i32,
    pub delta_volume: f64,
}

impl Term {
    pub fn new(amplitude: Complex64, kbreve: Vector3<f64>, twice_lambda: i32) -> Self {
        Self {
            amplitude,
            kbreve,
            twice_lambda,
            delta_volume: 1.0,
        }
    }
}

/// Finite superposition of momentum kets sharing `(u, m, s, normalization)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct StateVector {
    pub u: FourVelocity,
    pub m: f64,
    pub spin: Spin,
    pub normalization: Normalization,
    pub terms: Vec<Term>,
}

impl StateVector {
    pub fn empty(u: FourVelocity, m: f64, spin: Spin, normalization: Normalization) -> Result<Self> {
        check_mass(m)?;
        Ok(Self {
            u,
            m,
            spin,
            normalization,
            terms: Vec::new(),
        })
    }

    /// Single ket with unit amplitude.
    pub fn basis(state: &MomentumBasisState) -> Self {
        Self {
            u: state.u,
            m: state.m,
            spin: state.spin,
            normalization: state.normalization,
            terms: vec![Term::new(Complex64::new(1.0, 0.0), state.kbreve, state.twice_lambda)],
        }
    }

    pub fn push(&mut self, term: Term) -> Result<()> {
        check_lambda(self.spin, term.twice_lambda)?;
        if !(term.delta_volume.is_finite() && term.delta_volume > 0.0) {
            return Err(CtError::Domain(format!(
                "delta volume must be positive, got {}",
                term.delta_volume
            )));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn with_term(mut self, term: Term) -> Result<Self> {
        self.push(term)?;
        Ok(self)
    }

    /// The label of term `i`.
    pub fn label(&self, i: usize) -> MomentumBasisState {
        let t = &self.terms[i];
        MomentumBasisState {
            kbreve: t.kbreve,
            u: self.u,
            m: self.m,
            spin: self.spin,
            twice_lambda: t.twice_lambda,
            normalization: self.normalization,
        }
    }

    pub fn norm_squared(&self) -> f64 {
        inner_product(self, self).map(|c| c.re).unwrap_or(f64::NAN)
    }

    /// Merges terms whose labels agree within `tol` and drops exact zeros.
    pub fn merged(&self, tol: f64) -> Self {
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match out.iter_mut().find(|o| {
                o.twice_lambda == t.twice_lambda && (o.kbreve - t.kbreve).amax() <= tol
            }) {
                Some(o) => o.amplitude += t.amplitude,
                None => out.push(*t),
            }
        }
        out.retain(|t| t.amplitude != Complex64::new(0.0, 0.0));
        Self {
            terms: out,
            ..self.clone()
        }
    }

    /// Amplitude of the label `(k, lambda)` after merging within `tol`,
    /// together with its delta volume.
    pub fn amplitude_at(&self, kbreve: &Vector3<f64>, twice_lambda: i32, tol: f64) -> Option<(Complex64, f64)> {
        let mut found = None;
        for t in &self.terms {
            if t.twice_lambda == twice_lambda && (t.kbreve - kbreve).amax() <= tol {
                let (a, _) = found.get_or_insert((Complex64::new(0.0, 0.0), t.delta_volume));
                *a += t.amplitude;
            }
        }
        found
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    amplitude_re: f64,
    amplitude_im: f64,
    kbreve: [f64; 3],
    lambda: f64,
    #[serde(default = "unit_volume")]
    delta_volume: f64,
}

fn unit_volume() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    u: FourVelocity,
    m: f64,
    s: Spin,
    normalization: Normalization,
    terms: Vec<TermJson>,
}

impl TryFrom<StateJson> for StateVector {
    type Error = CtError;

    fn try_from(j: StateJson) -> Result<Self> {
        let mut psi = StateVector::empty(j.u, j.m, j.s, j.normalization)?;
        for t in j.terms {
            let twice = 2.0 * t.lambda;
            if (twice - twice.round()).abs() > 1e-12 {
                return Err(CtError::InvalidSpin(format!("lambda = {} is not a half-integer", t.lambda)));
            }
            psi.push(Term {
                amplitude: Complex64::new(t.amplitude_re, t.amplitude_im),
                kbreve: Vector3::from(t.kbreve),
                twice_lambda: twice.round() as i32,
                delta_volume: t.delta_volume,
            })?;
        }
        Ok(psi)
    }
}

impl From<StateVector> for StateJson {
    fn from(s: StateVector) -> Self {
        StateJson {
            u: s.u,
            m: s.m,
            s: s.spin,
            normalization: s.normalization,
            terms: s
                .terms
                .iter()
                .map(|t| TermJson {
                    amplitude_re: t.amplitude.re,
                    amplitude_im: t.amplitude.im,
                    kbreve: [t.kbreve[0], t.kbreve[1], t.kbreve[2]],
                    lambda: f64::from(t.twice_lambda) / 2.0,
                    delta_volume: t.delta_volume,
                })
                .collect(),
        }
    }
}

/// Finite-sum inner product `<phi|psi>`, antilinear in `phi`.
pub fn inner_product(phi: &StateVector, psi: &StateVector) -> Result<Complex64> {
    inner_product_with_tol(phi, psi, LABEL_TOL)
}

pub fn inner_product_with_tol(phi: &StateVector, psi: &StateVector, tol: f64) -> Result<Complex64> {
    if phi.normalization != psi.normalization {
        return Err(CtError::Normalization(format!(
            "cannot pair {:?} with {:?} kets",
            phi.normalization, psi.normalization
        )));
    }
    if !phi.u.same_frame(&psi.u) {
        return Err(CtError::Frame("states live in different frames".into()));
    }
    if phi.spin != psi.spin || (phi.m - psi.m).abs() > 1e-12 * phi.m.max(psi.m) {
        return Err(CtError::Consistency("states carry different (m, s)".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for a in &phi.terms {
        for b in &psi.terms {
            if a.twice_lambda != b.twice_lambda || (a.kbreve - b.kbreve).amax() > tol {
                continue;
            }
            let weight = match phi.normalization {
                Normalization::Standard => 2.0 * dispersion_energy(&a.kbreve, &phi.u, phi.m).1,
                Normalization::Invariant => 2.0 * phi.u.u0(),
            };
            let vol = (a.delta_volume * b.delta_volume).sqrt();
            acc += a.amplitude.conj() * b.amplitude * (weight / vol);
        }
    }
    Ok(acc)
}

/// `exp(-i q.x(u))` with the time coordinate set to `t`.
pub fn translate_state(psi: &StateVector, qbreve: &Vector3<f64>, t: f64) -> StateVector {
    let mut out = psi.clone();
    for term in &mut out.terms {
        let q0 = q0_shift(&term.kbreve, qbreve, &psi.u, psi.m);
        let mut factor = Complex64::from_polar(1.0, q0 * t);
        if psi.normalization == Normalization::Standard {
            let before = uk(&term.kbreve, &psi.u, psi.m);
            let after = uk(&(term.kbreve + qbreve), &psi.u, psi.m);
            factor *= (before / after).sqrt();
        }
        term.amplitude *= factor;
        term.kbreve += qbreve;
    }
    out
}

/// Space block of `D^{-1}(L_u', u~) D(Lambda, u) D(L_u, u~)`.
pub fn wigner_rotation(lambda: &Matrix4<f64>, u: &FourVelocity) -> Result<Matrix3<f64>> {
    let d = FrameTransform::from_lorentz(lambda, u)?;
    wigner_from_transform(&d)
}

/// Wigner rotation of an already built `D(Lambda, u)`.
pub fn wigner_from_transform(d: &FrameTransform) -> Result<Matrix3<f64>> {
    let into = boost_to_frame(&d.source_u).matrix;
    let out_inv = boost_to_frame(&d.target_u)
        .matrix
        .try_inverse()
        .ok_or_else(|| CtError::Consistency("singular frame boost".into()))?;
    let w = out_inv * d.matrix * into;
    let block = w[(0, 0)] - 1.0;
    let mut off: f64 = block.abs();
    for i in 1..4 {
        off = off.max(w[(0, i)].abs()).max(w[(i, 0)].abs());
    }
    if !(off <= WIGNER_TOL) {
        return Err(CtError::Consistency(format!(
            "little-group product is not block diagonal (residual {off:e})"
        )));
    }
    let r = w.fixed_view::<3, 3>(1, 1).into_owned();
    lorentz::check_rotation(&r).map_err(|e| CtError::Consistency(e.to_string()))?;
    Ok(r)
}

/// Groups terms with identical labels, returning `(k, V, amplitudes by
/// basis index)`.
fn group_terms(psi: &StateVector) -> Vec<(Vector3<f64>, f64, Vec<Complex64>)> {
    let n = psi.spin.dim();
    let mut groups: Vec<(Vector3<f64>, f64, Vec<Complex64>)> = Vec::new();
    for t in &psi.terms {
        let idx = psi.spin.index_of(t.twice_lambda).expect("validated lambda");
        match groups.iter_mut().find(|g| g.0 == t.kbreve) {
            Some(g) => g.2[idx] += t.amplitude,
            None => {
                let mut amps = vec![Complex64::new(0.0, 0.0); n];
                amps[idx] = t.amplitude;
                groups.push((t.kbreve, t.delta_volume, amps));
            }
        }
    }
    groups
}

fn ungroup(spin: Spin, groups: Vec<(Vector3<f64>, f64, Vec<Complex64>)>) -> Vec<Term> {
    let mut terms = Vec::new();
    for (k, vol, amps) in groups {
        for (i, a) in amps.into_iter().enumerate() {
            if a != Complex64::new(0.0, 0.0) {
                terms.push(Term {
                    amplitude: a,
                    kbreve: k,
                    twice_lambda: spin.twice_lambda(i),
                    delta_volume: vol,
                });
            }
        }
    }
    terms
}

/// Applies `b = M a` to the spin amplitudes of every momentum label.
pub fn apply_spin_matrix(psi: &StateVector, m: &CMatrix) -> StateVector {
    let groups = group_terms(psi)
        .into_iter()
        .map(|(k, vol, amps)| {
            let a = nalgebra::DVector::from_vec(amps);
            (k, vol, (m * a).iter().copied().collect())
        })
        .collect();
    StateVector {
        terms: ungroup(psi.spin, groups),
        ..psi.clone()
    }
}

/// `S_ij(u) |k, lambda> = -S_{lambda sigma} |k, sigma>`.
pub fn spin_tensor_apply(psi: &StateVector, tensor: &SpinTensor, i: usize, j: usize) -> StateVector {
    let m = tensor.get(i, j).transpose() * Complex64::new(-1.0, 0.0);
    apply_spin_matrix(psi, &m)
}

/// `U(Lambda) psi`: momenta `k' = D^{T-1} k`, frame `u' = D u`, spin
/// indices mixed by the inverse rotation matrix of `R_{Lambda,u}`.
pub fn lorentz_action(lambda: &Matrix4<f64>, psi: &StateVector, rep: &SpinRepresentation) -> Result<StateVector> {
    if rep.spin != psi.spin {
        return Err(CtError::InvalidSpin(format!(
            "representation has spin {}, state has spin {}",
            rep.spin, psi.spin
        )));
    }
    let d = FrameTransform::from_lorentz(lambda, &psi.u)?;
    let r = wigner_from_transform(&d)?;
    let (axis, angle) = lorentz::rotation_axis_angle(&r)?;
    let dr = crate::spin::exp_rotation(rep, &axis, angle);
    // b_lambda = sum_sigma a_sigma (D^-1)_{sigma lambda} = conj(D) a
    let mix = dr.map(|c| c.conj());
    let cov = d.covariant_matrix();
    let u_ratio = d.target_u.u0() / psi.u.u0();
    let groups = group_terms(psi)
        .into_iter()
        .map(|(k, vol, amps)| {
            let kp = cov * covariant_momentum(&k, &psi.u, psi.m);
            let a = nalgebra::DVector::from_vec(amps);
            (
                Vector3::new(kp[1], kp[2], kp[3]),
                vol * u_ratio,
                (&mix * a).iter().copied().collect(),
            )
        })
        .collect();
    let out = StateVector {
        u: d.target_u,
        m: psi.m,
        spin: psi.spin,
        normalization: psi.normalization,
        terms: ungroup(psi.spin, groups),
    };
    Ok(out.merged(LABEL_TOL))
}

/// Ingredients that build `|k, u>` from the rest ket `|(m, 0), u~>`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisConstruction {
    /// `sqrt(uk / m)`
    pub amplitude_factor: f64,
    /// Standard matrix `L_u`.
    pub lorentz: Matrix4<f64>,
    /// `D(L_u, u~)`
    pub boost: FrameTransform,
    /// `k_mu - m u_mu`
    pub translation: Vector4<f64>,
}

pub fn basis_from_rest(kbreve: &Vector3<f64>, u: &FourVelocity, m: f64) -> Result<BasisConstruction> {
    check_mass(m)?;
    let k = covariant_momentum(kbreve, u, m);
    Ok(BasisConstruction {
        amplitude_factor: (uk(kbreve, u, m) / m).sqrt(),
        lorentz: lorentz::frame_boost(u),
        boost: boost_to_frame(u),
        translation: k - u.covariant() * m,
    })
}

impl BasisConstruction {
    /// Applies boost, translation and prefactor to the standard rest ket
    /// of index `lambda`.
    pub fn build(&self, m: f64, rep: &SpinRepresentation, twice_lambda: i32) -> Result<StateVector> {
        let rest = MomentumBasisState::new(
            Vector3::zeros(),
            FourVelocity::preferred(),
            m,
            rep.spin,
            twice_lambda,
            Normalization::Standard,
        )?;
        let boosted = lorentz_action(&self.lorentz, &StateVector::basis(&rest), rep)?;
        let q = Vector3::new(self.translation[1], self.translation[2], self.translation[3]);
        let mut out = translate_state(&boosted, &q, 0.0);
        for t in &mut out.terms {
            t.amplitude *= self.amplitude_factor;
        }
        Ok(out)
    }
}

/// Multiplies amplitudes by `sqrt(uk)` (standard to invariant) or divides
/// (invariant to standard); the physical state is unchanged.
pub fn rescale_normalization(psi: &StateVector, to: Normalization) -> StateVector {
    if psi.normalization == to {
        return psi.clone();
    }
    let mut out = psi.clone();
    out.normalization = to;
    for t in &mut out.terms {
        let s = uk(&t.kbreve, &psi.u, psi.m).sqrt();
        match to {
            Normalization::Invariant => t.amplitude *= s,
            Normalization::Standard => t.amplitude /= s,
        }
    }
    out
}
