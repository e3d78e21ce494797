//! Supplementary Hamiltonians for the two-level model.
//!
//! All supplements are written in the bare basis. The realizable ones have
//! the form `H₁ = ½[[δ₊, Ω], [Ω*, δ₋]]` with `Ω = Ω_R' + iΩ_a`; they are
//! chosen so that exactly one of the two non-adiabatic couplings of the
//! adiabatic-frame Hamiltonian vanishes, which keeps one modified eigenstate
//! `|φ±⟩ = f±|±⟩` free of leakage.
//!
//! With `D = δ₊ − δ₋` the blocked coupling vanishes iff
//!
//! ```text
//! D sin θ/2 − Ω_R' cos θ + κ i (Ω_a + ∂tθ) = 0
//! ```
//!
//! where `κ = +1` blocks `|φ₊⟩ → |φ₋⟩` (traps `|φ₊⟩`) and `κ = −1` blocks
//! `|φ₋⟩ → |φ₊⟩` (traps `|φ₋⟩`).

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;

use crate::biorthogonal::DerivativeScheme;
use crate::error::{Error, Result};
use crate::gauge::{frame_hamiltonian, rotations, GaugeFunctions};
use crate::grid::{cumulative_trapezoid, TimeGrid};
use crate::matrix::ComplexMatrix;
use crate::scalar::{c, imag_unit, is_finite, re, Real};
use crate::two_level::{hamiltonian, EigenvaluePath, MixingAnglePath, Pulse};

/// Threshold below which `Re sin θ` and `Im ∂tθ` count as vanishing.
pub const SINGULARITY_EPS: f64 = 1e-9;

/// Which modified eigenstate the supplement protects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrappedState {
    /// Block `|φ₊⟩ → |φ₋⟩`: a system prepared in `|φ₊⟩` stays there.
    #[default]
    Plus,
    /// Block `|φ₋⟩ → |φ₊⟩`: nullifies the (1,2) entry of the frame Hamiltonian.
    Minus,
}

impl TrappedState {
    pub fn kappa<T: Real>(self) -> T {
        match self {
            TrappedState::Plus => T::one(),
            TrappedState::Minus => -T::one(),
        }
    }

    /// Entry of the adiabatic-frame Hamiltonian that the supplement nullifies.
    pub fn blocked_entry(self) -> (usize, usize) {
        match self {
            TrappedState::Plus => (1, 0),
            TrappedState::Minus => (0, 1),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TrappedState::Plus => "plus",
            TrappedState::Minus => "minus",
        }
    }
}

/// Synthesis policy that produced a set of coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    NaiveCd,
    HermitianRealizable,
    GeneralFamily,
}

/// Mixing angle and its rate at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePoint<T> {
    pub t: T,
    pub theta: Complex<T>,
    pub dtheta: Complex<T>,
}

impl<T: Real> AnglePoint<T> {
    pub fn from_path(path: &MixingAnglePath<T>, k: usize) -> Self {
        Self { t: path.grid.time(k), theta: path.theta[k], dtheta: path.dtheta[k] }
    }
}

/// `Im ∂tθ / Re sin θ`, with the removable `0/0` at vanishing `Re sin θ`
/// and `Im ∂tθ` set to zero.
pub fn guarded_ratio<T: Real>(p: &AnglePoint<T>) -> Result<T> {
    let re_sin = p.theta.sin().re;
    let im_rate = p.dtheta.im;
    let eps = T::lit(SINGULARITY_EPS);
    if re_sin.abs() < eps {
        if im_rate.abs() < eps {
            return Ok(T::zero());
        }
        return Err(Error::SinThetaSingular {
            t: p.t.to_f64().unwrap_or(f64::NAN),
            re_sin: re_sin.to_f64().unwrap_or(f64::NAN),
            im_dtheta: im_rate.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(im_rate / re_sin)
}

/// Coefficients `δ±`, `Ω` of `½[[δ₊, Ω], [Ω*, δ₋]]` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoefficients<T> {
    pub delta_plus: Complex<T>,
    pub delta_minus: Complex<T>,
    pub omega: Complex<T>,
}

impl<T: Real> PointCoefficients<T> {
    fn split(difference: Complex<T>, omega: Complex<T>, common_shift: T) -> Self {
        let half = difference * T::lit(0.5);
        Self {
            delta_plus: half + re(common_shift),
            delta_minus: -half + re(common_shift),
            omega,
        }
    }

    pub fn matrix(&self) -> ComplexMatrix<T> {
        let half = T::lit(0.5);
        ComplexMatrix::from_fn(2, |r, col| {
            let entry = match (r, col) {
                (0, 0) => self.delta_plus,
                (0, 1) => self.omega,
                (1, 0) => self.omega.conj(),
                _ => self.delta_minus,
            };
            entry * half
        })
    }
}

/// Hermitian supplement with `Re Ω = 0`: `D = 2κ Im∂tθ / Re sinθ`,
/// `Ω_a = −Re ∂tθ − (Im∂tθ / Re sinθ) Im sinθ`.
pub fn hermitian_point<T: Real>(
    p: &AnglePoint<T>,
    trapped: TrappedState,
    common_shift: T,
) -> Result<PointCoefficients<T>> {
    let ratio = guarded_ratio(p)?;
    let difference = T::lit(2.0) * trapped.kappa::<T>() * ratio;
    let omega_a = -p.dtheta.re - ratio * p.theta.sin().im;
    Ok(PointCoefficients::split(re(difference), c(T::zero(), omega_a), common_shift))
}

/// Inputs of the general solution: the caller fixes `Im λ` (with
/// `λ = D sin θ / 2`) and `Re Ω`; `Re λ` and `Im Ω` follow from the
/// nullification condition.
pub type PointRule<T> = Arc<dyn Fn(&AnglePoint<T>) -> T + Send + Sync>;

#[derive(Clone)]
pub struct FamilyChoice<T> {
    pub im_lambda: PointRule<T>,
    pub re_omega: PointRule<T>,
    pub common_shift: T,
}

impl<T: std::fmt::Debug> std::fmt::Debug for FamilyChoice<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilyChoice").field("common_shift", &self.common_shift).finish_non_exhaustive()
    }
}

impl<T: Real> FamilyChoice<T> {
    /// `Ω = 0`: the blocked coupling is cancelled by the diagonal alone
    /// (`λ = −iκ ∂tθ`).
    pub fn zero_coupling(trapped: TrappedState) -> Self {
        let kappa = trapped.kappa::<T>();
        Self {
            im_lambda: Arc::new(move |p: &AnglePoint<T>| -kappa * p.dtheta.re),
            re_omega: Arc::new(|_: &AnglePoint<T>| T::zero()),
            common_shift: T::zero(),
        }
    }

    /// The member that coincides with the Hermitian supplement.
    pub fn hermitian(trapped: TrappedState) -> Self {
        let kappa = trapped.kappa::<T>();
        Self {
            im_lambda: Arc::new(move |p: &AnglePoint<T>| {
                let ratio = guarded_ratio(p).unwrap_or_else(|_| T::nan());
                kappa * ratio * p.theta.sin().im
            }),
            re_omega: Arc::new(|_: &AnglePoint<T>| T::zero()),
            common_shift: T::zero(),
        }
    }
}

pub fn general_point<T: Real>(
    p: &AnglePoint<T>,
    trapped: TrappedState,
    choice: &FamilyChoice<T>,
) -> Result<PointCoefficients<T>> {
    let kappa = trapped.kappa::<T>();
    let im_lambda = (choice.im_lambda)(p);
    let re_omega = (choice.re_omega)(p);
    if !(im_lambda.is_finite() && re_omega.is_finite()) {
        return Err(Error::InconsistentChoice {
            t: p.t.to_f64().unwrap_or(f64::NAN),
            reason: "lambda or Re[Omega] rule returned a non-finite value".into(),
        });
    }
    let zeta = p.theta.cos() * re_omega;
    let re_lambda = zeta.re + kappa * p.dtheta.im;
    let omega_a = -p.dtheta.re - kappa * (im_lambda - zeta.im);
    let sin = p.theta.sin();
    if sin.norm() < T::lit(SINGULARITY_EPS) {
        return Err(Error::InconsistentChoice {
            t: p.t.to_f64().unwrap_or(f64::NAN),
            reason: "sin(theta) vanishes, so delta_+ - delta_- is undetermined".into(),
        });
    }
    let difference = c(re_lambda, im_lambda) * T::lit(2.0) / sin;
    Ok(PointCoefficients::split(difference, c(re_omega, omega_a), choice.common_shift))
}

/// `(i/2)[[ε₊c² + ε₋s², (ε₊−ε₋) sinθ/2 − ∂tθ], [(ε₊−ε₋) sinθ/2 + ∂tθ, ε₊s² + ε₋c²]]`
/// with `c = cos θ/2`, `s = sin θ/2`: the full counterdiabatic term plus
/// optional diagonal frame terms `(i/2)ε±`.
pub fn naive_cd_point<T: Real>(
    p: &AnglePoint<T>,
    eps_plus: Complex<T>,
    eps_minus: Complex<T>,
) -> ComplexMatrix<T> {
    let half = T::lit(0.5);
    let (cs, sn) = ((p.theta * half).cos(), (p.theta * half).sin());
    let (c2, s2) = (cs * cs, sn * sn);
    let cross = (eps_plus - eps_minus) * p.theta.sin() * half;
    let pref = imag_unit::<T>() * half;
    ComplexMatrix::from_fn(2, |r, col| {
        let entry = match (r, col) {
            (0, 0) => eps_plus * c2 + eps_minus * s2,
            (0, 1) => cross - p.dtheta,
            (1, 0) => cross + p.dtheta,
            _ => eps_plus * s2 + eps_minus * c2,
        };
        pref * entry
    })
}

pub fn naive_cd<T: Real>(
    theta: &MixingAnglePath<T>,
    eps_plus: impl Fn(T) -> Complex<T>,
    eps_minus: impl Fn(T) -> Complex<T>,
) -> Vec<ComplexMatrix<T>> {
    (0..theta.grid.len())
        .map(|k| {
            let p = AnglePoint::from_path(theta, k);
            naive_cd_point(&p, eps_plus(p.t), eps_minus(p.t))
        })
        .collect()
}

/// Supplement coefficients sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplementCoefficients<T> {
    pub grid: TimeGrid<T>,
    pub delta_plus: Vec<Complex<T>>,
    pub delta_minus: Vec<Complex<T>>,
    pub omega: Vec<Complex<T>>,
    pub policy: Policy,
    pub trapped: TrappedState,
}

impl<T: Real> SupplementCoefficients<T> {
    fn collect(
        theta: &MixingAnglePath<T>,
        policy: Policy,
        trapped: TrappedState,
        point: impl Fn(&AnglePoint<T>) -> Result<PointCoefficients<T>>,
    ) -> Result<Self> {
        let n = theta.grid.len();
        let mut out = Self {
            grid: theta.grid,
            delta_plus: Vec::with_capacity(n),
            delta_minus: Vec::with_capacity(n),
            omega: Vec::with_capacity(n),
            policy,
            trapped,
        };
        for k in 0..n {
            let p = AnglePoint::from_path(theta, k);
            let pc = point(&p)?;
            if !(is_finite(pc.delta_plus) && is_finite(pc.delta_minus) && is_finite(pc.omega)) {
                return Err(Error::NonFinite(format!("supplement coefficients at t = {}", p.t)));
            }
            out.delta_plus.push(pc.delta_plus);
            out.delta_minus.push(pc.delta_minus);
            out.omega.push(pc.omega);
        }
        Ok(out)
    }

    pub fn point(&self, k: usize) -> PointCoefficients<T> {
        PointCoefficients {
            delta_plus: self.delta_plus[k],
            delta_minus: self.delta_minus[k],
            omega: self.omega[k],
        }
    }

    /// `max_k |δ₊ + δ₋|`, zero when the split is antisymmetric.
    pub fn asymmetry(&self) -> T {
        self.delta_plus
            .iter()
            .zip(&self.delta_minus)
            .fold(T::zero(), |m, (a, b)| m.max((a + b).norm()))
    }
}

pub fn hermitian_realizable<T: Real>(
    theta: &MixingAnglePath<T>,
    trapped: TrappedState,
    common_shift: T,
) -> Result<SupplementCoefficients<T>> {
    SupplementCoefficients::collect(theta, Policy::HermitianRealizable, trapped, |p| {
        hermitian_point(p, trapped, common_shift)
    })
}

pub fn general_family<T: Real>(
    theta: &MixingAnglePath<T>,
    trapped: TrappedState,
    choice: &FamilyChoice<T>,
) -> Result<SupplementCoefficients<T>> {
    SupplementCoefficients::collect(theta, Policy::GeneralFamily, trapped, |p| {
        general_point(p, trapped, choice)
    })
}

/// Preset of the general family with `Ω ≡ 0`.
pub fn zero_coupling<T: Real>(
    theta: &MixingAnglePath<T>,
    trapped: TrappedState,
) -> Result<SupplementCoefficients<T>> {
    general_family(theta, trapped, &FamilyChoice::zero_coupling(trapped))
}

/// `½[[δ₊, Ω], [Ω*, δ₋]]` at grid index `k`.
pub fn assemble_h1<T: Real>(coeffs: &SupplementCoefficients<T>, k: usize) -> Result<ComplexMatrix<T>> {
    coeffs.grid.check_index(k)?;
    Ok(coeffs.point(k).matrix())
}

/// `D sinθ/2 − Re Ω cosθ + κ i (Im Ω + ∂tθ)` for one sample.
pub fn residual_point<T: Real>(p: &AnglePoint<T>, pc: &PointCoefficients<T>, trapped: TrappedState) -> Complex<T> {
    let half = T::lit(0.5);
    let kappa = trapped.kappa::<T>();
    let difference = pc.delta_plus - pc.delta_minus;
    difference * p.theta.sin() * half - p.theta.cos() * pc.omega.re
        + imag_unit::<T>() * (re(pc.omega.im) + p.dtheta) * kappa
}

/// Algebraic nullification residual on every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct NullificationReport<T> {
    pub grid: TimeGrid<T>,
    pub residual: Vec<Complex<T>>,
    pub max_abs_residual: T,
}

pub fn nullification_residual<T: Real>(
    theta: &MixingAnglePath<T>,
    coeffs: &SupplementCoefficients<T>,
) -> Result<NullificationReport<T>> {
    if theta.grid != coeffs.grid {
        return Err(Error::GridMismatch("mixing angle and coefficients".into()));
    }
    let residual: Vec<_> = (0..theta.grid.len())
        .map(|k| residual_point(&AnglePoint::from_path(theta, k), &coeffs.point(k), coeffs.trapped))
        .collect();
    let max_abs_residual = residual.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    Ok(NullificationReport { grid: theta.grid, residual, max_abs_residual })
}

/// Couplings of `R̃†(H₀ + H₁)R − iR̃†∂tR` with `∂tR` by finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameCouplings<T> {
    /// Largest modulus of the nullified entry.
    pub max_blocked: T,
    /// Largest modulus of the other off-diagonal entry (not required to vanish).
    pub max_other: T,
}

pub fn frame_couplings<T: Real>(
    pulse: &dyn Pulse<T>,
    theta: &MixingAnglePath<T>,
    gauges: &GaugeFunctions<T>,
    coeffs: &SupplementCoefficients<T>,
    scheme: DerivativeScheme,
) -> Result<FrameCouplings<T>> {
    if theta.grid != coeffs.grid || theta.grid != gauges.grid {
        return Err(Error::GridMismatch("mixing angle, gauges and coefficients".into()));
    }
    let rots = rotations(theta, gauges)?;
    let (r, col) = coeffs.trapped.blocked_entry();
    let mut out = FrameCouplings { max_blocked: T::zero(), max_other: T::zero() };
    let reach = scheme.reach();
    for k in reach..theta.grid.len() - reach {
        let h = &hamiltonian(pulse, theta.grid.time(k))? + &assemble_h1(coeffs, k)?;
        let frame = frame_hamiltonian(&h, &rots, &theta.grid, k, scheme)?;
        out.max_blocked = out.max_blocked.max(frame[(r, col)].norm());
        out.max_other = out.max_other.max(frame[(col, r)].norm());
    }
    Ok(out)
}

/// `g₊(t) = exp[−i ∫ (E₊ − i ∂tf₊/f₊ + H₁ᵉ₁₁)]`, the amplitude of the
/// trapped state when `δ₊ = −δ₋`. `H₁ᵉ₁₁ = δ cosθ/2 + Re Ω sinθ/2`.
pub fn closed_form_gplus<T: Real>(
    eigs: &EigenvaluePath<T>,
    gauges: &GaugeFunctions<T>,
    coeffs: &SupplementCoefficients<T>,
    theta: &MixingAnglePath<T>,
) -> Result<Vec<Complex<T>>> {
    if eigs.grid != gauges.grid || eigs.grid != coeffs.grid || eigs.grid != theta.grid {
        return Err(Error::GridMismatch("closed-form inputs".into()));
    }
    let scale = coeffs
        .delta_plus
        .iter()
        .fold(T::one(), |m, d| m.max(d.norm()));
    if coeffs.asymmetry() > T::lit(1e-12) * scale {
        return Err(Error::PolicyMismatch(format!(
            "closed form needs delta_+ = -delta_-, max |delta_+ + delta_-| = {:e}",
            coeffs.asymmetry()
        )));
    }
    let half = T::lit(0.5);
    let i = imag_unit::<T>();
    let integrand: Vec<Complex<T>> = (0..eigs.grid.len())
        .map(|k| {
            let th = theta.theta[k];
            eigs.e_plus[k] - i * gauges.rate_plus[k]
                + coeffs.delta_plus[k] * th.cos() * half
                + th.sin() * coeffs.omega[k].re * half
        })
        .collect();
    let phase = cumulative_trapezoid(&integrand, eigs.grid.step());
    let out: Vec<_> = phase.into_iter().map(|z| (-i * z).exp()).collect();
    if out.iter().any(|z| !is_finite(*z)) {
        return Err(Error::NonFinite("closed-form g_+".into()));
    }
    Ok(out)
}

/// Rule for evaluating the supplement at an arbitrary time.
#[derive(Clone, Debug, Default)]
pub enum SupplementRule<T> {
    /// No supplement: bare `H₀` dynamics.
    #[default]
    None,
    /// Full counterdiabatic term (not Hermitian when `γ > 0`).
    NaiveCd,
    HermitianRealizable { common_shift: T },
    GeneralFamily(FamilyChoice<T>),
}

impl<T: Real> SupplementRule<T> {
    pub fn zero_coupling(trapped: TrappedState) -> Self {
        SupplementRule::GeneralFamily(FamilyChoice::zero_coupling(trapped))
    }

    pub fn label(&self) -> &'static str {
        match self {
            SupplementRule::None => "none",
            SupplementRule::NaiveCd => "naive_cd",
            SupplementRule::HermitianRealizable { .. } => "hermitian",
            SupplementRule::GeneralFamily(_) => "general_family",
        }
    }

    /// `H₁` at one instant.
    pub fn matrix(&self, p: &AnglePoint<T>, trapped: TrappedState) -> Result<ComplexMatrix<T>> {
        Ok(match self {
            SupplementRule::None => ComplexMatrix::zeros(2),
            SupplementRule::NaiveCd => naive_cd_point(p, Complex::zero(), Complex::zero()),
            SupplementRule::HermitianRealizable { common_shift } => {
                hermitian_point(p, trapped, *common_shift)?.matrix()
            }
            SupplementRule::GeneralFamily(choice) => general_point(p, trapped, choice)?.matrix(),
        })
    }

    /// Coefficients on the grid, for the rules that have the `δ±, Ω` form.
    pub fn coefficients(
        &self,
        theta: &MixingAnglePath<T>,
        trapped: TrappedState,
    ) -> Result<Option<SupplementCoefficients<T>>> {
        Ok(match self {
            SupplementRule::None | SupplementRule::NaiveCd => None,
            SupplementRule::HermitianRealizable { common_shift } => {
                Some(hermitian_realizable(theta, trapped, *common_shift)?)
            }
            SupplementRule::GeneralFamily(choice) => Some(general_family(theta, trapped, choice)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::gauge_shortcut;
    use crate::two_level::{eigenvalue_path, mixing_angle_path, AllenEberly, AllenEberlyParams};
    use num_complex::Complex64 as C;

    fn setup(gamma: f64, steps: usize) -> (AllenEberly<f64>, MixingAnglePath<f64>) {
        let pulse = AllenEberly::new(AllenEberlyParams::standard(gamma)).unwrap();
        let grid = pulse.params().grid(steps).unwrap();
        let theta = mixing_angle_path(&pulse, &grid).unwrap();
        (pulse, theta)
    }

    fn point(theta: C, dtheta: C) -> AnglePoint<f64> {
        AnglePoint { t: 0.0, theta, dtheta }
    }

    #[test]
    fn hermitian_limit_is_standard_counterdiabatic() {
        let p = point(C::new(0.7, 0.0), C::new(1.3, 0.0));
        for trapped in [TrappedState::Plus, TrappedState::Minus] {
            let pc = hermitian_point(&p, trapped, 0.0).unwrap();
            assert_eq!(pc.delta_plus, C::new(0.0, 0.0));
            assert_eq!(pc.omega, C::new(0.0, -1.3));
            let h = pc.matrix();
            assert!(h.max_abs_diff(&naive_cd_point(&p, C::new(0.0, 0.0), C::new(0.0, 0.0))) < 1e-15);
        }
    }

    #[test]
    fn frozen_pulse_needs_no_supplement() {
        let p = point(C::new(0.7, 0.2), C::new(0.0, 0.0));
        let pc = hermitian_point(&p, TrappedState::Plus, 0.0).unwrap();
        assert_eq!(pc.matrix().max_abs(), 0.0);
    }

    #[test]
    fn singularity_guard() {
        let removable = point(C::new(0.0, 0.3), C::new(0.5, 1e-12));
        assert_eq!(guarded_ratio(&removable).unwrap(), 0.0);
        let bad = point(C::new(0.0, 0.3), C::new(0.5, 1e-3));
        assert!(matches!(guarded_ratio(&bad), Err(Error::SinThetaSingular { .. })));
    }

    #[test]
    fn residual_vanishes_for_each_policy() {
        for gamma in [0.1, 0.3, 1.0] {
            let (_, theta) = setup(gamma, 2000);
            for trapped in [TrappedState::Plus, TrappedState::Minus] {
                let sets = [
                    hermitian_realizable(&theta, trapped, 0.0).unwrap(),
                    zero_coupling(&theta, trapped).unwrap(),
                    general_family(&theta, trapped, &FamilyChoice::hermitian(trapped)).unwrap(),
                ];
                for coeffs in &sets {
                    let rep = nullification_residual(&theta, coeffs).unwrap();
                    assert!(rep.max_abs_residual <= 1e-10, "{gamma} {trapped:?} {:?}", coeffs.policy);
                }
            }
        }
    }

    #[test]
    fn zero_coupling_has_no_off_diagonal() {
        let (_, theta) = setup(0.3, 400);
        let coeffs = zero_coupling(&theta, TrappedState::Plus).unwrap();
        assert!(coeffs.omega.iter().all(|w| w.norm() < 1e-15));
    }

    #[test]
    fn general_family_reproduces_hermitian_member() {
        let (_, theta) = setup(1.0, 400);
        let herm = hermitian_realizable(&theta, TrappedState::Plus, 0.0).unwrap();
        let gen = general_family(&theta, TrappedState::Plus, &FamilyChoice::hermitian(TrappedState::Plus)).unwrap();
        for k in 0..=400 {
            assert!((herm.delta_plus[k] - gen.delta_plus[k]).norm() < 1e-10);
            assert!((herm.omega[k] - gen.omega[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn general_family_hermitian_cd_limit() {
        let p = point(C::new(0.9, 0.0), C::new(2.0, 0.0));
        let choice = FamilyChoice {
            im_lambda: Arc::new(|_: &AnglePoint<f64>| 0.0),
            re_omega: Arc::new(|_: &AnglePoint<f64>| 0.0),
            common_shift: 0.0,
        };
        let pc = general_point(&p, TrappedState::Minus, &choice).unwrap();
        assert!((pc.omega - C::new(0.0, -2.0)).norm() < 1e-15);
        let at_zero = point(C::new(0.0, 0.0), C::new(1.0, 0.0));
        assert!(matches!(
            general_point(&at_zero, TrappedState::Plus, &choice),
            Err(Error::InconsistentChoice { .. })
        ));
    }

    #[test]
    fn assembled_supplement_is_hermitian() {
        let (_, theta) = setup(1.0, 400);
        let coeffs = hermitian_realizable(&theta, TrappedState::Plus, 0.0).unwrap();
        for k in 0..=400 {
            let h = assemble_h1(&coeffs, k).unwrap();
            assert_eq!(h, h.adjoint());
        }
        let k = 200;
        let d = coeffs.delta_plus[k].re;
        let wa = coeffs.omega[k].im;
        let want = ComplexMatrix::from_rows([
            [C::new(d / 2.0, 0.0), C::new(0.0, wa / 2.0)],
            [C::new(0.0, -wa / 2.0), C::new(-d / 2.0, 0.0)],
        ])
        .unwrap();
        assert!(assemble_h1(&coeffs, k).unwrap().max_abs_diff(&want) < 1e-15);
        assert!(assemble_h1(&coeffs, 401).is_err());
    }

    #[test]
    fn zero_coefficients_leave_the_rate() {
        let (_, theta) = setup(0.3, 400);
        let mut coeffs = hermitian_realizable(&theta, TrappedState::Minus, 0.0).unwrap();
        for v in [&mut coeffs.delta_plus, &mut coeffs.delta_minus, &mut coeffs.omega] {
            v.iter_mut().for_each(|z| *z = C::new(0.0, 0.0));
        }
        let rep = nullification_residual(&theta, &coeffs).unwrap();
        for k in 0..=400 {
            assert!((rep.residual[k] + C::new(0.0, 1.0) * theta.dtheta[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn naive_cd_is_non_hermitian_with_dissipation() {
        let (_, herm) = setup(0.0, 400);
        let (_, lossy) = setup(0.3, 400);
        let zero = |_: f64| C::new(0.0, 0.0);
        assert!(naive_cd(&herm, zero, zero).iter().all(|m| m.hermiticity_defect() < 1e-12));
        assert!(naive_cd(&lossy, zero, zero)[100].hermiticity_defect() > 1e-3);
    }

    #[test]
    fn frame_check_blocks_the_chosen_entry() {
        for trapped in [TrappedState::Plus, TrappedState::Minus] {
            let (pulse, theta) = setup(0.3, 4000);
            let eigs = eigenvalue_path(&pulse, &theta.grid).unwrap();
            let gauges = gauge_shortcut(&eigs, &theta, trapped).unwrap();
            let coeffs = hermitian_realizable(&theta, trapped, 0.0).unwrap();
            let fc = frame_couplings(&pulse, &theta, &gauges, &coeffs, DerivativeScheme::Richardson).unwrap();
            assert!(fc.max_blocked < 1e-6, "{trapped:?}: {}", fc.max_blocked);
            assert!(fc.max_other > 1e-2);
        }
    }

    #[test]
    fn closed_form_requires_antisymmetric_split() {
        let (pulse, theta) = setup(0.3, 400);
        let eigs = eigenvalue_path(&pulse, &theta.grid).unwrap();
        let gauges = gauge_shortcut(&eigs, &theta, TrappedState::Plus).unwrap();
        let shifted = hermitian_realizable(&theta, TrappedState::Plus, 0.5).unwrap();
        assert!(matches!(
            closed_form_gplus(&eigs, &gauges, &shifted, &theta),
            Err(Error::PolicyMismatch(_))
        ));
        let coeffs = hermitian_realizable(&theta, TrappedState::Plus, 0.0).unwrap();
        let g = closed_form_gplus(&eigs, &gauges, &coeffs, &theta).unwrap();
        assert!(g.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }
}
