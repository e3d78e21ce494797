//! Gauge functions `f±(t)` that rescale the two-level eigenvectors
//! (`|φ±⟩ = f±|±⟩`), the frame rotations they define, and the
//! adiabatic-frame Hamiltonian.
//!
//! Every gauge is stored together with its logarithmic rate `∂tf/f`, taken
//! from the defining integrand so that frame Hamiltonians never need to
//! differentiate sampled gauges.

use num_complex::Complex;
use num_traits::Zero;

use crate::biorthogonal::DerivativeScheme;
use crate::error::{Error, Result};
use crate::grid::{cumulative_trapezoid, TimeGrid};
use crate::matrix::ComplexMatrix;
use crate::scalar::{c, imag_unit, is_finite, Real};
use crate::synthesis::{guarded_ratio, AnglePoint, TrappedState};
use crate::two_level::{EigenvaluePath, MixingAnglePath};

/// How the gauge rates were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeKind {
    /// `∂tf/f = Im E + i h(t)`.
    Simple,
    /// `f₊` chosen so that the trapped amplitude keeps unit modulus under the
    /// Hermitian supplement; `f₋` simple.
    ShortcutMatched(TrappedState),
}

/// Gauge samples `f±(t_k)` and their rates `∂tf±/f±`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFunctions<T> {
    pub grid: TimeGrid<T>,
    pub f_plus: Vec<Complex<T>>,
    pub f_minus: Vec<Complex<T>>,
    pub rate_plus: Vec<Complex<T>>,
    pub rate_minus: Vec<Complex<T>>,
    pub kind: GaugeKind,
}

impl<T: Real> GaugeFunctions<T> {
    fn from_rates(grid: TimeGrid<T>, rate_plus: Vec<Complex<T>>, rate_minus: Vec<Complex<T>>, kind: GaugeKind) -> Result<Self> {
        if rate_plus.iter().chain(&rate_minus).any(|z| !is_finite(*z)) {
            return Err(Error::NonFinite("gauge integrand".into()));
        }
        let integrate = |rates: &[Complex<T>]| -> Result<Vec<Complex<T>>> {
            let f: Vec<_> = cumulative_trapezoid(rates, grid.step()).into_iter().map(|z| z.exp()).collect();
            if let Some(k) = f.iter().position(|z| z.is_zero()) {
                return Err(Error::ZeroGauge(k));
            }
            if f.iter().any(|z| !is_finite(*z)) {
                return Err(Error::NonFinite("gauge function overflow".into()));
            }
            Ok(f)
        };
        Ok(Self {
            grid,
            f_plus: integrate(&rate_plus)?,
            f_minus: integrate(&rate_minus)?,
            rate_plus,
            rate_minus,
            kind,
        })
    }

    /// `(f₊, f₋)` at grid index `k`.
    pub fn at(&self, k: usize) -> (Complex<T>, Complex<T>) {
        (self.f_plus[k], self.f_minus[k])
    }
}

/// `f±(t) = exp ∫_{t₀}^t (Im E± + i h±) dt'` by cumulative trapezoid.
pub fn gauge_simple<T: Real>(
    eigs: &EigenvaluePath<T>,
    h_plus: impl Fn(T) -> T,
    h_minus: impl Fn(T) -> T,
) -> Result<GaugeFunctions<T>> {
    let grid = eigs.grid;
    let rate = |e: &[Complex<T>], h: &dyn Fn(T) -> T| -> Vec<Complex<T>> {
        grid.times().zip(e).map(|(t, e)| c(e.im, h(t))).collect()
    };
    GaugeFunctions::from_rates(grid, rate(&eigs.e_plus, &h_plus), rate(&eigs.e_minus, &h_minus), GaugeKind::Simple)
}

/// Simple gauge with `h± = 0` (real positive `f±`).
pub fn gauge_simple_real<T: Real>(eigs: &EigenvaluePath<T>) -> Result<GaugeFunctions<T>> {
    gauge_simple(eigs, |_| T::zero(), |_| T::zero())
}

/// Rate of the shortcut-matched `f₊`: `Im[E₊ + δ cos θ/2]` with
/// `δ = κ Im∂tθ / Re sinθ` the half-difference of the Hermitian supplement.
pub fn shortcut_rate<T: Real>(e_plus: Complex<T>, p: &AnglePoint<T>, trapped: TrappedState) -> Result<T> {
    let delta = trapped.kappa::<T>() * guarded_ratio(p)?;
    Ok(e_plus.im + delta * p.theta.cos().im * T::lit(0.5))
}

pub fn gauge_shortcut<T: Real>(
    eigs: &EigenvaluePath<T>,
    theta: &MixingAnglePath<T>,
    trapped: TrappedState,
) -> Result<GaugeFunctions<T>> {
    if eigs.grid != theta.grid {
        return Err(Error::GridMismatch("eigenvalues and mixing angle".into()));
    }
    let rate_plus = (0..theta.grid.len())
        .map(|k| shortcut_rate(eigs.e_plus[k], &AnglePoint::from_path(theta, k), trapped).map(|r| c(r, T::zero())))
        .collect::<Result<Vec<_>>>()?;
    let rate_minus = eigs.e_minus.iter().map(|e| c(e.im, T::zero())).collect();
    GaugeFunctions::from_rates(theta.grid, rate_plus, rate_minus, GaugeKind::ShortcutMatched(trapped))
}

/// `R` (columns `|φ±⟩`) and `R̃` (columns `|φ̃±⟩ = |±̃⟩/f±*`).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRotation<T> {
    pub r: ComplexMatrix<T>,
    pub r_tilde: ComplexMatrix<T>,
}

impl<T: Real> FrameRotation<T> {
    /// `max |R̃†R − I|`.
    pub fn inverse_defect(&self) -> T {
        (&self.r_tilde.adjoint() * &self.r).max_abs_diff(&ComplexMatrix::identity(2))
    }
}

pub fn rotation<T: Real>(theta: Complex<T>, f: (Complex<T>, Complex<T>)) -> Result<FrameRotation<T>> {
    let (fp, fm) = f;
    if fp.is_zero() {
        return Err(Error::ZeroGauge(0));
    }
    if fm.is_zero() {
        return Err(Error::ZeroGauge(1));
    }
    let half = T::lit(0.5);
    let (cs, sn) = ((theta * half).cos(), (theta * half).sin());
    let (lc, ls) = ((theta.conj() * half).cos(), (theta.conj() * half).sin());
    let (ip, im) = (fp.conj().inv(), fm.conj().inv());
    Ok(FrameRotation {
        r: ComplexMatrix::from_fn(2, |r, col| match (r, col) {
            (0, 0) => fp * cs,
            (0, 1) => fm * sn,
            (1, 0) => fp * sn,
            _ => -fm * cs,
        }),
        r_tilde: ComplexMatrix::from_fn(2, |r, col| match (r, col) {
            (0, 0) => lc * ip,
            (0, 1) => ls * im,
            (1, 0) => ls * ip,
            _ => -lc * im,
        }),
    })
}

/// Rotations at every grid point.
pub fn rotations<T: Real>(theta: &MixingAnglePath<T>, gauges: &GaugeFunctions<T>) -> Result<Vec<FrameRotation<T>>> {
    if theta.grid != gauges.grid {
        return Err(Error::GridMismatch("mixing angle and gauges".into()));
    }
    (0..theta.grid.len())
        .map(|k| {
            rotation(theta.theta[k], gauges.at(k)).map_err(|e| match e {
                Error::ZeroGauge(_) => Error::ZeroGauge(k),
                other => other,
            })
        })
        .collect()
}

/// `R̃†HR − iR̃†∂tR` at grid index `k`, with `∂tR` by finite differences of
/// the sampled rotations.
pub fn frame_hamiltonian<T: Real>(
    h: &ComplexMatrix<T>,
    rots: &[FrameRotation<T>],
    grid: &TimeGrid<T>,
    k: usize,
    scheme: DerivativeScheme,
) -> Result<ComplexMatrix<T>> {
    grid.check_len(rots.len(), "rotations")?;
    grid.check_index(k)?;
    scheme.check(grid, k)?;
    let dr = scheme.apply(grid.step(), k, |j| MatOps(rots[j].r.clone())).0;
    let adj = rots[k].r_tilde.adjoint();
    let rotated = &(&adj * h) * &rots[k].r;
    Ok(&rotated - &(&adj * &dr).scale(imag_unit()))
}

#[derive(Clone)]
struct MatOps<T>(ComplexMatrix<T>);

impl<T: Real> std::ops::Sub for MatOps<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        MatOps(&self.0 - &rhs.0)
    }
}

impl<T: Real> std::ops::Mul<T> for MatOps<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        MatOps(self.0.scale(c(s, T::zero())))
    }
}

/// `diag(E₊, E₋) − i[[∂tf₊/f₊, ∂tθ f₋/(2f₊)], [−∂tθ f₊/(2f₋), ∂tf₋/f₋]]`
/// at grid index `k`, using the stored gauge rates.
pub fn adiabatic_frame_h0<T: Real>(
    eigs: &EigenvaluePath<T>,
    theta: &MixingAnglePath<T>,
    gauges: &GaugeFunctions<T>,
    k: usize,
) -> Result<ComplexMatrix<T>> {
    if eigs.grid != theta.grid || eigs.grid != gauges.grid {
        return Err(Error::GridMismatch("eigenvalues, mixing angle and gauges".into()));
    }
    eigs.grid.check_index(k)?;
    let (fp, fm) = gauges.at(k);
    if fp.is_zero() || fm.is_zero() {
        return Err(Error::ZeroGauge(k));
    }
    let i = imag_unit::<T>();
    let half = T::lit(0.5);
    let dth = theta.dtheta[k];
    Ok(ComplexMatrix::from_fn(2, |r, col| match (r, col) {
        (0, 0) => eigs.e_plus[k] - i * gauges.rate_plus[k],
        (0, 1) => -i * dth * fm / fp * half,
        (1, 0) => i * dth * fp / fm * half,
        _ => eigs.e_minus[k] - i * gauges.rate_minus[k],
    }))
}
