//! The dissipative two-level model: Hamiltonian, branch-tracked eigenvalues,
//! the complex mixing angle and its eigenvectors, and the pulse families
//! that drive it.
//!
//! The Hamiltonian (ħ = 1) in the bare basis `|0⟩ = [1, 0]`, `|1⟩ = [0, 1]` is
//!
//! ```text
//! H₀ = ½ [[−Δ, Ω_R], [Ω_R, Δ − iγ]]
//! ```
//!
//! with eigenvalues `E± = (−iγ ± √Z)/4`, `Z = −(γ + 2iΔ)² + 4Ω_R²`. The right
//! eigenvectors are `|+⟩ = [cos θ/2, sin θ/2]`, `|−⟩ = [sin θ/2, −cos θ/2]`,
//! which requires `tan θ = Ω_R / (iγ/2 − Δ)`.

use num_complex::Complex;

use crate::biorthogonal::{BiorthogonalSystem, DEFAULT_DEGENERACY_THRESHOLD};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::matrix::{ComplexMatrix, ComplexVector};
use crate::scalar::{c, imag_unit, is_finite, re, Real};

/// Separation below which `γ = 2Ω₀` is treated as the exceptional point.
pub const REGIME_TOLERANCE: f64 = 1e-12;

/// Smallest admissible `|(iγ/2 − Δ)² + Ω_R²|` in the mixing-angle formula.
pub const TAN_POLE_TOLERANCE: f64 = 1e-14;

/// Instantaneous control values (units of 1/τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls<T> {
    pub omega_r: T,
    pub delta: T,
    pub gamma: T,
}

impl<T: Real> Controls<T> {
    pub fn new(omega_r: T, delta: T, gamma: T) -> Self {
        Self { omega_r, delta, gamma }
    }

    fn check(&self, t: T) -> Result<()> {
        if !(self.omega_r.is_finite() && self.delta.is_finite() && self.gamma.is_finite()) {
            return Err(Error::NonFinite(format!("pulse controls at t = {t}")));
        }
        if self.gamma < T::zero() {
            return Err(Error::InvalidParams(format!("decay rate {} < 0 at t = {t}", self.gamma)));
        }
        Ok(())
    }
}

/// Time derivatives of the controls (units of 1/τ²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlRates<T> {
    pub d_omega_r: T,
    pub d_delta: T,
    pub d_gamma: T,
}

/// Where control derivatives come from; recorded on every derived path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    Analytic,
    /// Central differences of the controls.
    Numeric,
}

/// A time-dependent drive `Ω_R(t)`, `Δ(t)`, `γ(t)`.
pub trait Pulse<T: Real>: Send + Sync {
    fn controls(&self, t: T) -> Controls<T>;

    /// Analytic derivatives, if the pulse has them.
    fn rates(&self, _t: T) -> Option<ControlRates<T>> {
        None
    }

    /// Peak Rabi frequency and decay rate `(Ω₀, γ)` that decide the branch
    /// regime of the whole pulse.
    fn reference_amplitudes(&self) -> (T, T);

    /// Natural time window of the pulse, if it has one.
    fn window(&self) -> Option<(T, T)> {
        None
    }
}

/// Control derivatives, analytic when available, else central differences.
pub fn control_rates<T: Real>(pulse: &dyn Pulse<T>, t: T) -> (ControlRates<T>, DerivativeSource) {
    if let Some(r) = pulse.rates(t) {
        return (r, DerivativeSource::Analytic);
    }
    let h = T::epsilon().cbrt() * T::one().max(t.abs());
    let (a, b) = (pulse.controls(t + h), pulse.controls(t - h));
    let two_h = h + h;
    (
        ControlRates {
            d_omega_r: (a.omega_r - b.omega_r) / two_h,
            d_delta: (a.delta - b.delta) / two_h,
            d_gamma: (a.gamma - b.gamma) / two_h,
        },
        DerivativeSource::Numeric,
    )
}

/// Parameters of the Allen-Eberly pulse `Ω_R = Ω₀ sech(t/τ)`, `Δ = Δ₀ tanh(t/τ)`
/// with a constant decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllenEberlyParams<T> {
    pub omega0: T,
    pub delta0: T,
    pub tau: T,
    pub gamma: T,
    pub t0: T,
    pub t_f: T,
}

impl<T: Real> AllenEberlyParams<T> {
    /// `Ω₀ = 1/τ`, `Δ₀ = 9/τ`, window `[−τ, τ]` with the given decay rate.
    pub fn standard(gamma: T) -> Self {
        Self {
            omega0: T::one(),
            delta0: T::lit(9.0),
            tau: T::one(),
            gamma,
            t0: -T::one(),
            t_f: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega0, self.delta0, self.tau, self.gamma, self.t0, self.t_f];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Allen-Eberly parameters".into()));
        }
        if self.omega0 <= T::zero() || self.tau <= T::zero() {
            return Err(Error::InvalidParams("omega0 and tau must be positive".into()));
        }
        if self.gamma < T::zero() {
            return Err(Error::InvalidParams("gamma must be non-negative".into()));
        }
        if self.t0 >= self.t_f {
            return Err(Error::InvalidParams(format!("t0 = {} must be below t_f = {}", self.t0, self.t_f)));
        }
        classify_regime(self.omega0, self.gamma).map(|_| ())
    }

    pub fn grid(&self, steps: usize) -> Result<TimeGrid<T>> {
        TimeGrid::new(self.t0, self.t_f, steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllenEberly<T> {
    params: AllenEberlyParams<T>,
}

impl<T: Real> AllenEberly<T> {
    pub fn new(params: AllenEberlyParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &AllenEberlyParams<T> {
        &self.params
    }
}

impl<T: Real> Pulse<T> for AllenEberly<T> {
    fn controls(&self, t: T) -> Controls<T> {
        let p = &self.params;
        let x = t / p.tau;
        Controls::new(p.omega0 / x.cosh(), p.delta0 * x.tanh(), p.gamma)
    }

    fn rates(&self, t: T) -> Option<ControlRates<T>> {
        let p = &self.params;
        let x = t / p.tau;
        let sech = T::one() / x.cosh();
        Some(ControlRates {
            d_omega_r: -(p.omega0 / p.tau) * sech * x.tanh(),
            d_delta: (p.delta0 / p.tau) * sech * sech,
            d_gamma: T::zero(),
        })
    }

    fn reference_amplitudes(&self) -> (T, T) {
        (self.params.omega0, self.params.gamma)
    }

    fn window(&self) -> Option<(T, T)> {
        Some((self.params.t0, self.params.t_f))
    }
}

/// Time-independent controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPulse<T>(pub Controls<T>);

impl<T: Real> Pulse<T> for ConstantPulse<T> {
    fn controls(&self, _t: T) -> Controls<T> {
        self.0
    }

    fn rates(&self, _t: T) -> Option<ControlRates<T>> {
        Some(ControlRates { d_omega_r: T::zero(), d_delta: T::zero(), d_gamma: T::zero() })
    }

    fn reference_amplitudes(&self) -> (T, T) {
        (self.0.omega_r, self.0.gamma)
    }
}

/// Piecewise-linear pulse through tabulated `(t, Ω_R, Δ)` knots with a
/// constant decay rate. Derivatives are numeric; outside the table the end
/// values are held.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPulse<T> {
    times: Vec<T>,
    omega_r: Vec<T>,
    delta: Vec<T>,
    gamma: T,
}

impl<T: Real> TabulatedPulse<T> {
    pub fn new(times: Vec<T>, omega_r: Vec<T>, delta: Vec<T>, gamma: T) -> Result<Self> {
        if times.len() < 2 || omega_r.len() != times.len() || delta.len() != times.len() {
            return Err(Error::InvalidParams(
                "tabulated pulse needs at least two knots and equal column lengths".into(),
            ));
        }
        if times.iter().chain(&omega_r).chain(&delta).chain([&gamma]).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("tabulated pulse values".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("knot times must be strictly increasing".into()));
        }
        if omega_r.iter().any(|&w| w < T::zero()) || gamma < T::zero() {
            return Err(Error::InvalidParams("Rabi frequency and decay rate must be non-negative".into()));
        }
        let peak = omega_r.iter().fold(T::zero(), |m, &w| m.max(w));
        if peak <= T::zero() {
            return Err(Error::InvalidParams("Rabi frequency vanishes everywhere".into()));
        }
        classify_regime(peak, gamma)?;
        Ok(Self { times, omega_r, delta, gamma })
    }

    /// Parses comma-separated `t, omega_r, delta` rows. Blank lines, lines
    /// starting with `#`, and a non-numeric header line are skipped.
    pub fn parse_csv(text: &str, gamma: T) -> Result<Self> {
        let (mut times, mut omega, mut delta) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::InvalidParams(format!(
                    "line {}: expected 3 columns (t, omega_r, delta), found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) => {
                    times.push(T::lit(v[0]));
                    omega.push(T::lit(v[1]));
                    delta.push(T::lit(v[2]));
                }
                Err(_) if times.is_empty() => continue,
                Err(e) => {
                    return Err(Error::InvalidParams(format!("line {}: {e}", lineno + 1)));
                }
            }
        }
        Self::new(times, omega, delta, gamma)
    }

    fn interpolate(&self, values: &[T], t: T) -> T {
        let n = self.times.len();
        if t <= self.times[0] {
            return values[0];
        }
        if t >= self.times[n - 1] {
            return values[n - 1];
        }
        let hi = self.times.partition_point(|&x| x <= t);
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        values[lo] + (values[hi] - values[lo]) * w
    }
}

impl<T: Real> Pulse<T> for TabulatedPulse<T> {
    fn controls(&self, t: T) -> Controls<T> {
        Controls::new(self.interpolate(&self.omega_r, t), self.interpolate(&self.delta, t), self.gamma)
    }

    fn reference_amplitudes(&self) -> (T, T) {
        (self.omega_r.iter().fold(T::zero(), |m, &w| m.max(w)), self.gamma)
    }

    fn window(&self) -> Option<(T, T)> {
        Some((self.times[0], self.times[self.times.len() - 1]))
    }
}

/// `½[[−Δ, Ω_R], [Ω_R, Δ − iγ]]` from control values.
pub fn hamiltonian_from<T: Real>(ctl: &Controls<T>) -> ComplexMatrix<T> {
    let half = T::lit(0.5);
    ComplexMatrix::from_fn(2, |r, col| match (r, col) {
        (0, 0) => re(-ctl.delta * half),
        (1, 1) => c(ctl.delta * half, -ctl.gamma * half),
        _ => re(ctl.omega_r * half),
    })
}

pub fn hamiltonian<T: Real>(pulse: &dyn Pulse<T>, t: T) -> Result<ComplexMatrix<T>> {
    let ctl = pulse.controls(t);
    ctl.check(t)?;
    Ok(hamiltonian_from(&ctl))
}

/// `Z = −(γ + 2iΔ)² + 4Ω_R²`.
pub fn radicand_from<T: Real>(ctl: &Controls<T>) -> Complex<T> {
    let two = T::lit(2.0);
    let a = c(ctl.gamma, two * ctl.delta);
    -(a * a) + re(T::lit(4.0) * ctl.omega_r * ctl.omega_r)
}

pub fn radicand<T: Real>(pulse: &dyn Pulse<T>, t: T) -> Complex<T> {
    radicand_from(&pulse.controls(t))
}

/// Argument range used for `√Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutConvention {
    /// `η ∈ (−π, π]`: cut along the negative real axis.
    MinusPiToPi,
    /// `η ∈ [0, 2π)`: cut along the positive real axis.
    ZeroToTwoPi,
}

/// Which side of the exceptional point `γ = 2Ω₀` a pulse lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchRegime {
    /// `γ < 2Ω₀`
    SubCritical,
    /// `γ > 2Ω₀`
    SuperCritical,
}

impl BranchRegime {
    pub fn cut(self) -> CutConvention {
        match self {
            BranchRegime::SubCritical => CutConvention::MinusPiToPi,
            BranchRegime::SuperCritical => CutConvention::ZeroToTwoPi,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BranchRegime::SubCritical => "subcritical",
            BranchRegime::SuperCritical => "supercritical",
        }
    }

    /// Argument of `z` in this regime's range.
    pub fn argument<T: Real>(self, z: Complex<T>) -> T {
        let eta = z.arg();
        match self.cut() {
            CutConvention::MinusPiToPi => eta,
            CutConvention::ZeroToTwoPi if eta < T::zero() => eta + T::TAU(),
            CutConvention::ZeroToTwoPi => eta,
        }
    }

    /// `|z|^{1/2} e^{iη/2}` with `η` from [`BranchRegime::argument`].
    pub fn sqrt<T: Real>(self, z: Complex<T>) -> Complex<T> {
        Complex::from_polar(z.norm().sqrt(), self.argument(z) * T::lit(0.5))
    }
}

pub fn classify_regime<T: Real>(omega0: T, gamma: T) -> Result<BranchRegime> {
    if !(omega0.is_finite() && gamma.is_finite()) || omega0 <= T::zero() || gamma < T::zero() {
        return Err(Error::InvalidParams(format!(
            "need omega0 > 0 and gamma >= 0, got omega0 = {omega0}, gamma = {gamma}"
        )));
    }
    let gap = gamma - T::lit(2.0) * omega0;
    if gap.abs() <= T::lit(REGIME_TOLERANCE) {
        return Err(Error::DegenerateRegime(format!(
            "gamma = {gamma} equals 2*omega0 = {}: eigenvalues coalesce at the pulse centre",
            T::lit(2.0) * omega0
        )));
    }
    Ok(if gap < T::zero() { BranchRegime::SubCritical } else { BranchRegime::SuperCritical })
}

pub fn pulse_regime<T: Real>(pulse: &dyn Pulse<T>) -> Result<BranchRegime> {
    let (omega0, gamma) = pulse.reference_amplitudes();
    classify_regime(omega0, gamma)
}

/// `E± = (−iγ ± √Z)/4` from control values.
pub fn eigenvalues_from<T: Real>(ctl: &Controls<T>, regime: BranchRegime, t: T) -> Result<(Complex<T>, Complex<T>)> {
    ctl.check(t)?;
    let root = regime.sqrt(radicand_from(ctl));
    if root.norm() * T::lit(0.5) <= T::lit(DEFAULT_DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateRegime(format!("eigenvalues coalesce at t = {t}")));
    }
    let quarter = T::lit(0.25);
    let base = c(T::zero(), -ctl.gamma);
    Ok(((base + root) * quarter, (base - root) * quarter))
}

pub fn eigenvalues<T: Real>(pulse: &dyn Pulse<T>, t: T, regime: BranchRegime) -> Result<(Complex<T>, Complex<T>)> {
    eigenvalues_from(&pulse.controls(t), regime, t)
}

/// Eigenvalues sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvaluePath<T> {
    pub grid: TimeGrid<T>,
    pub e_plus: Vec<Complex<T>>,
    pub e_minus: Vec<Complex<T>>,
    pub regime: BranchRegime,
}

/// Samples `E±` on the grid using the pulse's branch cut, and checks that
/// `√Z` moves continuously: at every step the chosen root must be closer to
/// the previous one than its negative is.
pub fn eigenvalue_path<T: Real>(pulse: &dyn Pulse<T>, grid: &TimeGrid<T>) -> Result<EigenvaluePath<T>> {
    let regime = pulse_regime(pulse)?;
    let mut e_plus = Vec::with_capacity(grid.len());
    let mut e_minus = Vec::with_capacity(grid.len());
    let mut prev_root: Option<Complex<T>> = None;
    for t in grid.times() {
        let (ep, em) = eigenvalues(pulse, t, regime)?;
        let root = (ep - em) * T::lit(2.0);
        if let Some(p) = prev_root {
            if (root - p).norm() > (root + p).norm() {
                return Err(Error::BranchJump {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    reason: format!("sqrt(Z) changes sign under the {:?} cut", regime.cut()),
                });
            }
        }
        prev_root = Some(root);
        e_plus.push(ep);
        e_minus.push(em);
    }
    Ok(EigenvaluePath { grid: *grid, e_plus, e_minus, regime })
}

/// Principal mixing angle with `Re θ ∈ (−π/2, π/2]`, computed as
/// `θ = ln[(a + iΩ_R)/(a − iΩ_R)] / 2i` with `a = iγ/2 − Δ`, which is exact
/// at `a = 0` (`θ = π/2`).
pub fn principal_mixing_angle<T: Real>(ctl: &Controls<T>, t: T) -> Result<Complex<T>> {
    ctl.check(t)?;
    let i = imag_unit::<T>();
    let a = c(-ctl.delta, ctl.gamma * T::lit(0.5));
    let w = re(ctl.omega_r);
    if (a * a + w * w).norm() < T::lit(TAN_POLE_TOLERANCE) {
        return Err(Error::TanPole { t: t.to_f64().unwrap_or(f64::NAN) });
    }
    let ratio = (a + i * w) / (a - i * w);
    let mut theta = ratio.ln() / (i * T::lit(2.0));
    // ln on the cut gives arg = π exactly; keep Re θ = +π/2 rather than −π/2
    if theta.re <= -T::FRAC_PI_2() {
        theta = theta + re(T::PI());
    }
    Ok(theta)
}

/// `∂tθ = [Ω̇_R a − Ω_R ȧ] / (a² + Ω_R²)` with `a = iγ/2 − Δ`.
pub fn mixing_angle_rate<T: Real>(ctl: &Controls<T>, rates: &ControlRates<T>, t: T) -> Result<Complex<T>> {
    let a = c(-ctl.delta, ctl.gamma * T::lit(0.5));
    let da = c(-rates.d_delta, rates.d_gamma * T::lit(0.5));
    let w = re(ctl.omega_r);
    let denom = a * a + w * w;
    if denom.norm() < T::lit(TAN_POLE_TOLERANCE) {
        return Err(Error::TanPole { t: t.to_f64().unwrap_or(f64::NAN) });
    }
    let out = (re(rates.d_omega_r) * a - w * da) / denom;
    if !is_finite(out) {
        return Err(Error::NonFinite(format!("mixing-angle rate at t = {t}")));
    }
    Ok(out)
}

/// Representative `θ + mπ` closest to `previous`.
pub fn continue_branch<T: Real>(principal: Complex<T>, previous: Complex<T>, t: T) -> Result<Complex<T>> {
    let m = ((previous.re - principal.re) / T::PI()).round();
    let theta = principal + re(m * T::PI());
    if (theta - previous).norm() >= T::FRAC_PI_2() {
        return Err(Error::BranchJump {
            t: t.to_f64().unwrap_or(f64::NAN),
            reason: format!(
                "no representative of the mixing angle within pi/2 of the previous value (|dtheta| = {})",
                (theta - previous).norm()
            ),
        });
    }
    Ok(theta)
}

/// Anchor at the first grid point: the principal value when `Δ(t₀) < 0`,
/// shifted by π when `Δ(t₀) ≥ 0` so that `Re θ` stays in `[0, π]`.
fn anchor<T: Real>(ctl: &Controls<T>, t: T) -> Result<Complex<T>> {
    let theta = principal_mixing_angle(ctl, t)?;
    if ctl.delta >= T::zero() && theta.re < T::zero() {
        Ok(theta + re(T::PI()))
    } else {
        Ok(theta)
    }
}

/// Branch-continuous complex mixing angle and its rate on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingAnglePath<T> {
    pub grid: TimeGrid<T>,
    pub theta: Vec<Complex<T>>,
    pub dtheta: Vec<Complex<T>>,
    pub regime: BranchRegime,
    pub derivative_source: DerivativeSource,
}

impl<T: Real> MixingAnglePath<T> {
    /// `(θ, ∂tθ)` at an arbitrary time, continued from the nearest grid sample.
    pub fn evaluate(&self, pulse: &dyn Pulse<T>, t: T) -> Result<(Complex<T>, Complex<T>)> {
        let ctl = pulse.controls(t);
        let reference = self.theta[self.grid.nearest_index(t)];
        let theta = continue_branch(principal_mixing_angle(&ctl, t)?, reference, t)?;
        let (rates, _) = control_rates(pulse, t);
        Ok((theta, mixing_angle_rate(&ctl, &rates, t)?))
    }

    /// Largest `|θ(t_{k+1}) − θ(t_k)|`.
    pub fn max_step(&self) -> T {
        self.theta.windows(2).fold(T::zero(), |m, w| m.max((w[1] - w[0]).norm()))
    }
}

pub fn mixing_angle_path<T: Real>(pulse: &dyn Pulse<T>, grid: &TimeGrid<T>) -> Result<MixingAnglePath<T>> {
    let regime = pulse_regime(pulse)?;
    let mut theta = Vec::with_capacity(grid.len());
    let mut dtheta = Vec::with_capacity(grid.len());
    let mut source = DerivativeSource::Analytic;
    for (k, t) in grid.times().enumerate() {
        let ctl = pulse.controls(t);
        let value = if k == 0 {
            anchor(&ctl, t)?
        } else {
            continue_branch(principal_mixing_angle(&ctl, t)?, theta[k - 1], t)?
        };
        let (rates, src) = control_rates(pulse, t);
        if src == DerivativeSource::Numeric {
            source = src;
        }
        theta.push(value);
        dtheta.push(mixing_angle_rate(&ctl, &rates, t)?);
    }
    Ok(MixingAnglePath { grid: *grid, theta, dtheta, regime, derivative_source: source })
}

/// Right eigenvectors `|±⟩` and their biorthogonal partners `|±̃⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvectorPair<T> {
    pub right_plus: ComplexVector<T>,
    pub right_minus: ComplexVector<T>,
    pub left_plus: ComplexVector<T>,
    pub left_minus: ComplexVector<T>,
}

pub fn eigenvectors<T: Real>(theta: Complex<T>) -> EigenvectorPair<T> {
    let half = T::lit(0.5);
    let (cs, sn) = ((theta * half).cos(), (theta * half).sin());
    let (lc, ls) = ((theta.conj() * half).cos(), (theta.conj() * half).sin());
    EigenvectorPair {
        right_plus: vec![cs, sn],
        right_minus: vec![sn, -cs],
        left_plus: vec![lc, ls],
        left_minus: vec![ls, -lc],
    }
}

/// Closed-form biorthogonal system for a mixing angle and its eigenvalues,
/// ordered `(+, −)`.
pub fn two_level_system<T: Real>(
    theta: Complex<T>,
    e_plus: Complex<T>,
    e_minus: Complex<T>,
) -> Result<BiorthogonalSystem<T>> {
    let v = eigenvectors(theta);
    BiorthogonalSystem::from_parts(
        vec![e_plus, e_minus],
        vec![v.right_plus, v.right_minus],
        vec![v.left_plus, v.left_minus],
        T::lit(1e-6),
    )
}

/// Eigenvalue of `H₀` belonging to `|+⟩ = [cos θ/2, sin θ/2]`, read off the
/// first row: `(−Δ + Ω_R tan θ/2)/2`, or from the second row where
/// `cos θ/2` is small.
pub fn eigenvalue_of_plus<T: Real>(ctl: &Controls<T>, theta: Complex<T>) -> Complex<T> {
    let h = hamiltonian_from(ctl);
    let v = eigenvectors(theta).right_plus;
    let hv = h.mul_vec(&v);
    if v[0].norm() >= v[1].norm() {
        hv[0] / v[0]
    } else {
        hv[1] / v[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn ae(gamma: f64) -> AllenEberly<f64> {
        AllenEberly::new(AllenEberlyParams::standard(gamma)).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let zero = ConstantPulse(Controls::new(0.0, 0.0, 0.0));
        assert_eq!(hamiltonian(&zero, 0.0).unwrap().max_abs(), 0.0);
        let h = hamiltonian(&ae(1.0), 0.0).unwrap();
        let want = ComplexMatrix::from_rows([
            [C::new(0.0, 0.0), C::new(0.5, 0.0)],
            [C::new(0.5, 0.0), C::new(0.0, -0.5)],
        ])
        .unwrap();
        assert!(h.max_abs_diff(&want) < 1e-15);
        let p = Controls::new(0.7, -1.3, 0.4);
        let q = Controls::new(0.7, -1.3, -0.4);
        assert!(hamiltonian_from(&q).max_abs_diff(&hamiltonian_from(&p).adjoint()) == 0.0);
        let nan = ConstantPulse(Controls::new(f64::NAN, 0.0, 0.0));
        assert!(matches!(hamiltonian(&nan, 0.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn radicand_examples() {
        let z = radicand_from(&Controls::new(1.5, 0.0, 0.0));
        assert_eq!(z, C::new(9.0, 0.0));
        let z = radicand(&ae(0.3), 0.0);
        assert!((z - C::new(3.91, 0.0)).norm() < 1e-14);
        let grid = TimeGrid::new(-1.0, 1.0, 4000).unwrap();
        assert!(grid.times().all(|t| radicand(&ae(0.3), t).re > 0.0));
    }

    #[test]
    fn regime_classification() {
        assert_eq!(classify_regime(1.0, 0.3).unwrap(), BranchRegime::SubCritical);
        assert_eq!(classify_regime(1.0, 3.0).unwrap(), BranchRegime::SuperCritical);
        assert_eq!(BranchRegime::SuperCritical.cut(), CutConvention::ZeroToTwoPi);
        assert!(matches!(classify_regime(1.0, 2.0), Err(Error::DegenerateRegime(_))));
        assert!(matches!(
            AllenEberly::new(AllenEberlyParams::standard(2.0)),
            Err(Error::DegenerateRegime(_))
        ));
    }

    #[test]
    fn branch_sqrt_ranges() {
        let z = C::new(-4.0, -1e-300);
        assert!(BranchRegime::SubCritical.sqrt(z).im < 0.0);
        assert!(BranchRegime::SuperCritical.sqrt(z).im > 0.0);
        let z = C::new(-4.0, 0.0);
        assert!((BranchRegime::SuperCritical.sqrt(z) - C::new(0.0, 2.0)).norm() < 1e-15);
        let z = C::new(4.0, -1e-12);
        assert!(BranchRegime::SuperCritical.sqrt(z).re < 0.0);
        assert!(BranchRegime::SubCritical.sqrt(z).re > 0.0);
    }

    #[test]
    fn eigenvalue_examples() {
        let (ep, em) = eigenvalues(&ConstantPulse(Controls::new(2.0, 0.0, 0.0)), 0.0, BranchRegime::SubCritical).unwrap();
        assert_eq!((ep, em), (C::new(1.0, 0.0), C::new(-1.0, 0.0)));
        let (ep, em) = eigenvalues(&ae(0.3), 0.0, BranchRegime::SubCritical).unwrap();
        let root = 3.91f64.sqrt() / 4.0;
        assert!((ep - C::new(root, -0.075)).norm() < 1e-15);
        assert!((em - C::new(-root, -0.075)).norm() < 1e-15);
        assert!((ep + em - C::new(0.0, -0.15)).norm() < 1e-16);
    }

    #[test]
    fn eigenvalue_paths_are_continuous_in_both_regimes() {
        let grid = TimeGrid::new(-1.0, 1.0, 400).unwrap();
        for g in [0.0, 0.3, 3.0] {
            let p = eigenvalue_path(&ae(g), &grid).unwrap();
            assert_eq!(p.e_plus.len(), 401);
        }
        let sup = eigenvalue_path(&ae(3.0), &grid).unwrap();
        // under the [0, 2π) cut E₊ follows |+⟩, which stays near |0⟩
        assert!(sup.e_plus[0].re > 0.0 && sup.e_plus[400].re < 0.0);
    }

    #[test]
    fn mixing_angle_examples() {
        let th = principal_mixing_angle(&Controls::new(1.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(th, C::new(std::f64::consts::FRAC_PI_2, 0.0));
        let th = principal_mixing_angle(&Controls::new(1.0, 0.0, 0.3), 0.0).unwrap();
        assert!((th.re - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((th.im + 0.15f64.atanh()).abs() < 1e-15);
        assert!((0.15f64.atanh() - 0.151140).abs() < 1e-6);
        // the angle diagonalizes H₀ with |+⟩ = [cos θ/2, sin θ/2]
        for ctl in [Controls::new(0.8, -2.0, 0.5), Controls::new(1.3, 0.4, 1.7)] {
            let th = principal_mixing_angle(&ctl, 0.0).unwrap();
            let tan = th.tan();
            let want = C::new(ctl.omega_r, 0.0) / C::new(-ctl.delta, ctl.gamma / 2.0);
            assert!((tan - want).norm() < 1e-12 * want.norm());
        }
        let pole = Controls::new(0.5, 0.0, 1.0);
        assert!(matches!(principal_mixing_angle(&pole, 0.0), Err(Error::TanPole { .. })));
    }

    #[test]
    fn sweep_runs_from_zero_to_pi() {
        let grid = TimeGrid::new(-1.0, 1.0, 4000).unwrap();
        let path = mixing_angle_path(&ae(0.3), &grid).unwrap();
        assert!(path.theta[0].re.abs() <= 0.15);
        assert!((path.theta[4000].re - std::f64::consts::PI).abs() <= 0.15);
        assert!(path.max_step() < 0.1);
        assert_eq!(path.derivative_source, DerivativeSource::Analytic);
        let herm = mixing_angle_path(&ae(0.0), &grid).unwrap();
        assert!(herm.theta.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn analytic_rate_matches_differences() {
        let grid = TimeGrid::new(-1.0, 1.0, 2000).unwrap();
        let path = mixing_angle_path(&ae(0.7), &grid).unwrap();
        let h = grid.step();
        for k in (1..2000).step_by(111) {
            let fd = (path.theta[k + 1] - path.theta[k - 1]) / (2.0 * h);
            assert!((fd - path.dtheta[k]).norm() < 1e-3);
        }
    }

    #[test]
    fn evaluate_matches_grid_samples() {
        let grid = TimeGrid::new(-1.0, 1.0, 200).unwrap();
        let pulse = ae(1.0);
        let path = mixing_angle_path(&pulse, &grid).unwrap();
        for k in [0, 57, 100, 200] {
            let (th, dth) = path.evaluate(&pulse, grid.time(k)).unwrap();
            assert!((th - path.theta[k]).norm() < 1e-14);
            assert!((dth - path.dtheta[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn eigenvector_examples() {
        let v = eigenvectors(C::new(0.0, 0.0));
        assert_eq!(v.right_plus, vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]);
        assert_eq!(v.right_minus, vec![C::new(0.0, 0.0), C::new(-1.0, 0.0)]);
        let v = eigenvectors(C::new(std::f64::consts::PI, 0.0));
        assert!(v.right_plus[0].norm() < 1e-16 && (v.right_plus[1] - C::new(1.0, 0.0)).norm() < 1e-16);
        let v = eigenvectors(C::new(0.4, -1.2));
        let b = crate::matrix::braket(&v.left_plus, &v.right_plus);
        assert!((b - C::new(1.0, 0.0)).norm() < 1e-15);
        assert!(crate::matrix::braket(&v.left_plus, &v.right_minus).norm() < 1e-15);
    }

    #[test]
    fn allen_eberly_examples() {
        let p = ae(0.3);
        let ctl = p.controls(0.0);
        assert_eq!((ctl.omega_r, ctl.delta), (1.0, 0.0));
        assert!((p.controls(1.0).delta - 6.854_35).abs() < 1e-5);
        assert_eq!(p.rates(0.0).unwrap().d_omega_r, 0.0);
        let mut bad = AllenEberlyParams::standard(0.3);
        bad.t_f = -2.0;
        assert!(AllenEberly::new(bad).is_err());
    }

    #[test]
    fn tabulated_pulse_interpolates() {
        let text = "t,omega_r,delta\n-1,0,-2\n0,1,0\n1,0,2\n";
        let p = TabulatedPulse::<f64>::parse_csv(text, 0.3).unwrap();
        let ctl = p.controls(0.5);
        assert!((ctl.omega_r - 0.5).abs() < 1e-15 && (ctl.delta - 1.0).abs() < 1e-15);
        assert_eq!(p.controls(5.0).delta, 2.0);
        assert!(p.rates(0.0).is_none());
        let (r, src) = control_rates(&p, 0.5);
        assert_eq!(src, DerivativeSource::Numeric);
        assert!((r.d_delta - 2.0).abs() < 1e-6);
        let grid = TimeGrid::new(-1.0, 1.0, 100).unwrap();
        let path = mixing_angle_path(&p, &grid).unwrap();
        assert_eq!(path.derivative_source, DerivativeSource::Numeric);
        assert!(TabulatedPulse::<f64>::parse_csv("0,1,2\n0,1,2\n", 0.1).is_err());
        assert!(TabulatedPulse::<f64>::parse_csv("0,1\n", 0.1).is_err());
        assert!(matches!(
            TabulatedPulse::<f64>::parse_csv("0,1,0\n1,1,0\n", 2.0),
            Err(Error::DegenerateRegime(_))
        ));
    }

    #[test]
    fn single_precision_path() {
        let p = AllenEberly::new(AllenEberlyParams::<f32>::standard(0.3)).unwrap();
        let grid = TimeGrid::new(-1.0f32, 1.0, 400).unwrap();
        let path = mixing_angle_path(&p, &grid).unwrap();
        assert!((path.theta[400].re - std::f32::consts::PI).abs() < 0.15);
    }
}
