//! End-to-end shortcut run: controls → mixing angle → gauges → supplement →
//! propagation → amplitudes, with the closed-form trapped amplitude and the
//! certification numbers alongside.

use num_complex::Complex;

use crate::biorthogonal::DerivativeScheme;
use crate::error::{Error, Result};
use crate::gauge::{gauge_shortcut, gauge_simple_real, GaugeFunctions};
use crate::grid::TimeGrid;
use crate::matrix::ComplexMatrix;
use crate::propagator::{amplitudes, convergence_check, integrate, AmplitudeTrajectory, InitialCondition, StateTrajectory};
use crate::scalar::Real;
use crate::synthesis::{
    closed_form_gplus, frame_couplings, nullification_residual, AnglePoint, FrameCouplings, NullificationReport,
    SupplementCoefficients, SupplementRule, TrappedState,
};
use crate::two_level::{
    eigenvalue_path, hamiltonian, mixing_angle_path, BranchRegime, EigenvaluePath, MixingAnglePath, Pulse,
};

/// Which gauge functions the amplitudes are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GaugeChoice {
    /// Shortcut-matched gauge for the Hermitian supplement, simple real gauge
    /// otherwise.
    #[default]
    Auto,
    Simple,
    ShortcutMatched,
}

#[derive(Debug, Clone)]
pub struct ShortcutOptions<T> {
    pub rule: SupplementRule<T>,
    pub trapped: TrappedState,
    pub initial: InitialCondition<T>,
    pub gauge: GaugeChoice,
    /// Finite-difference scheme for the frame-matrix check.
    pub scheme: DerivativeScheme,
    /// Also integrate on the half-step grid and report the difference.
    pub check_convergence: bool,
    /// Also build the adiabatic-frame matrix and report its couplings.
    pub check_frame: bool,
}

impl<T: Real> Default for ShortcutOptions<T> {
    fn default() -> Self {
        Self {
            rule: SupplementRule::HermitianRealizable { common_shift: T::zero() },
            trapped: TrappedState::Plus,
            initial: InitialCondition::EigenPlus,
            gauge: GaugeChoice::Auto,
            scheme: DerivativeScheme::Richardson,
            check_convergence: true,
            check_frame: false,
        }
    }
}

/// Everything produced by one run on one grid.
#[derive(Debug, Clone)]
pub struct ShortcutRun<T> {
    pub grid: TimeGrid<T>,
    pub regime: BranchRegime,
    pub eigs: EigenvaluePath<T>,
    pub theta: MixingAnglePath<T>,
    pub gauges: GaugeFunctions<T>,
    pub coeffs: Option<SupplementCoefficients<T>>,
    pub trajectory: StateTrajectory<T>,
    pub amplitudes: AmplitudeTrajectory<T>,
    /// Closed-form `g₊` (only for `δ₊ = −δ₋` supplements).
    pub closed_form_gplus: Option<Vec<Complex<T>>>,
    pub residual: Option<NullificationReport<T>>,
    pub frame: Option<FrameCouplings<T>>,
    pub convergence: Option<T>,
}

impl<T: Real> ShortcutRun<T> {
    /// `max_t |g₊^closed − g₊^ODE|`.
    pub fn closed_form_deviation(&self) -> Option<T> {
        self.closed_form_gplus.as_ref().map(|g| {
            g.iter()
                .zip(&self.amplitudes.g_plus)
                .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
        })
    }

    pub fn max_abs_g_minus(&self) -> T {
        self.amplitudes.g_minus.iter().fold(T::zero(), |m, g| m.max(g.norm()))
    }
}

/// `H₀(t) + H₁(t)` at any time, continuing θ from the sampled path.
pub fn total_hamiltonian<'a, T: Real>(
    pulse: &'a dyn Pulse<T>,
    theta: &'a MixingAnglePath<T>,
    rule: &'a SupplementRule<T>,
    trapped: TrappedState,
) -> impl Fn(T) -> Result<ComplexMatrix<T>> + 'a {
    move |t| {
        let h0 = hamiltonian(pulse, t)?;
        if matches!(rule, SupplementRule::None) {
            return Ok(h0);
        }
        let (th, dth) = theta.evaluate(pulse, t)?;
        let h1 = rule.matrix(&AnglePoint { t, theta: th, dtheta: dth }, trapped)?;
        Ok(&h0 + &h1)
    }
}

pub fn run_shortcut<T: Real>(
    pulse: &dyn Pulse<T>,
    grid: &TimeGrid<T>,
    options: &ShortcutOptions<T>,
) -> Result<ShortcutRun<T>> {
    let eigs = eigenvalue_path(pulse, grid)?;
    let theta = mixing_angle_path(pulse, grid)?;
    let coeffs = options.rule.coefficients(&theta, options.trapped)?;
    let shortcut_gauge = match options.gauge {
        GaugeChoice::Auto => matches!(options.rule, SupplementRule::HermitianRealizable { .. }),
        GaugeChoice::Simple => false,
        GaugeChoice::ShortcutMatched => true,
    };
    let gauges = if shortcut_gauge {
        gauge_shortcut(&eigs, &theta, options.trapped)?
    } else {
        gauge_simple_real(&eigs)?
    };

    let h_total = total_hamiltonian(pulse, &theta, &options.rule, options.trapped);
    let psi0 = options.initial.state(theta.theta[0]);
    let mut trajectory = integrate(&h_total, &psi0, grid)?;
    trajectory.initial = options.initial.clone();
    let amps = amplitudes(&trajectory, &theta, &gauges)?;

    let (closed, residual, frame) = match &coeffs {
        Some(coeffs) => {
            let closed = match closed_form_gplus(&eigs, &gauges, coeffs, &theta) {
                Ok(g) => Some(g),
                Err(Error::PolicyMismatch(_)) => None,
                Err(e) => return Err(e),
            };
            let residual = nullification_residual(&theta, coeffs)?;
            let frame = if options.check_frame {
                Some(frame_couplings(pulse, &theta, &gauges, coeffs, options.scheme)?)
            } else {
                None
            };
            (closed, Some(residual), frame)
        }
        None => (None, None, None),
    };
    let convergence = if options.check_convergence {
        Some(convergence_check(&h_total, &psi0, grid)?)
    } else {
        None
    };
    drop(h_total);

    Ok(ShortcutRun {
        grid: *grid,
        regime: eigs.regime,
        eigs,
        theta,
        gauges,
        coeffs,
        trajectory,
        amplitudes: amps,
        closed_form_gplus: closed,
        residual,
        frame,
        convergence,
    })
}
