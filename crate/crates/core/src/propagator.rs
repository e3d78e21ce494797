//! Fixed-step RK4 integration of `i∂tψ = H(t)ψ` (ħ = 1) for non-Hermitian
//! `H`, and the eigenstate amplitudes and populations derived from it.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::gauge::GaugeFunctions;
use crate::grid::TimeGrid;
use crate::matrix::{ComplexMatrix, ComplexVector};
use crate::scalar::{imag_unit, is_finite, re, Real};
use crate::two_level::{eigenvectors, MixingAnglePath};

/// Where the state starts.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialCondition<T> {
    /// `|0⟩ = [1, 0]`.
    BareGround,
    /// `|φ₊(t₀)⟩ = |+(t₀)⟩` (the gauges start at 1).
    #[default]
    EigenPlus,
    Custom(ComplexVector<T>),
}

impl<T: Real> InitialCondition<T> {
    /// State vector, given the mixing angle at `t₀`.
    pub fn state(&self, theta0: Complex<T>) -> ComplexVector<T> {
        match self {
            InitialCondition::BareGround => vec![re(T::one()), Complex::zero()],
            InitialCondition::EigenPlus => eigenvectors(theta0).right_plus,
            InitialCondition::Custom(v) => v.clone(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            InitialCondition::BareGround => "bare_ground",
            InitialCondition::EigenPlus => "eigen_plus",
            InitialCondition::Custom(_) => "custom",
        }
    }
}

/// State samples `ψ(t_k)` in the bare basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory<T> {
    pub grid: TimeGrid<T>,
    pub psi: Vec<ComplexVector<T>>,
    pub initial: InitialCondition<T>,
}

fn apply<T: Real>(h: &ComplexMatrix<T>, v: &[Complex<T>]) -> ComplexVector<T> {
    let minus_i = -imag_unit::<T>();
    h.mul_vec(v).into_iter().map(|z| z * minus_i).collect()
}

fn axpy<T: Real>(y: &[Complex<T>], a: T, x: &[Complex<T>]) -> ComplexVector<T> {
    y.iter().zip(x).map(|(y, x)| y + x * a).collect()
}

/// Classical RK4 on the grid; `h` must be evaluable at grid points and
/// midpoints.
pub fn integrate<T: Real>(
    h: impl Fn(T) -> Result<ComplexMatrix<T>>,
    psi0: &[Complex<T>],
    grid: &TimeGrid<T>,
) -> Result<StateTrajectory<T>> {
    if psi0.iter().any(|z| !is_finite(*z)) {
        return Err(Error::NonFinite("initial state".into()));
    }
    let dt = grid.step();
    let half = dt * T::lit(0.5);
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let mut psi = Vec::with_capacity(grid.len());
    psi.push(psi0.to_vec());
    for k in 0..grid.steps() {
        let t = grid.time(k);
        let y = &psi[k];
        let h0 = h(t)?;
        if h0.dim() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} Hamiltonian for a {}-component state",
                h0.dim(),
                h0.dim(),
                y.len()
            )));
        }
        let hm = h(t + half)?;
        let k1 = apply(&h0, y);
        let k2 = apply(&hm, &axpy(y, half, &k1));
        let k3 = apply(&hm, &axpy(y, half, &k2));
        let k4 = apply(&h(grid.time(k + 1))?, &axpy(y, dt, &k3));
        let next: ComplexVector<T> = (0..y.len())
            .map(|i| y[i] + (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * sixth)
            .collect();
        if next.iter().any(|z| !is_finite(*z)) {
            return Err(Error::NonFinite(format!("state after step {k} (t = {})", grid.time(k + 1))));
        }
        psi.push(next);
    }
    Ok(StateTrajectory { grid: *grid, psi, initial: InitialCondition::Custom(psi0.to_vec()) })
}

/// Max-norm difference between the solution on `grid` and on the grid with
/// half as many steps, over their shared points.
pub fn convergence_check<T: Real>(
    h: impl Fn(T) -> Result<ComplexMatrix<T>>,
    psi0: &[Complex<T>],
    grid: &TimeGrid<T>,
) -> Result<T> {
    let coarse = grid.coarsened()?;
    let fine = integrate(&h, psi0, grid)?;
    let rough = integrate(&h, psi0, &coarse)?;
    let mut worst = T::zero();
    for k in 0..coarse.len() {
        for (a, b) in fine.psi[2 * k].iter().zip(&rough.psi[k]) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

/// Eigenstate amplitudes and populations along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrajectory<T> {
    pub grid: TimeGrid<T>,
    /// `c± = ⟨±̃|ψ⟩`
    pub c_plus: Vec<Complex<T>>,
    pub c_minus: Vec<Complex<T>>,
    /// `g± = c±/f±`
    pub g_plus: Vec<Complex<T>>,
    pub g_minus: Vec<Complex<T>>,
    /// `|g±|²`
    pub pop_phi_plus: Vec<T>,
    pub pop_phi_minus: Vec<T>,
    /// `|⟨m|ψ⟩|²`
    pub pop_bare_0: Vec<T>,
    pub pop_bare_1: Vec<T>,
    /// `P_m / (P₀ + P₁)`
    pub pop_bare_0_renorm: Vec<T>,
    pub pop_bare_1_renorm: Vec<T>,
}

pub fn amplitudes<T: Real>(
    traj: &StateTrajectory<T>,
    theta: &MixingAnglePath<T>,
    gauges: &GaugeFunctions<T>,
) -> Result<AmplitudeTrajectory<T>> {
    if traj.grid != theta.grid || traj.grid != gauges.grid {
        return Err(Error::GridMismatch("trajectory, mixing angle and gauges".into()));
    }
    if traj.psi.first().map_or(true, |p| p.len() != 2) {
        return Err(Error::DimensionMismatch("two-level amplitudes need 2-component states".into()));
    }
    let n = traj.grid.len();
    let mut out = AmplitudeTrajectory {
        grid: traj.grid,
        c_plus: Vec::with_capacity(n),
        c_minus: Vec::with_capacity(n),
        g_plus: Vec::with_capacity(n),
        g_minus: Vec::with_capacity(n),
        pop_phi_plus: Vec::with_capacity(n),
        pop_phi_minus: Vec::with_capacity(n),
        pop_bare_0: Vec::with_capacity(n),
        pop_bare_1: Vec::with_capacity(n),
        pop_bare_0_renorm: Vec::with_capacity(n),
        pop_bare_1_renorm: Vec::with_capacity(n),
    };
    let half = T::lit(0.5);
    for k in 0..n {
        let (fp, fm) = gauges.at(k);
        if fp.is_zero() || fm.is_zero() {
            return Err(Error::ZeroGauge(k));
        }
        let psi = &traj.psi[k];
        // ⟨±̃| as rows are [cos θ/2, sin θ/2] and [sin θ/2, −cos θ/2]
        let th = theta.theta[k] * half;
        let (cs, sn) = (th.cos(), th.sin());
        let cp = cs * psi[0] + sn * psi[1];
        let cm = sn * psi[0] - cs * psi[1];
        let (gp, gm) = (cp / fp, cm / fm);
        let (p0, p1) = (psi[0].norm_sqr(), psi[1].norm_sqr());
        let total = p0 + p1;
        out.c_plus.push(cp);
        out.c_minus.push(cm);
        out.g_plus.push(gp);
        out.g_minus.push(gm);
        out.pop_phi_plus.push(gp.norm_sqr());
        out.pop_phi_minus.push(gm.norm_sqr());
        out.pop_bare_0.push(p0);
        out.pop_bare_1.push(p1);
        let (r0, r1) = if total > T::zero() { (p0 / total, p1 / total) } else { (T::nan(), T::nan()) };
        out.pop_bare_0_renorm.push(r0);
        out.pop_bare_1_renorm.push(r1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{gauge_shortcut, gauge_simple_real};
    use crate::synthesis::TrappedState;
    use crate::two_level::{
        eigenvalue_path, hamiltonian, mixing_angle_path, AllenEberly, AllenEberlyParams,
    };
    use num_complex::Complex64 as C;

    fn constant(m: ComplexMatrix<f64>) -> impl Fn(f64) -> Result<ComplexMatrix<f64>> {
        move |_| Ok(m.clone())
    }

    fn sigma_x(omega: f64) -> ComplexMatrix<f64> {
        ComplexMatrix::from_rows([
            [C::new(0.0, 0.0), C::new(omega / 2.0, 0.0)],
            [C::new(omega / 2.0, 0.0), C::new(0.0, 0.0)],
        ])
        .unwrap()
    }

    #[test]
    fn zero_hamiltonian_keeps_the_state() {
        let grid = TimeGrid::new(0.0, 3.0, 100).unwrap();
        let psi0 = vec![C::new(0.6, 0.1), C::new(0.0, -0.7)];
        let traj = integrate(constant(ComplexMatrix::zeros(2)), &psi0, &grid).unwrap();
        assert!(traj.psi.iter().all(|p| *p == psi0));
        assert_eq!(convergence_check(constant(ComplexMatrix::zeros(2)), &psi0, &grid).unwrap(), 0.0);
    }

    #[test]
    fn exponential_decay() {
        let gamma = 0.8;
        let h = ComplexMatrix::diagonal(&[C::new(0.0, 0.0), C::new(0.0, -gamma / 2.0)]);
        let grid = TimeGrid::new(0.0, 2.5, 4000).unwrap();
        let traj = integrate(constant(h), &[C::new(0.0, 0.0), C::new(1.0, 0.0)], &grid).unwrap();
        let want = (-gamma * 2.5 / 2.0).exp();
        assert!((traj.psi[4000][1].norm() - want).abs() / want < 1e-8);
    }

    #[test]
    fn rabi_oscillation() {
        let omega = 1.7;
        let grid = TimeGrid::new(0.0, 10.0 / omega, 4000).unwrap();
        let traj = integrate(constant(sigma_x(omega)), &[C::new(1.0, 0.0), C::new(0.0, 0.0)], &grid).unwrap();
        for (k, t) in grid.times().enumerate() {
            let want = (omega * t / 2.0).sin().powi(2);
            assert!((traj.psi[k][1].norm_sqr() - want).abs() < 1e-8);
        }
        let diff = convergence_check(constant(sigma_x(omega)), &[C::new(1.0, 0.0), C::new(0.0, 0.0)], &grid).unwrap();
        assert!(diff <= 1e-9);
    }

    #[test]
    fn dimension_and_nan_checks() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let err = integrate(constant(ComplexMatrix::zeros(3)), &[C::new(1.0, 0.0); 2], &grid);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let gain = ComplexMatrix::diagonal(&[C::new(0.0, 1e308), C::new(0.0, 0.0)]);
        let err = integrate(constant(gain), &[C::new(1.0, 0.0), C::new(0.0, 0.0)], &grid);
        assert!(matches!(err, Err(Error::NonFinite(_))));
        let odd = TimeGrid::new(0.0, 1.0, 11).unwrap();
        assert!(convergence_check(constant(sigma_x(1.0)), &[C::new(1.0, 0.0), C::new(0.0, 0.0)], &odd).is_err());
    }

    #[test]
    fn eigenstate_form_gives_pure_plus_amplitude() {
        let pulse = AllenEberly::new(AllenEberlyParams::standard(0.3)).unwrap();
        let grid = pulse.params().grid(200).unwrap();
        let eigs = eigenvalue_path(&pulse, &grid).unwrap();
        let theta = mixing_angle_path(&pulse, &grid).unwrap();
        let gauges = gauge_shortcut(&eigs, &theta, TrappedState::Plus).unwrap();
        let gp = C::new(0.3, -0.4);
        let psi = (0..=200)
            .map(|k| {
                let v = eigenvectors(theta.theta[k]).right_plus;
                v.iter().map(|z| z * gauges.f_plus[k] * gp).collect()
            })
            .collect();
        let traj = StateTrajectory { grid, psi, initial: InitialCondition::EigenPlus };
        let amp = amplitudes(&traj, &theta, &gauges).unwrap();
        for k in 0..=200 {
            assert!((amp.c_plus[k] - gauges.f_plus[k] * gp).norm() < 1e-14);
            assert!(amp.c_minus[k].norm() < 1e-15);
            assert!((amp.g_plus[k] * gauges.f_plus[k] - amp.c_plus[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn slow_hermitian_passage_is_adiabatic() {
        let params = AllenEberlyParams { tau: 1.0, omega0: 40.0, delta0: 40.0, gamma: 0.0, t0: -6.0, t_f: 6.0 };
        let pulse = AllenEberly::new(params).unwrap();
        let grid = params.grid(12000).unwrap();
        let eigs = eigenvalue_path(&pulse, &grid).unwrap();
        let theta = mixing_angle_path(&pulse, &grid).unwrap();
        let gauges = gauge_simple_real(&eigs).unwrap();
        let psi0 = InitialCondition::EigenPlus.state(theta.theta[0]);
        let traj = integrate(|t| hamiltonian(&pulse, t), &psi0, &grid).unwrap();
        let amp = amplitudes(&traj, &theta, &gauges).unwrap();
        assert!(amp.pop_phi_plus.iter().all(|p: &f64| (p - 1.0).abs() < 0.01));
        assert!(amp.pop_bare_1[12000] > 0.99);
    }

    #[test]
    fn norm_loss_follows_excited_population() {
        // d‖ψ‖²/dt = −γ|ψ₁|² for the bare Hamiltonian
        let pulse = AllenEberly::new(AllenEberlyParams::standard(1.0)).unwrap();
        let grid = pulse.params().grid(4000).unwrap();
        let traj = integrate(|t| hamiltonian(&pulse, t), &[C::new(1.0, 0.0), C::new(0.0, 0.0)], &grid).unwrap();
        let norm2: Vec<f64> = traj.psi.iter().map(|p| p[0].norm_sqr() + p[1].norm_sqr()).collect();
        let h = grid.step();
        for k in 1..4000 {
            let rate = (norm2[k + 1] - norm2[k - 1]) / (2.0 * h);
            assert!((rate + traj.psi[k][1].norm_sqr()).abs() < 1e-6, "k={k}");
        }
    }
}
