//! Shortcuts to adiabaticity for dissipative (non-Hermitian) two-level
//! systems.
//!
//! The crate is generic over the real scalar type (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the command-line
//! driver uses.
//!
//! ```
//! use nh_sta::pipeline::{run_shortcut, ShortcutOptions};
//! use nh_sta::two_level::{AllenEberly, AllenEberlyParams};
//!
//! let pulse = AllenEberly::new(AllenEberlyParams::standard(0.3))?;
//! let grid = pulse.params().grid(4000)?;
//! let run = run_shortcut(&pulse, &grid, &ShortcutOptions::default())?;
//! assert!(run.max_abs_g_minus() < 1e-8);
//! # Ok::<(), nh_sta::Error>(())
//! ```

pub mod biorthogonal;
mod eigen;
pub mod error;
pub mod gauge;
pub mod grid;
pub mod matrix;
pub mod pipeline;
pub mod propagator;
pub mod scalar;
pub mod synthesis;
pub mod two_level;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision complex number.
pub type Complex = num_complex::Complex<f64>;
/// Double-precision complex matrix.
pub type Matrix = matrix::ComplexMatrix<f64>;
/// Double-precision state vector.
pub type Vector = matrix::ComplexVector<f64>;
/// Double-precision time grid.
pub type Grid = grid::TimeGrid<f64>;
/// Double-precision biorthogonal eigensystem.
pub type Eigensystem = biorthogonal::BiorthogonalSystem<f64>;
/// Double-precision mixing-angle path.
pub type AnglePath = two_level::MixingAnglePath<f64>;
/// Double-precision state trajectory.
pub type Trajectory = propagator::StateTrajectory<f64>;
/// Double-precision amplitude trajectory.
pub type Amplitudes = propagator::AmplitudeTrajectory<f64>;
/// Double-precision shortcut run.
pub type Run = pipeline::ShortcutRun<f64>;
