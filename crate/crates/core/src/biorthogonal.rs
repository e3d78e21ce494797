//! Biorthogonal eigensystems of non-Hermitian matrices and the generic
//! N-level counterdiabatic / adiabatic-frame constructions built from them.
//!
//! Right eigenvectors `|n⟩` solve `H|n⟩ = E_n|n⟩`; their partners `|ñ⟩` solve
//! `H†|ñ⟩ = E_n*|ñ⟩` and are normalized so that `⟨ñ|m⟩ = δ_nm`. Time
//! derivatives along a sampled path are taken by finite differences on
//! vectors whose ordering and scale are carried continuously from one grid
//! point to the next.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::eigen::eigenpairs;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::matrix::{braket, norm, scale_vec, ComplexMatrix, ComplexVector};
use crate::scalar::{imag_unit, re, Real};

/// Default minimum eigenvalue separation (1/τ units).
pub const DEFAULT_DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Smallest admissible normalized overlap between matched eigenvectors at
/// neighbouring grid points.
pub const MIN_PATH_OVERLAP: f64 = 0.5;

/// Records which rule fixed the scale and phase of the eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeConvention {
    /// `‖n‖ = 1`, largest-magnitude component of `|n⟩` real positive, `⟨ñ|n⟩ = 1`.
    LargestComponentReal,
    /// Scale carried continuously along an [`EigenPath`].
    PathTransported,
    /// Vectors supplied by the caller (e.g. closed-form two-level eigenvectors).
    External,
}

/// Eigenvalues with right eigenvectors and their biorthogonal partners.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalSystem<T> {
    eigenvalues: Vec<Complex<T>>,
    right: Vec<ComplexVector<T>>,
    left: Vec<ComplexVector<T>>,
    convention: GaugeConvention,
}

impl<T: Real> BiorthogonalSystem<T> {
    /// Wraps externally computed vectors after checking `⟨ñ|m⟩ = δ_nm`
    /// within `tol`.
    pub fn from_parts(
        eigenvalues: Vec<Complex<T>>,
        right: Vec<ComplexVector<T>>,
        left: Vec<ComplexVector<T>>,
        tol: T,
    ) -> Result<Self> {
        let sys = Self { eigenvalues, right, left, convention: GaugeConvention::External };
        let n = sys.eigenvalues.len();
        if sys.right.len() != n || sys.left.len() != n || sys.right.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch("eigen system shapes disagree".into()));
        }
        let defect = sys.biorthogonality_defect();
        if defect > tol {
            return Err(Error::InvalidParams(format!(
                "supplied vectors are not biorthogonal (defect {defect:e})"
            )));
        }
        Ok(sys)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[Complex<T>] {
        &self.eigenvalues
    }

    pub fn right(&self, n: usize) -> &[Complex<T>] {
        &self.right[n]
    }

    pub fn left(&self, n: usize) -> &[Complex<T>] {
        &self.left[n]
    }

    pub fn convention(&self) -> GaugeConvention {
        self.convention
    }

    /// `max |⟨ñ|m⟩ − δ_nm|`.
    pub fn biorthogonality_defect(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for a in 0..n {
            for b in 0..n {
                let target = if a == b { Complex::one() } else { Complex::zero() };
                worst = worst.max((braket(&self.left[a], &self.right[b]) - target).norm());
            }
        }
        worst
    }

    /// `max |Σ_n |n⟩⟨ñ| − I|`.
    pub fn completeness_defect(&self) -> T {
        let n = self.dim();
        let mut sum = ComplexMatrix::zeros(n);
        for k in 0..n {
            sum = &sum + &ComplexMatrix::outer(&self.right[k], &self.left[k]);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(n))
    }

    /// Largest residual of `H|n⟩ = E_n|n⟩` and `H†|ñ⟩ = E_n*|ñ⟩`, relative to
    /// the vector norms.
    pub fn eigen_residual(&self, h: &ComplexMatrix<T>) -> T {
        let adj = h.adjoint();
        let mut worst = T::zero();
        for k in 0..self.dim() {
            let e = self.eigenvalues[k];
            let r = h.mul_vec(&self.right[k]);
            let l = adj.mul_vec(&self.left[k]);
            let rn = norm(&self.right[k]).max(T::min_positive_value());
            let ln = norm(&self.left[k]).max(T::min_positive_value());
            for i in 0..self.dim() {
                worst = worst.max((r[i] - e * self.right[k][i]).norm() / rn);
                worst = worst.max((l[i] - e.conj() * self.left[k][i]).norm() / ln);
            }
        }
        worst
    }

    /// Rescales `|n⟩ → α_n|n⟩`, `|ñ⟩ → |ñ⟩/α_n*`, which preserves biorthogonality.
    pub fn rescaled(&self, factors: &[Complex<T>]) -> Result<Self> {
        if factors.len() != self.dim() {
            return Err(Error::DimensionMismatch("one factor per eigenvector".into()));
        }
        if let Some(k) = factors.iter().position(|f| f.is_zero()) {
            return Err(Error::ZeroGauge(k));
        }
        Ok(Self {
            eigenvalues: self.eigenvalues.clone(),
            right: self.right.iter().zip(factors).map(|(v, &a)| scale_vec(v, a)).collect(),
            left: self
                .left
                .iter()
                .zip(factors)
                .map(|(v, &a)| scale_vec(v, Complex::<T>::one() / a.conj()))
                .collect(),
            convention: self.convention,
        })
    }
}

/// Biorthogonal eigendecomposition of a nondegenerate matrix.
///
/// Eigenvalues are ordered by decreasing real part, ties broken by
/// decreasing imaginary part.
pub fn decompose<T: Real>(h: &ComplexMatrix<T>, degeneracy_threshold: T) -> Result<BiorthogonalSystem<T>> {
    if !h.is_finite() {
        return Err(Error::NonFinite("Hamiltonian has NaN/Inf entries".into()));
    }
    let n = h.dim();
    let pairs = eigenpairs(h)?;
    for i in 0..n {
        for j in i + 1..n {
            let gap = (pairs.values[i] - pairs.values[j]).norm();
            if gap <= degeneracy_threshold {
                return Err(Error::DegenerateSpectrum {
                    i,
                    j,
                    gap: gap.to_f64().unwrap_or(f64::NAN),
                    threshold: degeneracy_threshold.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (pairs.values[a], pairs.values[b]);
        y.re.partial_cmp(&x.re)
            .unwrap()
            .then(y.im.partial_cmp(&x.im).unwrap())
    });

    let mut eigenvalues = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for &k in &order {
        eigenvalues.push(pairs.values[k]);
        right.push(fix_phase(&pairs.vectors[k]));
    }
    // rows of V⁻¹ are the left partners ⟨ñ|
    let inv = ComplexMatrix::from_columns(&right).inverse()?;
    let left = (0..n)
        .map(|r| inv.row(r).into_iter().map(|z| z.conj()).collect())
        .collect();
    Ok(BiorthogonalSystem {
        eigenvalues,
        right,
        left,
        convention: GaugeConvention::LargestComponentReal,
    })
}

fn fix_phase<T: Real>(v: &[Complex<T>]) -> ComplexVector<T> {
    let nv = norm(v);
    let pivot = v
        .iter()
        .enumerate()
        .fold((0, T::zero()), |(bi, bm), (i, z)| {
            if z.norm() > bm * (T::one() + T::lit(1e-12)) {
                (i, z.norm())
            } else {
                (bi, bm)
            }
        })
        .0;
    let phase = v[pivot] / v[pivot].norm();
    scale_vec(v, Complex::<T>::one() / (phase * nv))
}

/// `Σ_n |n⟩ E_n ⟨ñ|`.
pub fn reconstruct<T: Real>(sys: &BiorthogonalSystem<T>) -> ComplexMatrix<T> {
    let n = sys.dim();
    let mut out = ComplexMatrix::zeros(n);
    for k in 0..n {
        out = &out + &ComplexMatrix::outer(&sys.right[k], &sys.left[k]).scale(sys.eigenvalues[k]);
    }
    out
}

/// Finite-difference rule for time derivatives along an [`EigenPath`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeScheme {
    /// Second-order central difference with the grid step.
    #[default]
    Central,
    /// Richardson extrapolation of central differences with steps `h` and `2h`
    /// (fourth order); needs two neighbours on each side.
    Richardson,
}

impl DerivativeScheme {
    pub fn reach(self) -> usize {
        match self {
            DerivativeScheme::Central => 1,
            DerivativeScheme::Richardson => 2,
        }
    }

    /// Derivative at index `k` of uniformly sampled values `x(j)`.
    pub(crate) fn apply<T: Real, V>(self, step: T, k: usize, x: impl Fn(usize) -> V) -> V
    where
        V: std::ops::Sub<Output = V> + std::ops::Mul<T, Output = V>,
    {
        let central = |r: usize| (x(k + r) - x(k - r)) * (T::one() / (T::lit(2.0) * step * T::from_usize(r).unwrap()));
        match self {
            DerivativeScheme::Central => central(1),
            DerivativeScheme::Richardson => {
                (central(1) * T::lit(4.0) - central(2)) * (T::one() / T::lit(3.0))
            }
        }
    }

    pub(crate) fn check<T: Real>(self, grid: &TimeGrid<T>, k: usize) -> Result<()> {
        let r = self.reach();
        if k < r || k + r >= grid.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                reason: format!(
                    "finite differences need {r} neighbour(s) on each side of a {}-point grid",
                    grid.len()
                ),
            });
        }
        Ok(())
    }
}

/// Biorthogonal systems sampled on a grid with continuous ordering and scale.
#[derive(Debug, Clone)]
pub struct EigenPath<T> {
    grid: TimeGrid<T>,
    systems: Vec<BiorthogonalSystem<T>>,
    scheme: DerivativeScheme,
}

impl<T: Real> EigenPath<T> {
    /// Decomposes `hamiltonians[k]` (sampled at `grid.time(k)`) and matches
    /// eigenvectors between neighbours.
    ///
    /// Matching is greedy on the normalized overlap `|⟨ñ(t_k)|u⟩|·‖n‖/‖u‖`;
    /// the new vectors are rescaled so that `⟨ñ_{k+1}|n_k⟩ = ⟨ñ_k|n_{k+1}⟩`,
    /// which keeps the scale drift second order in the step. `anchor`, when
    /// given, replaces the decomposition at the first grid point and fixes
    /// the ordering and scale of the whole path.
    pub fn build(
        grid: TimeGrid<T>,
        hamiltonians: &[ComplexMatrix<T>],
        degeneracy_threshold: T,
        anchor: Option<BiorthogonalSystem<T>>,
    ) -> Result<Self> {
        grid.check_len(hamiltonians.len(), "Hamiltonian samples")?;
        let mut systems: Vec<BiorthogonalSystem<T>> = Vec::with_capacity(grid.len());
        let first = match anchor {
            Some(a) => {
                if a.dim() != hamiltonians[0].dim() {
                    return Err(Error::DimensionMismatch("anchor dimension".into()));
                }
                let residual = a.eigen_residual(&hamiltonians[0]);
                let scale = hamiltonians[0].max_abs().max(T::one());
                if residual > T::lit(1e-8) * scale {
                    return Err(Error::InvalidParams(format!(
                        "anchor is not an eigensystem of the first Hamiltonian (residual {residual:e})"
                    )));
                }
                a
            }
            None => decompose(&hamiltonians[0], degeneracy_threshold)?,
        };
        systems.push(BiorthogonalSystem { convention: GaugeConvention::PathTransported, ..first });

        for (k, h) in hamiltonians.iter().enumerate().skip(1) {
            let fresh = decompose(h, degeneracy_threshold)?;
            let prev = &systems[k - 1];
            let n = prev.dim();
            let mut used = vec![false; n];
            let mut eigenvalues = Vec::with_capacity(n);
            let mut right = Vec::with_capacity(n);
            let mut left = Vec::with_capacity(n);
            for a in 0..n {
                let prev_norm = norm(&prev.right[a]);
                let mut best: Option<(usize, T)> = None;
                for (j, u) in fresh.right.iter().enumerate() {
                    if used[j] {
                        continue;
                    }
                    let overlap = braket(&prev.left[a], u).norm() * prev_norm / norm(u);
                    if best.map_or(true, |(_, o)| overlap > o) {
                        best = Some((j, overlap));
                    }
                }
                let (j, overlap) = best.expect("square eigen system");
                if overlap <= T::lit(MIN_PATH_OVERLAP) {
                    return Err(Error::PathDiscontinuity {
                        index: k,
                        overlap: overlap.to_f64().unwrap_or(f64::NAN),
                    });
                }
                used[j] = true;
                let u = &fresh.right[j];
                let u_left = &fresh.left[j];
                let forward = braket(&prev.left[a], u);
                let backward = braket(u_left, &prev.right[a]);
                let mut alpha = (backward / forward).sqrt();
                if (alpha * forward).re < T::zero() {
                    alpha = -alpha;
                }
                eigenvalues.push(fresh.eigenvalues[j]);
                right.push(scale_vec(u, alpha));
                left.push(scale_vec(u_left, Complex::<T>::one() / alpha.conj()));
            }
            systems.push(BiorthogonalSystem {
                eigenvalues,
                right,
                left,
                convention: GaugeConvention::PathTransported,
            });
        }
        Ok(Self { grid, systems, scheme: DerivativeScheme::Central })
    }

    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn systems(&self) -> &[BiorthogonalSystem<T>] {
        &self.systems
    }

    pub fn system(&self, k: usize) -> &BiorthogonalSystem<T> {
        &self.systems[k]
    }

    /// Smallest normalized overlap between matched neighbours.
    pub fn min_adjacent_overlap(&self) -> T {
        let mut worst = T::infinity();
        for w in self.systems.windows(2) {
            for a in 0..w[0].dim() {
                let o = braket(&w[0].left[a], &w[1].right[a]).norm() * norm(&w[0].right[a])
                    / norm(&w[1].right[a]);
                worst = worst.min(o);
            }
        }
        worst
    }

    /// Rescales every sample: `|n(t_k)⟩ → factor(k, n)·|n(t_k)⟩`.
    pub fn rescaled(&self, factor: impl Fn(usize, usize) -> Complex<T>) -> Result<Self> {
        let systems = self
            .systems
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let f: Vec<_> = (0..s.dim()).map(|n| factor(k, n)).collect();
                s.rescaled(&f)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: self.grid, systems, scheme: self.scheme })
    }

    /// `∂t|n⟩` at grid index `k`.
    pub fn right_derivative(&self, k: usize, n: usize) -> Result<ComplexVector<T>> {
        self.scheme.check(&self.grid, k)?;
        Ok(self.scheme.apply(self.grid.step(), k, |j| VecOps(self.systems[j].right[n].clone())).0)
    }

    /// `∂t|ñ⟩` at grid index `k`.
    pub fn left_derivative(&self, k: usize, n: usize) -> Result<ComplexVector<T>> {
        self.scheme.check(&self.grid, k)?;
        Ok(self.scheme.apply(self.grid.step(), k, |j| VecOps(self.systems[j].left[n].clone())).0)
    }

    /// Matrix of connections `C[m][n] = ⟨m̃|∂t n⟩`.
    fn connections(&self, k: usize) -> Result<ComplexMatrix<T>> {
        let sys = &self.systems[k];
        let n = sys.dim();
        let derivs = (0..n)
            .map(|b| self.right_derivative(k, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(ComplexMatrix::from_fn(n, |m, b| braket(&sys.left[m], &derivs[b])))
    }
}

#[derive(Clone)]
struct VecOps<T>(ComplexVector<T>);

impl<T: Real> std::ops::Sub for VecOps<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        VecOps(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl<T: Real> std::ops::Mul<T> for VecOps<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        VecOps(self.0.iter().map(|a| a * s).collect())
    }
}

/// Counterdiabatic Hamiltonian `i Σ_{n≠m} ⟨m̃|∂t n⟩ |m⟩⟨ñ|` at grid index `k`
/// (ħ = 1), in the original (bare) basis.
pub fn counterdiabatic_generic<T: Real>(path: &EigenPath<T>, k: usize) -> Result<ComplexMatrix<T>> {
    path.grid.check_index(k)?;
    let conn = path.connections(k)?;
    let sys = &path.systems[k];
    let n = sys.dim();
    let i = imag_unit::<T>();
    let mut out = ComplexMatrix::zeros(n);
    for m in 0..n {
        for b in 0..n {
            if m == b {
                continue;
            }
            out = &out + &ComplexMatrix::outer(&sys.right[m], &sys.left[b]).scale(i * conn[(m, b)]);
        }
    }
    Ok(out)
}

/// Original Hamiltonian in the adiabatic frame, `R̃†H₀R − iR̃†∂tR`, with
/// entries `E_n − i⟨ñ|∂t n⟩` on the diagonal and `−i⟨m̃|∂t n⟩` elsewhere.
pub fn adiabatic_frame_generic<T: Real>(path: &EigenPath<T>, k: usize) -> Result<ComplexMatrix<T>> {
    path.grid.check_index(k)?;
    let conn = path.connections(k)?;
    let sys = &path.systems[k];
    let i = imag_unit::<T>();
    Ok(ComplexMatrix::from_fn(sys.dim(), |m, b| {
        let base = if m == b { sys.eigenvalues[b] } else { Complex::zero() };
        base - i * conn[(m, b)]
    }))
}

/// The three members of the derivative identity obtained by differentiating
/// `⟨ñ|m⟩ = δ_nm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeIdentity<T> {
    /// `⟨ñ|∂t m⟩`
    pub direct: Complex<T>,
    /// `−⟨∂t ñ|m⟩`; equals `direct` for any biorthogonal path.
    pub partner: Complex<T>,
    /// `−(⟨m̃|∂t n⟩)*`; equals `direct` only when the connections are real
    /// up to the path gauge, e.g. for Hermitian paths with real vectors.
    pub conjugate_form: Complex<T>,
}

impl<T: Real> DerivativeIdentity<T> {
    pub fn partner_gap(&self) -> T {
        (self.direct - self.partner).norm()
    }

    pub fn conjugate_gap(&self) -> T {
        (self.direct - self.conjugate_form).norm()
    }
}

pub fn left_right_derivative_identity<T: Real>(
    path: &EigenPath<T>,
    k: usize,
    n: usize,
    m: usize,
) -> Result<DerivativeIdentity<T>> {
    path.grid.check_index(k)?;
    let dim = path.systems[k].dim();
    for idx in [n, m] {
        if idx >= dim {
            return Err(Error::IndexOutOfRange {
                index: idx,
                reason: format!("system has {dim} eigenvectors"),
            });
        }
    }
    let sys = &path.systems[k];
    let dm = path.right_derivative(k, m)?;
    let dn = path.right_derivative(k, n)?;
    let dn_left = path.left_derivative(k, n)?;
    Ok(DerivativeIdentity {
        direct: braket(&sys.left[n], &dm),
        partner: -braket(&dn_left, &sys.right[m]),
        conjugate_form: -braket(&sys.left[m], &dn).conj(),
    })
}

/// Eigenvalues of a real diagonal matrix, as a quick constructor for tests
/// and examples.
pub fn diagonal_system<T: Real>(values: &[T]) -> Result<BiorthogonalSystem<T>> {
    let entries: Vec<_> = values.iter().map(|&v| re(v)).collect();
    decompose(&ComplexMatrix::diagonal(&entries), T::lit(DEFAULT_DEGENERACY_THRESHOLD))
}
