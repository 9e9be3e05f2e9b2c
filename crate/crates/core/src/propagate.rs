//! Time evolution under a time-independent Liouvillian.

use nalgebra::{Schur, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{self, ComplexMatrix, ComplexVector, DensityReport, DensityTolerances, C64};
use crate::model::Liouvillian;

mod dopri;

pub use dopri::{integrate, DopriOptions};

/// Uniform time grid in units of 1/γ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        if !(t_start >= 0.0) {
            return Err(Error::param("t_start", format!("must be >= 0, got {t_start}")));
        }
        if !(t_end > t_start) || !t_end.is_finite() {
            return Err(Error::param("t_end", format!("must exceed t_start, got {t_end}")));
        }
        if n_points < 2 {
            return Err(Error::param("points", format!("need at least 2, got {n_points}")));
        }
        Ok(Self {
            t_start,
            t_end,
            n_points,
        })
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.n_points {
            self.t_end
        } else {
            self.t_start + k as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.time(k)).collect()
    }
}

/// Per-point health of a propagated state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointDiagnostics {
    pub trace_err: f64,
    pub hermiticity_err: f64,
    pub min_eigenvalue: f64,
    /// Population of the highest retained Fock level, when a pseudomode is attached.
    pub cutoff_population: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<ComplexMatrix>,
    pub diagnostics: Vec<PointDiagnostics>,
}

impl Trajectory {
    pub fn max_trace_err(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.trace_err).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_err(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.hermiticity_err).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest elementwise difference between two trajectories on the same grid.
    pub fn max_deviation(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| hilbert::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }
}

/// Checks a propagated state: warns above 10× tolerance and fails above 1000×.
pub fn check_state(
    rho: &ComplexMatrix,
    fock_dim: Option<usize>,
    tol: &DensityTolerances,
) -> Result<PointDiagnostics> {
    let report = DensityReport::measure(rho)?;
    if !report.within(&tol.scaled(1000.0)) {
        return Err(Error::InvalidDensity(report.describe()));
    }
    if !report.within(&tol.scaled(10.0)) {
        log::warn!("propagated state drifting: {}", report.describe());
    }
    Ok(PointDiagnostics {
        trace_err: report.trace_err,
        hermiticity_err: report.hermiticity_err,
        min_eigenvalue: report.min_eigenvalue,
        cutoff_population: fock_dim.map(|n| cutoff_population(rho, n)),
    })
}

fn cutoff_population(rho: &ComplexMatrix, fock_dim: usize) -> f64 {
    let sys = rho.nrows() / fock_dim;
    (0..sys)
        .map(|s| rho[(s * fock_dim + fock_dim - 1, s * fock_dim + fock_dim - 1)].re)
        .sum()
}

fn check_initial(l: &Liouvillian, rho0: &ComplexMatrix, tol: &DensityTolerances) -> Result<()> {
    if rho0.nrows() != l.hilbert_dim || rho0.ncols() != l.hilbert_dim {
        return Err(Error::dims(
            format!("{0}x{0}", l.hilbert_dim),
            format!("{}x{}", rho0.nrows(), rho0.ncols()),
        ));
    }
    hilbert::validate_density(rho0, tol).map(|_| ())
}

/// Dense one-step propagator exp(L Δt).
#[derive(Debug, Clone)]
pub struct StepPropagator {
    pub dt: f64,
    pub matrix: ComplexMatrix,
}

impl StepPropagator {
    pub fn new(l: &Liouvillian, dt: f64) -> Result<Self> {
        if dt < 0.0 {
            return Err(Error::NegativeTime(dt));
        }
        Ok(Self {
            dt,
            matrix: hilbert::expm(&l.matrix.scale(dt))?,
        })
    }

    /// Vectorised states on every grid point, starting from `v0` at `grid.t_start`.
    pub fn sample(&self, v0: &ComplexVector, grid: &TimeGrid) -> Vec<ComplexVector> {
        let mut out = Vec::with_capacity(grid.n_points);
        let mut v = v0.clone();
        let mut next = v0.clone();
        out.push(v.clone());
        for _ in 1..grid.n_points {
            next.gemv(C64::new(1.0, 0.0), &self.matrix, &v, C64::new(0.0, 0.0));
            std::mem::swap(&mut v, &mut next);
            out.push(v.clone());
        }
        out
    }
}

/// exp(L t) vec(ρ₀) without intermediate steps.
pub fn evolve_to(l: &Liouvillian, v0: &ComplexVector, t: f64) -> Result<ComplexVector> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(hilbert::expm(&l.matrix.scale(t))? * v0)
}

fn to_trajectory(
    l: &Liouvillian,
    vecs: Vec<ComplexVector>,
    grid: &TimeGrid,
    tol: &DensityTolerances,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(vecs.len());
    let mut diagnostics = Vec::with_capacity(vecs.len());
    for v in vecs {
        let rho = hilbert::unvectorize(&v, l.hilbert_dim)?;
        diagnostics.push(check_state(&rho, l.fock_dim, tol)?);
        states.push(rho);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        diagnostics,
    })
}

/// Exact propagation: state k is exp(L t_k) vec(ρ₀), built from one step propagator.
pub fn propagate_expm(l: &Liouvillian, rho0: &ComplexMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    propagate_expm_with(l, rho0, grid, &DensityTolerances::default())
}

pub fn propagate_expm_with(
    l: &Liouvillian,
    rho0: &ComplexMatrix,
    grid: &TimeGrid,
    tol: &DensityTolerances,
) -> Result<Trajectory> {
    check_initial(l, rho0, tol)?;
    let v0 = evolve_to(l, &hilbert::vectorize(rho0), grid.t_start)?;
    let step = StepPropagator::new(l, grid.step())?;
    to_trajectory(l, step.sample(&v0, grid), grid, tol)
}

/// Cross-check propagation by adaptive Dormand–Prince 5(4) at relative tolerance 1e-10.
pub fn propagate_rk(l: &Liouvillian, rho0: &ComplexMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    check_initial(l, rho0, &DensityTolerances::default())?;
    let vecs = sample_rk(l, &hilbert::vectorize(rho0), grid, &DopriOptions::default())?;
    to_trajectory(l, vecs, grid, &DensityTolerances::default())
}

/// Vectorised RK samples on the grid, starting from `v0` at t = 0.
pub fn sample_rk(
    l: &Liouvillian,
    v0: &ComplexVector,
    grid: &TimeGrid,
    opts: &DopriOptions,
) -> Result<Vec<ComplexVector>> {
    let rhs = |_t: f64, y: &ComplexVector, dy: &mut ComplexVector| {
        dy.gemv(C64::new(1.0, 0.0), &l.matrix, y, C64::new(0.0, 0.0));
    };
    let mut times = Vec::with_capacity(grid.n_points + 1);
    if grid.t_start > 0.0 {
        times.push(0.0);
    }
    times.extend(grid.times());
    let mut out = integrate(rhs, v0, &times, opts)?;
    if grid.t_start > 0.0 {
        out.remove(0);
    }
    Ok(out)
}

/// Threshold below which real and imaginary eigenvalue parts count as zero.
pub const KERNEL_TOL: f64 = 1e-10;

/// Long-time limit of exp(L t) ρ₀ by spectral projection onto the kernel of L.
pub fn asymptotic_state(l: &Liouvillian, rho0: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_initial(l, rho0, &DensityTolerances::default())?;
    let limit = asymptotic_vector(l, &hilbert::vectorize(rho0))?;
    hilbert::unvectorize(&limit, l.hilbert_dim)
}

/// Projects `v0` onto the kernel of `L` along the sum of its other generalised eigenspaces.
pub fn asymptotic_vector(l: &Liouvillian, v0: &ComplexVector) -> Result<ComplexVector> {
    let eigenvalues = generator_eigenvalues(&l.matrix);
    if let Some(bad) = eigenvalues.iter().find(|z| z.re > KERNEL_TOL) {
        return Err(Error::UnstableGenerator(bad.re));
    }
    let kernel_dim = eigenvalues.iter().filter(|z| z.re.abs() < KERNEL_TOL && z.im.abs() < KERNEL_TOL).count();
    if kernel_dim == 0 {
        return Ok(ComplexVector::zeros(v0.len()));
    }

    // Undamped oscillating components must not be excited.
    let mut checked: Vec<C64> = Vec::new();
    for z in eigenvalues
        .iter()
        .filter(|z| z.re.abs() < KERNEL_TOL && z.im.abs() >= KERNEL_TOL)
    {
        if checked.iter().any(|w| (w - z).norm() < 1e-8) {
            continue;
        }
        checked.push(*z);
        let multiplicity = eigenvalues
            .iter()
            .filter(|w| (*w - z).norm() < 1e-8)
            .count();
        let shifted = &l.matrix - ComplexMatrix::from_diagonal_element(v0.len(), v0.len(), *z);
        let weight = spectral_projection(&shifted, multiplicity, v0)?.norm();
        if weight > 1e-8 * v0.norm().max(1.0) {
            return Err(Error::NoLimit(z.im));
        }
    }
    spectral_projection(&l.matrix, kernel_dim, v0)
}

fn generator_eigenvalues(m: &ComplexMatrix) -> Vec<C64> {
    // Complex Schur form is upper triangular; its diagonal holds the spectrum.
    let (_, t) = Schur::new(m.clone()).unpack();
    t.diagonal().iter().copied().collect()
}

/// Projector onto the null space of a semisimple-at-zero matrix, applied to `v`.
fn spectral_projection(m: &ComplexMatrix, null_dim: usize, v: &ComplexVector) -> Result<ComplexVector> {
    let n = m.nrows();
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.ok_or_else(|| Error::Projection("missing U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Projection("missing V".into()))?;
    // Singular values are sorted descending; the last `null_dim` span the kernels.
    let right = v_t.rows(n - null_dim, null_dim).adjoint();
    let left = u.columns(n - null_dim, null_dim).into_owned();
    let gram = left.adjoint() * &right;
    let coeffs = gram
        .lu()
        .solve(&(left.adjoint() * v))
        .ok_or_else(|| Error::Projection("zero eigenvalue is not semisimple".into()))?;
    Ok(right * coeffs)
}
