//! Initial states, backend dispatch and concurrence pipelines.

use serde::{Deserialize, Serialize};

use crate::entanglement::{self, XState, X_STATE_TOL};
use crate::error::{Error, Result};
use crate::hilbert::{self, bare, dressed, ket_bra, ComplexMatrix, ComplexVector, C64};
use crate::model::{self, Backend, Liouvillian, ModelParams};
use crate::propagate::{self, check_state, DopriOptions, PointDiagnostics, StepPropagator, TimeGrid, Trajectory};

mod detect;
mod sweep;

pub use detect::{detect_death_intervals, detect_death_intervals_refined, DeathInterval, DeathIntervals};
pub use sweep::{alpha_grid, sweep, sweep_with, SweepSurface};

/// Threshold on max(C₁, C₂) used to call a point disentangled.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    /// α|00> + e^{iθ}√(1−α²)|11>
    Entangled,
    /// Both atoms in α²|0><0| + (1−α²)|1><1|.
    Factorized,
    /// α|10> + √(1−α²)|01>
    SingleExcitation,
}

impl StateFamily {
    pub fn name(&self) -> &'static str {
        match self {
            StateFamily::Entangled => "entangled",
            StateFamily::Factorized => "factorized",
            StateFamily::SingleExcitation => "single_excitation",
        }
    }
}

impl std::str::FromStr for StateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entangled" => Ok(StateFamily::Entangled),
            "factorized" => Ok(StateFamily::Factorized),
            "single_excitation" => Ok(StateFamily::SingleExcitation),
            _ => Err(Error::param("family", format!("unknown family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialStateSpec {
    pub family: StateFamily,
    pub alpha_sq: f64,
    /// Relative phase of the |11> amplitude; only used by the entangled family.
    pub theta: f64,
}

impl InitialStateSpec {
    pub fn entangled(alpha_sq: f64, theta: f64) -> Self {
        Self {
            family: StateFamily::Entangled,
            alpha_sq,
            theta,
        }
    }

    pub fn factorized(alpha_sq: f64) -> Self {
        Self {
            family: StateFamily::Factorized,
            alpha_sq,
            theta: 0.0,
        }
    }

    pub fn single_excitation(alpha_sq: f64) -> Self {
        Self {
            family: StateFamily::SingleExcitation,
            alpha_sq,
            theta: 0.0,
        }
    }

    /// Bare-basis density matrix.
    pub fn density(&self) -> Result<ComplexMatrix> {
        match self.family {
            StateFamily::Entangled => initial_entangled(self.alpha_sq, self.theta),
            StateFamily::Factorized => initial_factorized(self.alpha_sq),
            StateFamily::SingleExcitation => initial_single_excitation(self.alpha_sq),
        }
    }
}

fn check_alpha_sq(alpha_sq: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha_sq) {
        Ok(())
    } else {
        Err(Error::param("alpha_sq", format!("must lie in [0, 1], got {alpha_sq}")))
    }
}

fn pure_density(psi: &ComplexVector) -> ComplexMatrix {
    psi * psi.adjoint()
}

pub fn initial_entangled(alpha_sq: f64, theta: f64) -> Result<ComplexMatrix> {
    check_alpha_sq(alpha_sq)?;
    let mut psi = ComplexVector::zeros(4);
    psi[bare::GG] = hilbert::c(alpha_sq.sqrt());
    psi[bare::EE] = C64::from_polar((1.0 - alpha_sq).sqrt(), theta);
    Ok(pure_density(&psi))
}

pub fn initial_factorized(alpha_sq: f64) -> Result<ComplexMatrix> {
    check_alpha_sq(alpha_sq)?;
    let single = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![
        hilbert::c(alpha_sq),
        hilbert::c(1.0 - alpha_sq),
    ]));
    Ok(hilbert::atom_product(&single, &single))
}

pub fn initial_single_excitation(alpha_sq: f64) -> Result<ComplexMatrix> {
    check_alpha_sq(alpha_sq)?;
    let mut psi = ComplexVector::zeros(4);
    psi[bare::EG] = hilbert::c(alpha_sq.sqrt());
    psi[bare::GE] = hilbert::c((1.0 - alpha_sq).sqrt());
    Ok(pure_density(&psi))
}

/// Dressed atomic state ⊗ pseudomode vacuum.
pub fn embed_with_mode_vacuum(rho_atoms: &ComplexMatrix, fock_dim: usize) -> Result<ComplexMatrix> {
    if rho_atoms.shape() != (4, 4) {
        return Err(Error::dims("4x4", format!("{}x{}", rho_atoms.nrows(), rho_atoms.ncols())));
    }
    if fock_dim == 0 {
        return Err(Error::param("fock_dim", "must be positive"));
    }
    Ok(hilbert::kron(&hilbert::to_dressed(rho_atoms), &ket_bra(fock_dim, 0, 0)))
}

/// ⟨−|ρ|−⟩ of a bare-basis atomic state.
pub fn subradiant_population(rho_bare: &ComplexMatrix) -> f64 {
    let p = rho_bare[(bare::EG, bare::EG)] + rho_bare[(bare::GE, bare::GE)]
        - rho_bare[(bare::EG, bare::GE)]
        - rho_bare[(bare::GE, bare::EG)];
    0.5 * p.re
}

/// Fock dimension that is exact for one excitation per pseudomode.
const INDEPENDENT_ORACLE_FOCK: usize = 2;

enum Engine {
    /// Dressed atoms ⊗ common pseudomode.
    Pseudomode(Liouvillian),
    /// Bare atoms with collective Markovian decay.
    Markov(Liouvillian),
    /// One qubit ⊗ its pseudomode; the two-atom map is the tensor square.
    Independent(Liouvillian),
}

/// A reservoir model ready to evolve bare-basis two-atom states.
pub struct Dynamics {
    backend: Backend,
    params: ModelParams,
    engine: Engine,
    tolerances: hilbert::DensityTolerances,
}

impl Dynamics {
    pub fn new(backend: Backend, params: ModelParams) -> Result<Self> {
        params.validate()?;
        let engine = match backend {
            Backend::CommonStructured => Engine::Pseudomode(model::liouvillian_common_structured(&params)),
            Backend::CommonMarkov => Engine::Markov(model::liouvillian_common_markov(params.gamma0())?),
            Backend::IndependentStructured => {
                Engine::Independent(model::liouvillian_single_qubit(&params, params.fock_dim()))
            }
        };
        Ok(Self {
            backend,
            params,
            engine,
            tolerances: hilbert::DensityTolerances::default(),
        })
    }

    /// Tolerances applied to every propagated state (warn at 10×, fail at 1000×).
    pub fn with_tolerances(mut self, tolerances: hilbert::DensityTolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn tolerances(&self) -> &hilbert::DensityTolerances {
        &self.tolerances
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn generator(&self) -> &Liouvillian {
        match &self.engine {
            Engine::Pseudomode(l) | Engine::Markov(l) | Engine::Independent(l) => l,
        }
    }

    pub fn step_propagator(&self, dt: f64) -> Result<StepPropagator> {
        StepPropagator::new(self.generator(), dt)
    }

    fn check_atoms(rho: &ComplexMatrix) -> Result<()> {
        if rho.shape() != (4, 4) {
            return Err(Error::dims("4x4", format!("{}x{}", rho.nrows(), rho.ncols())));
        }
        hilbert::validate_density(rho, &hilbert::DensityTolerances::default()).map(|_| ())
    }

    /// Bare-basis atomic state at every grid point.
    pub fn evolve(&self, rho_bare: &ComplexMatrix, grid: &TimeGrid) -> Result<Trajectory> {
        let step = self.step_propagator(grid.step())?;
        self.evolve_with(&step, rho_bare, grid)
    }

    /// Like [`Dynamics::evolve`] with a precomputed step propagator for `grid.step()`.
    pub fn evolve_with(&self, step: &StepPropagator, rho_bare: &ComplexMatrix, grid: &TimeGrid) -> Result<Trajectory> {
        Self::check_atoms(rho_bare)?;
        if (step.dt - grid.step()).abs() > 1e-12 * grid.step().max(1.0) {
            return Err(Error::param("step", format!("propagator step {} != grid step {}", step.dt, grid.step())));
        }
        let tol = self.tolerances;
        let l = self.generator();
        match &self.engine {
            Engine::Pseudomode(_) | Engine::Markov(_) => {
                let v0 = propagate::evolve_to(l, &hilbert::vectorize(&self.prepare(rho_bare)?), grid.t_start)?;
                let mut states = Vec::with_capacity(grid.n_points);
                let mut diagnostics = Vec::with_capacity(grid.n_points);
                for v in step.sample(&v0, grid) {
                    let full = hilbert::unvectorize(&v, l.hilbert_dim)?;
                    diagnostics.push(check_state(&full, l.fock_dim, &tol)?);
                    states.push(self.reduce(&full)?);
                }
                Ok(Trajectory {
                    grid: *grid,
                    states,
                    diagnostics,
                })
            }
            Engine::Independent(_) => {
                let fock = self.params.fock_dim();
                let vac = ket_bra(fock, 0, 0);
                let mut columns = Vec::with_capacity(4);
                for j in 0..2 {
                    for i in 0..2 {
                        let input = hilbert::vectorize(&hilbert::kron(&ket_bra(2, i, j), &vac));
                        let v0 = propagate::evolve_to(l, &input, grid.t_start)?;
                        columns.push(step.sample(&v0, grid));
                    }
                }
                let mut states = Vec::with_capacity(grid.n_points);
                let mut diagnostics = Vec::with_capacity(grid.n_points);
                for k in 0..grid.n_points {
                    let mut single = ComplexMatrix::zeros(4, 4);
                    for (col, samples) in columns.iter().enumerate() {
                        let out = hilbert::unvectorize(&samples[k], 2 * fock)?;
                        let reduced = hilbert::partial_trace_second(&out, 2, fock)?;
                        single.set_column(col, &hilbert::vectorize(&reduced));
                    }
                    let map = model::tensor_maps(&single, &single)?;
                    let rho = model::apply_map(&map, rho_bare)?;
                    diagnostics.push(check_state(&rho, None, &tol)?);
                    states.push(rho);
                }
                Ok(Trajectory {
                    grid: *grid,
                    states,
                    diagnostics,
                })
            }
        }
    }

    /// Independent cross-check by adaptive Runge–Kutta on the full generator.
    ///
    /// For independent reservoirs this integrates both atoms and both pseudomodes jointly
    /// rather than composing single-qubit maps.
    pub fn evolve_rk(&self, rho_bare: &ComplexMatrix, grid: &TimeGrid) -> Result<Trajectory> {
        Self::check_atoms(rho_bare)?;
        let (l, v0) = match &self.engine {
            Engine::Pseudomode(l) | Engine::Markov(l) => (l.clone(), self.prepare(rho_bare)?),
            Engine::Independent(_) => {
                let joint = model::liouvillian_independent_joint(&self.params, INDEPENDENT_ORACLE_FOCK);
                let modes = INDEPENDENT_ORACLE_FOCK * INDEPENDENT_ORACLE_FOCK;
                (joint, hilbert::kron(rho_bare, &ket_bra(modes, 0, 0)))
            }
        };
        let vecs = propagate::sample_rk(&l, &hilbert::vectorize(&v0), grid, &DopriOptions::default())?;
        let tol = self.tolerances;
        let mut states = Vec::with_capacity(vecs.len());
        let mut diagnostics = Vec::with_capacity(vecs.len());
        for v in vecs {
            let full = hilbert::unvectorize(&v, l.hilbert_dim)?;
            diagnostics.push(check_state(&full, l.fock_dim, &tol)?);
            let reduced = match &self.engine {
                Engine::Independent(_) => {
                    hilbert::partial_trace_second(&full, 4, INDEPENDENT_ORACLE_FOCK * INDEPENDENT_ORACLE_FOCK)?
                }
                _ => self.reduce(&full)?,
            };
            states.push(reduced);
        }
        Ok(Trajectory {
            grid: *grid,
            states,
            diagnostics,
        })
    }

    /// Atomic state at a single time, by fresh propagation from t = 0.
    pub fn state_at(&self, rho_bare: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        Self::check_atoms(rho_bare)?;
        match &self.engine {
            Engine::Pseudomode(l) | Engine::Markov(l) => {
                let v = propagate::evolve_to(l, &hilbert::vectorize(&self.prepare(rho_bare)?), t)?;
                self.reduce(&hilbert::unvectorize(&v, l.hilbert_dim)?)
            }
            Engine::Independent(_) => {
                model::apply_map(&model::dynamical_map_independent(&self.params, t)?, rho_bare)
            }
        }
    }

    /// max(C₁, C₂) at time t.
    pub fn margin_at(&self, rho_bare: &ComplexMatrix, t: f64) -> Result<f64> {
        Ok(XState::from_density(&self.state_at(rho_bare, t)?)?.margin())
    }

    /// Long-time limit of the atomic state.
    pub fn asymptotic(&self, rho_bare: &ComplexMatrix) -> Result<ComplexMatrix> {
        Self::check_atoms(rho_bare)?;
        match &self.engine {
            Engine::Pseudomode(l) | Engine::Markov(l) => {
                let limit = propagate::asymptotic_state(l, &self.prepare(rho_bare)?)?;
                self.reduce(&limit)
            }
            Engine::Independent(l) => {
                let fock = self.params.fock_dim();
                let vac = ket_bra(fock, 0, 0);
                let mut single = ComplexMatrix::zeros(4, 4);
                for j in 0..2 {
                    for i in 0..2 {
                        let input = hilbert::vectorize(&hilbert::kron(&ket_bra(2, i, j), &vac));
                        let out = hilbert::unvectorize(&propagate::asymptotic_vector(l, &input)?, 2 * fock)?;
                        let reduced = hilbert::partial_trace_second(&out, 2, fock)?;
                        single.set_column(i + 2 * j, &hilbert::vectorize(&reduced));
                    }
                }
                model::apply_map(&model::tensor_maps(&single, &single)?, rho_bare)
            }
        }
    }

    /// Initial state in the generator's space.
    fn prepare(&self, rho_bare: &ComplexMatrix) -> Result<ComplexMatrix> {
        match &self.engine {
            Engine::Pseudomode(_) => embed_with_mode_vacuum(rho_bare, self.params.fock_dim()),
            Engine::Markov(_) => Ok(rho_bare.clone()),
            Engine::Independent(_) => Err(Error::param("backend", "independent reservoirs act by maps")),
        }
    }

    /// Back to the bare atomic basis.
    fn reduce(&self, full: &ComplexMatrix) -> Result<ComplexMatrix> {
        match &self.engine {
            Engine::Pseudomode(_) => Ok(hilbert::to_bare(&hilbert::partial_trace_pseudomode(
                full,
                self.params.fock_dim(),
            )?)),
            _ => Ok(full.clone()),
        }
    }
}

/// Concurrence and its diagnostics along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct ConcurrenceTrace {
    pub grid: TimeGrid,
    pub c: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub pop_minus: Vec<f64>,
    pub trace_err: Vec<f64>,
    /// Largest element off the main diagonal and antidiagonal.
    pub off_x: Vec<f64>,
}

impl ConcurrenceTrace {
    /// Builds the trace from bare-basis atomic states; every state must be of X form.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let n = traj.states.len();
        let mut out = Self {
            grid: traj.grid,
            c: Vec::with_capacity(n),
            c1: Vec::with_capacity(n),
            c2: Vec::with_capacity(n),
            pop_minus: Vec::with_capacity(n),
            trace_err: Vec::with_capacity(n),
            off_x: Vec::with_capacity(n),
        };
        for (rho, diag) in traj.states.iter().zip(&traj.diagnostics) {
            let check = entanglement::is_x_form(rho, X_STATE_TOL);
            if !check.is_x {
                return Err(Error::NotXForm {
                    max_off_x: check.max_off_x,
                });
            }
            let x = XState::from_density(rho)?;
            let (c1, c2) = x.branches();
            out.c.push(entanglement::concurrence_x(&x)?);
            out.c1.push(c1);
            out.c2.push(c2);
            out.pop_minus.push(subradiant_population(rho));
            out.trace_err.push(trace_error(diag, rho));
            out.off_x.push(check.max_off_x);
        }
        Ok(out)
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn margins(&self) -> Vec<f64> {
        self.c1.iter().zip(&self.c2).map(|(a, b)| a.max(*b)).collect()
    }
}

fn trace_error(diag: &PointDiagnostics, rho: &ComplexMatrix) -> f64 {
    diag.trace_err.max((hilbert::trace(rho) - hilbert::ONE).norm())
}

/// Full pipeline: initial state → evolution → atomic reduction → concurrence.
pub fn run_trace(
    spec: &InitialStateSpec,
    params: &ModelParams,
    backend: Backend,
    grid: &TimeGrid,
) -> Result<ConcurrenceTrace> {
    let dynamics = Dynamics::new(backend, *params)?;
    let traj = dynamics.evolve(&spec.density()?, grid)?;
    ConcurrenceTrace::from_trajectory(&traj)
}

/// Stationary concurrence k = α²(1−α²) reached from the factorized family.
pub fn asymptotic_concurrence_factorized(alpha_sq: f64) -> f64 {
    alpha_sq * (1.0 - alpha_sq)
}

/// Dressed-basis weights (|0>, |+>, |->, |2>) of a bare-basis state.
pub fn dressed_populations(rho_bare: &ComplexMatrix) -> [f64; 4] {
    let d = hilbert::to_dressed(rho_bare);
    [
        d[(dressed::GROUND, dressed::GROUND)].re,
        d[(dressed::PLUS, dressed::PLUS)].re,
        d[(dressed::MINUS, dressed::MINUS)].re,
        d[(dressed::DOUBLE, dressed::DOUBLE)].re,
    ]
}
