//! Generators and dynamical maps for the three reservoir models.
//!
//! All rates are in units of the Markovian decay rate γ₀ = 4Ω²/Γ and the
//! atoms are resonant with the reservoir peak, so the free Hamiltonian is
//! removed by going to the rotating frame.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    self, annihilation, dressed, identity, kron, ket_bra, on_atom_a, on_atom_b, sandwich,
    sigma_minus, ComplexMatrix, C64, I,
};

/// Physical parameters of a reservoir/coupling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Ω, coupling of the pseudomode to the atoms.
    pub omega_coupling: f64,
    /// Γ, leakage rate of the pseudomode.
    pub gamma_pseudo: f64,
    /// Highest retained Fock level N_max of the pseudomode.
    pub fock_cutoff: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega_coupling: 0.05f64.sqrt(),
            gamma_pseudo: 0.2,
            fock_cutoff: 2,
        }
    }
}

impl ModelParams {
    pub fn new(omega_coupling: f64, gamma_pseudo: f64, fock_cutoff: usize) -> Result<Self> {
        let p = Self {
            omega_coupling,
            gamma_pseudo,
            fock_cutoff,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_coupling.is_finite() && self.omega_coupling > 0.0) {
            return Err(Error::param("omega", format!("must be > 0, got {}", self.omega_coupling)));
        }
        if !(self.gamma_pseudo.is_finite() && self.gamma_pseudo > 0.0) {
            return Err(Error::param("gamma", format!("must be > 0, got {}", self.gamma_pseudo)));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::param(
                "fock_cutoff",
                format!("must be >= 2, got {}", self.fock_cutoff),
            ));
        }
        Ok(())
    }

    /// γ₀ = 4Ω²/Γ.
    pub fn gamma0(&self) -> f64 {
        4.0 * self.omega_coupling * self.omega_coupling / self.gamma_pseudo
    }

    pub fn is_strong_coupling(&self) -> bool {
        self.gamma_pseudo / self.omega_coupling < 4.0
    }

    /// Number of retained Fock levels, N_max + 1.
    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn with_cutoff(mut self, fock_cutoff: usize) -> Self {
        self.fock_cutoff = fock_cutoff;
        self
    }
}

/// Markovian decay rate γ₀ = 4Ω²/Γ.
pub fn markov_rate(omega_coupling: f64, gamma_pseudo: f64) -> Result<f64> {
    if !(gamma_pseudo > 0.0) {
        return Err(Error::param("gamma", format!("must be > 0, got {gamma_pseudo}")));
    }
    Ok(4.0 * omega_coupling * omega_coupling / gamma_pseudo)
}

/// Lorentzian reservoir spectrum centred on the atomic frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub omega0: f64,
    pub params: ModelParams,
}

impl SpectralDensity {
    pub fn peak(&self) -> f64 {
        spectral_density_value(self, self.omega0)
    }
}

/// J(ω) = (Ω²/π) Γ / ((ω − ω₀)² + (Γ/2)²).
pub fn spectral_density_value(sd: &SpectralDensity, omega: f64) -> f64 {
    let p = &sd.params;
    let half_width = 0.5 * p.gamma_pseudo;
    let detuning = omega - sd.omega0;
    p.omega_coupling * p.omega_coupling / std::f64::consts::PI * p.gamma_pseudo
        / (detuning * detuning + half_width * half_width)
}

/// Which reservoir model drives the atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    CommonStructured,
    CommonMarkov,
    IndependentStructured,
}

impl Backend {
    pub const ALL: [Backend; 3] = [
        Backend::CommonStructured,
        Backend::CommonMarkov,
        Backend::IndependentStructured,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Backend::CommonStructured => "common_structured",
            Backend::CommonMarkov => "common_markov",
            Backend::IndependentStructured => "independent_structured",
        }
    }

    pub fn is_common(&self) -> bool {
        !matches!(self, Backend::IndependentStructured)
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::param("backend", format!("unknown backend `{s}`")))
    }
}

/// State space a Liouvillian acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorSpace {
    /// Dressed atoms ⊗ one pseudomode.
    DressedWithMode,
    /// Bare atoms only.
    BareAtoms,
    /// One qubit ⊗ its own pseudomode.
    QubitWithMode,
    /// Bare atoms ⊗ pseudomode A ⊗ pseudomode B.
    BareWithTwoModes,
}

/// A time-independent Lindblad generator in the column-stacking convention.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub matrix: ComplexMatrix,
    pub hilbert_dim: usize,
    /// Fock dimension of the single attached pseudomode (factor ordered last).
    pub fock_dim: Option<usize>,
    pub space: GeneratorSpace,
}

impl Liouvillian {
    /// Wraps an arbitrary superoperator acting on `hilbert_dim`-dimensional states.
    pub fn from_matrix(matrix: ComplexMatrix, hilbert_dim: usize, space: GeneratorSpace) -> Result<Self> {
        let d2 = hilbert_dim * hilbert_dim;
        if matrix.nrows() != d2 || matrix.ncols() != d2 {
            return Err(Error::dims(
                format!("{d2}x{d2}"),
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        Ok(Self {
            matrix,
            hilbert_dim,
            fock_dim: None,
            space,
        })
    }

    pub fn superop_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Applies the generator to a density matrix.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.hilbert_dim || rho.ncols() != self.hilbert_dim {
            return Err(Error::dims(self.hilbert_dim, rho.nrows()));
        }
        hilbert::unvectorize(&(&self.matrix * hilbert::vectorize(rho)), self.hilbert_dim)
    }
}

/// Superoperator of `ρ ↦ −i[H, ρ] + Σ_k r_k (J_k ρ J_k† − ½{J_k†J_k, ρ})`.
pub fn lindblad_superoperator(h: &ComplexMatrix, jumps: &[(f64, ComplexMatrix)]) -> ComplexMatrix {
    let n = h.nrows();
    let eye = identity(n);
    let mut l = (sandwich(h, &eye) - sandwich(&eye, h)).map(|z| -I * z);
    for (rate, j) in jumps {
        let jd = j.adjoint();
        let jdj = &jd * j;
        let d = sandwich(j, &jd) - (sandwich(&jdj, &eye) + sandwich(&eye, &jdj)).scale(0.5);
        l += d.scale(*rate);
    }
    l
}

/// Ladder coupling V = √2Ω (a|+><0| + a†|0><+| + a|2><+| + a†|+><2|) on dressed ⊗ Fock.
pub fn coupling_v(params: &ModelParams) -> ComplexMatrix {
    let n = params.fock_dim();
    let a = annihilation(n);
    let ad = a.adjoint();
    let g = std::f64::consts::SQRT_2 * params.omega_coupling;
    let up_1 = ket_bra(4, dressed::PLUS, dressed::GROUND);
    let up_2 = ket_bra(4, dressed::DOUBLE, dressed::PLUS);
    let raise = kron(&up_1, &a) + kron(&up_2, &a);
    let lower = kron(&up_1.transpose(), &ad) + kron(&up_2.transpose(), &ad);
    (raise + lower).scale(g)
}

/// Generator of the pseudomode master equation for two atoms in a common reservoir.
pub fn liouvillian_common_structured(params: &ModelParams) -> Liouvillian {
    let n = params.fock_dim();
    let v = coupling_v(params);
    let a_full = kron(&identity(4), &annihilation(n));
    Liouvillian {
        matrix: lindblad_superoperator(&v, &[(params.gamma_pseudo, a_full)]),
        hilbert_dim: 4 * n,
        fock_dim: Some(n),
        space: GeneratorSpace::DressedWithMode,
    }
}

/// Collective lowering operator σ₋ᴬ + σ₋ᴮ in the bare basis.
pub fn collective_lowering() -> ComplexMatrix {
    on_atom_a(&sigma_minus()) + on_atom_b(&sigma_minus())
}

/// Markovian common reservoir: collective decay with jump σ₋ᴬ + σ₋ᴮ at rate γ₀ (bare basis).
pub fn liouvillian_common_markov(gamma0: f64) -> Result<Liouvillian> {
    if !(gamma0 > 0.0) {
        return Err(Error::param("gamma0", format!("must be > 0, got {gamma0}")));
    }
    let h = ComplexMatrix::zeros(4, 4);
    Ok(Liouvillian {
        matrix: lindblad_superoperator(&h, &[(gamma0, collective_lowering())]),
        hilbert_dim: 4,
        fock_dim: None,
        space: GeneratorSpace::BareAtoms,
    })
}

/// One qubit coupled with strength Ω to its own leaky pseudomode (qubit ⊗ Fock).
pub fn liouvillian_single_qubit(params: &ModelParams, fock_dim: usize) -> Liouvillian {
    let a = kron(&identity(2), &annihilation(fock_dim));
    let sm = kron(&sigma_minus(), &identity(fock_dim));
    let v = (&a * sm.adjoint() + a.adjoint() * &sm).scale(params.omega_coupling);
    Liouvillian {
        matrix: lindblad_superoperator(&v, &[(params.gamma_pseudo, a)]),
        hilbert_dim: 2 * fock_dim,
        fock_dim: Some(fock_dim),
        space: GeneratorSpace::QubitWithMode,
    }
}

/// Both atoms with their own pseudomodes as one generator on bare ⊗ mode A ⊗ mode B.
pub fn liouvillian_independent_joint(params: &ModelParams, fock_dim: usize) -> Liouvillian {
    let modes = fock_dim * fock_dim;
    let a = annihilation(fock_dim);
    let a_a = kron(&identity(4), &kron(&a, &identity(fock_dim)));
    let a_b = kron(&identity(4), &kron(&identity(fock_dim), &a));
    let sm_a = kron(&on_atom_a(&sigma_minus()), &identity(modes));
    let sm_b = kron(&on_atom_b(&sigma_minus()), &identity(modes));
    let coupling = |sm: &ComplexMatrix, mode: &ComplexMatrix| mode * sm.adjoint() + mode.adjoint() * sm;
    let v = (coupling(&sm_a, &a_a) + coupling(&sm_b, &a_b)).scale(params.omega_coupling);
    Liouvillian {
        matrix: lindblad_superoperator(&v, &[(params.gamma_pseudo, a_a), (params.gamma_pseudo, a_b)]),
        hilbert_dim: 4 * modes,
        fock_dim: None,
        space: GeneratorSpace::BareWithTwoModes,
    }
}

/// Process matrix of one qubit after time `t` with its pseudomode started in vacuum.
pub fn dynamical_map_single_qubit(params: &ModelParams, t: f64) -> Result<ComplexMatrix> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let l = liouvillian_single_qubit(params, params.fock_dim());
    let propagator = hilbert::expm(&l.matrix.scale(t))?;
    single_qubit_map_from_propagator(&propagator, params.fock_dim())
}

/// Reduces a qubit ⊗ mode propagator to the 4×4 qubit process matrix.
pub(crate) fn single_qubit_map_from_propagator(
    propagator: &ComplexMatrix,
    fock_dim: usize,
) -> Result<ComplexMatrix> {
    let vac = ket_bra(fock_dim, 0, 0);
    let mut map = ComplexMatrix::zeros(4, 4);
    for j in 0..2 {
        for i in 0..2 {
            let input = kron(&ket_bra(2, i, j), &vac);
            let out = hilbert::unvectorize(&(propagator * hilbert::vectorize(&input)), 2 * fock_dim)?;
            let reduced = hilbert::partial_trace_second(&out, 2, fock_dim)?;
            map.set_column(i + 2 * j, &hilbert::vectorize(&reduced));
        }
    }
    Ok(map)
}

/// Applies a process matrix to a state.
pub fn apply_map(map: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = rho.nrows();
    if map.nrows() != d * d || map.ncols() != d * d {
        return Err(Error::dims(d * d, map.nrows()));
    }
    hilbert::unvectorize(&(map * hilbert::vectorize(rho)), d)
}

/// Two-atom process matrix Λ_A ⊗ Λ_B in the bare basis.
pub fn tensor_maps(map_a: &ComplexMatrix, map_b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::zeros(16, 16);
    for l in 0..4 {
        for k in 0..4 {
            let (a_row, b_row) = (k % 2, k / 2);
            let (a_col, b_col) = (l % 2, l / 2);
            let ea = apply_map(map_a, &ket_bra(2, a_row, a_col))?;
            let eb = apply_map(map_b, &ket_bra(2, b_row, b_col))?;
            let image = hilbert::atom_product(&ea, &eb);
            out.set_column(k + 4 * l, &hilbert::vectorize(&image));
        }
    }
    Ok(out)
}

/// Process matrix of two atoms in independent Lorentzian reservoirs.
pub fn dynamical_map_independent(params: &ModelParams, t: f64) -> Result<ComplexMatrix> {
    let single = dynamical_map_single_qubit(params, t)?;
    tensor_maps(&single, &single)
}

/// Choi matrix Σ_ij |i><j| ⊗ Λ(|i><j|) of a process on `d`-dimensional states.
pub fn choi_matrix(map: &ComplexMatrix, d: usize) -> Result<ComplexMatrix> {
    let mut choi = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let image = apply_map(map, &ket_bra(d, i, j))?;
            choi += kron(&ket_bra(d, i, j), &image);
        }
    }
    Ok(choi)
}

/// Total excitation number (atoms + pseudomode) on dressed ⊗ Fock.
pub fn excitation_operator(fock_dim: usize) -> ComplexMatrix {
    let atoms = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(2.0, 0.0),
    ]));
    let a = annihilation(fock_dim);
    kron(&atoms, &identity(fock_dim)) + kron(&identity(4), &(a.adjoint() * &a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{c, max_abs, max_abs_diff, vectorize};
    use approx::assert_relative_eq;

    fn defaults() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn default_parameters_give_unit_gamma0() {
        let p = defaults();
        assert_relative_eq!(p.gamma0(), 1.0, epsilon = 1e-15);
        assert!(p.is_strong_coupling());
        assert_relative_eq!(p.gamma_pseudo / p.omega_coupling, 0.8f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn markov_rate_examples() {
        assert_relative_eq!(markov_rate(0.05f64.sqrt(), 0.2).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(markov_rate(0.0, 0.2).unwrap(), 0.0);
        assert_relative_eq!(markov_rate(1.0, 4.0).unwrap(), 1.0);
        assert!(markov_rate(1.0, 0.0).is_err());
        assert!(markov_rate(1.0, -1.0).is_err());
        // Γ/Ω = 4 is the boundary, not strong coupling.
        assert!(!ModelParams::new(1.0, 4.0, 2).unwrap().is_strong_coupling());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.1, 0.2, 1).is_err());
        assert!(ModelParams::new(0.0, 0.2, 2).is_err());
        assert!(ModelParams::new(0.1, -0.2, 2).is_err());
    }

    #[test]
    fn spectral_density_peak_and_half_width() {
        let sd = SpectralDensity {
            omega0: 10.0,
            params: defaults(),
        };
        let peak = sd.peak();
        assert_relative_eq!(peak, defaults().gamma0() / std::f64::consts::PI, max_relative = 1e-14);
        let hw = defaults().gamma_pseudo / 2.0;
        assert_relative_eq!(spectral_density_value(&sd, 10.0 + hw), peak / 2.0, max_relative = 1e-14);
        assert_relative_eq!(spectral_density_value(&sd, 10.0 - hw), peak / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn coupling_structure() {
        let p = defaults();
        let v = coupling_v(&p);
        let labels = hilbert::BasisLabels::new(p.fock_dim());
        assert!(max_abs_diff(&v, &v.adjoint()) == 0.0);
        for n in 0..p.fock_dim() {
            let row = labels.index(dressed::MINUS, n);
            assert!(v.row(row).iter().all(|z| z.norm() == 0.0));
            assert!(v.column(row).iter().all(|z| z.norm() == 0.0));
        }
        let elem = v[(labels.index(dressed::PLUS, 0), labels.index(dressed::GROUND, 1))];
        assert_relative_eq!(elem.re, 2f64.sqrt() * p.omega_coupling, epsilon = 1e-15);
        assert_eq!(elem.im, 0.0);
    }

    #[test]
    fn dark_states_are_stationary() {
        let p = defaults();
        let l = liouvillian_common_structured(&p);
        let labels = hilbert::BasisLabels::new(p.fock_dim());
        for atom in [dressed::GROUND, dressed::MINUS] {
            let idx = labels.index(atom, 0);
            let rho = ket_bra(4 * p.fock_dim(), idx, idx);
            assert!(max_abs(&l.apply(&rho).unwrap()) < 1e-15);
        }
        let m = liouvillian_common_markov(1.0).unwrap();
        let t = hilbert::dressed_transform();
        let minus = t.adjoint() * ket_bra(4, dressed::MINUS, dressed::MINUS) * &t;
        assert!(max_abs(&m.apply(&minus).unwrap()) < 1e-15);
        assert!(max_abs(&m.apply(&ket_bra(4, 0, 0)).unwrap()) < 1e-15);
    }

    #[test]
    fn trace_preservation_of_all_generators() {
        let p = defaults();
        let gens = [
            liouvillian_common_structured(&p),
            liouvillian_common_markov(p.gamma0()).unwrap(),
            liouvillian_single_qubit(&p, 3),
            liouvillian_independent_joint(&p, 2),
        ];
        for l in gens {
            let vec_id = vectorize(&identity(l.hilbert_dim));
            let row = vec_id.transpose() * &l.matrix;
            assert!(row.iter().all(|z| z.norm() < 1e-12), "{:?}", l.space);
        }
    }

    #[test]
    fn maps_at_time_zero_are_identity() {
        let p = defaults();
        let single = dynamical_map_single_qubit(&p, 0.0).unwrap();
        assert!(max_abs_diff(&single, &identity(4)) < 1e-15);
        let two = dynamical_map_independent(&p, 0.0).unwrap();
        assert!(max_abs_diff(&two, &identity(16)) < 1e-15);
        assert!(matches!(dynamical_map_single_qubit(&p, -1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn independent_map_fixes_ground_and_factorises() {
        let p = defaults();
        let map = dynamical_map_independent(&p, 3.7).unwrap();
        let gg = ket_bra(4, 0, 0);
        assert!(max_abs_diff(&apply_map(&map, &gg).unwrap(), &gg) < 1e-14);

        let single = dynamical_map_single_qubit(&p, 3.7).unwrap();
        let mut rho_a = ComplexMatrix::from_row_slice(2, 2, &[c(0.3), c(0.2), c(0.2), c(0.7)]);
        rho_a[(0, 1)] = C64::new(0.1, 0.25);
        rho_a[(1, 0)] = C64::new(0.1, -0.25);
        let rho_b = ComplexMatrix::from_row_slice(2, 2, &[c(0.9), c(0.05), c(0.05), c(0.1)]);
        let out = apply_map(&map, &hilbert::atom_product(&rho_a, &rho_b)).unwrap();
        let expected = hilbert::atom_product(
            &apply_map(&single, &rho_a).unwrap(),
            &apply_map(&single, &rho_b).unwrap(),
        );
        assert!(max_abs_diff(&out, &expected) < 1e-10);
    }

    #[test]
    fn superradiant_population_decays_at_twice_gamma0() {
        let gamma0 = 1.3;
        let l = liouvillian_common_markov(gamma0).unwrap();
        let t = hilbert::dressed_transform();
        let plus = t.adjoint() * ket_bra(4, dressed::PLUS, dressed::PLUS) * &t;
        for time in [0.1, 0.5, 1.0, 2.5] {
            let prop = hilbert::expm(&l.matrix.scale(time)).unwrap();
            let out = hilbert::unvectorize(&(prop * vectorize(&plus)), 4).unwrap();
            let pop = hilbert::to_dressed(&out)[(dressed::PLUS, dressed::PLUS)].re;
            assert_relative_eq!(pop, (-2.0 * gamma0 * time).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn single_qubit_population_oscillates_only_in_strong_coupling() {
        let excited_pop = |p: &ModelParams, t: f64| {
            let map = dynamical_map_single_qubit(p, t).unwrap();
            apply_map(&map, &ket_bra(2, 1, 1)).unwrap()[(1, 1)].re
        };
        let is_monotone = |p: &ModelParams, t_max: f64| {
            let pops: Vec<f64> = (0..=400).map(|k| excited_pop(p, t_max * k as f64 / 400.0)).collect();
            pops.windows(2).all(|w| w[1] <= w[0] + 1e-13)
        };
        assert!(!is_monotone(&defaults(), 30.0));
        // Γ/Ω = 40: deep Markovian regime, γ₀ = 0.1.
        let markovian = ModelParams::new(1.0, 40.0, 2).unwrap();
        assert!(is_monotone(&markovian, 60.0));
        // Weak-coupling limit approaches e^{-γ₀ t}.
        let t = 10.0;
        assert_relative_eq!(
            excited_pop(&markovian, t),
            (-markovian.gamma0() * t).exp(),
            max_relative = 2e-2
        );
    }

    #[test]
    fn excitation_operator_commutes_with_coupling() {
        let p = defaults();
        let n = excitation_operator(p.fock_dim());
        let v = coupling_v(&p);
        assert!(max_abs(&(&n * &v - &v * &n)) < 1e-15);
    }
}
