//! Dense complex linear algebra for the two-atom + pseudomode Hilbert space.
//!
//! Conventions used everywhere in the crate:
//!
//! * bare atomic basis `{|00>, |10>, |01>, |11>}`, index `a + 2 b` where `a`
//!   and `b` are the excitation numbers of atoms A and B;
//! * dressed atomic basis `{|0>, |+>, |->, |2>}` with `|±> = (|10> ± |01>)/√2`;
//! * composite spaces are ordered `kron(system, mode)`, so the mode index
//!   runs fastest;
//! * operators are vectorised by column stacking, `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.
//!   `nalgebra` stores matrices column-major, so `vec` is just the storage slice.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Index constants for the bare atomic basis.
pub mod bare {
    pub const GG: usize = 0;
    /// Atom A excited, atom B ground.
    pub const EG: usize = 1;
    /// Atom A ground, atom B excited.
    pub const GE: usize = 2;
    pub const EE: usize = 3;
}

/// Index constants for the dressed atomic basis.
pub mod dressed {
    pub const GROUND: usize = 0;
    pub const PLUS: usize = 1;
    pub const MINUS: usize = 2;
    pub const DOUBLE: usize = 3;
}

/// Labels of the atomic bases and the pseudomode Fock ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLabels {
    pub fock_dim: usize,
}

impl BasisLabels {
    pub const ATOMIC_BARE: [&'static str; 4] = ["|00>", "|10>", "|01>", "|11>"];
    pub const ATOMIC_DRESSED: [&'static str; 4] = ["|0>", "|+>", "|->", "|2>"];

    pub fn new(fock_dim: usize) -> Self {
        Self { fock_dim }
    }

    /// Index of `|atom, n>` in the dressed ⊗ Fock space.
    pub fn index(&self, atom: usize, n: usize) -> usize {
        atom * self.fock_dim + n
    }

    pub fn label(&self, index: usize) -> String {
        let atom = index / self.fock_dim;
        let n = index % self.fock_dim;
        format!("{},{}", Self::ATOMIC_DRESSED[atom], n)
    }
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest elementwise modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

/// Single-qubit lowering operator `|0><1|` in the basis `{|0>, |1>}`.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

/// Embeds a single-qubit operator on atom A into the bare two-atom basis.
pub fn on_atom_a(op: &ComplexMatrix) -> ComplexMatrix {
    kron(&identity(2), op)
}

/// Embeds a single-qubit operator on atom B into the bare two-atom basis.
pub fn on_atom_b(op: &ComplexMatrix) -> ComplexMatrix {
    kron(op, &identity(2))
}

/// Product state `ρ_A ⊗ ρ_B` laid out in the bare basis ordering.
pub fn atom_product(rho_a: &ComplexMatrix, rho_b: &ComplexMatrix) -> ComplexMatrix {
    kron(rho_b, rho_a)
}

/// Bosonic annihilation operator truncated to `fock_dim` levels.
pub fn annihilation(fock_dim: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(fock_dim, fock_dim);
    for n in 1..fock_dim {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

/// Projector `|i><j|` of dimension `dim`.
pub fn ket_bra(dim: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(i, j)] = ONE;
    m
}

/// Unitary mapping bare-basis coordinates to dressed-basis coordinates.
pub fn dressed_transform() -> ComplexMatrix {
    let h = c(std::f64::consts::FRAC_1_SQRT_2);
    let mut t = ComplexMatrix::zeros(4, 4);
    t[(dressed::GROUND, bare::GG)] = ONE;
    t[(dressed::PLUS, bare::EG)] = h;
    t[(dressed::PLUS, bare::GE)] = h;
    t[(dressed::MINUS, bare::EG)] = h;
    t[(dressed::MINUS, bare::GE)] = -h;
    t[(dressed::DOUBLE, bare::EE)] = ONE;
    t
}

pub fn to_dressed(rho_bare: &ComplexMatrix) -> ComplexMatrix {
    let t = dressed_transform();
    &t * rho_bare * t.adjoint()
}

pub fn to_bare(rho_dressed: &ComplexMatrix) -> ComplexMatrix {
    let t = dressed_transform();
    t.adjoint() * rho_dressed * &t
}

/// Traces out the second tensor factor of a `kron(system, env)` operator.
pub fn partial_trace_second(
    rho: &ComplexMatrix,
    sys_dim: usize,
    env_dim: usize,
) -> Result<ComplexMatrix> {
    let n = sys_dim * env_dim;
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::dims(
            format!("{n}x{n}"),
            format!("{}x{}", rho.nrows(), rho.ncols()),
        ));
    }
    Ok(ComplexMatrix::from_fn(sys_dim, sys_dim, |i, j| {
        (0..env_dim)
            .map(|k| rho[(i * env_dim + k, j * env_dim + k)])
            .sum()
    }))
}

/// Reduces a dressed ⊗ Fock state to the 4×4 atomic state (dressed basis).
pub fn partial_trace_pseudomode(rho_full: &ComplexMatrix, fock_dim: usize) -> Result<ComplexMatrix> {
    if fock_dim == 0 {
        return Err(Error::param("fock_dim", "must be positive"));
    }
    partial_trace_second(rho_full, 4, fock_dim)
}

/// Column-stacking vectorisation.
pub fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &ComplexVector, dim: usize) -> Result<ComplexMatrix> {
    if v.len() != dim * dim {
        return Err(Error::dims(dim * dim, v.len()));
    }
    Ok(ComplexMatrix::from_column_slice(dim, dim, v.as_slice()))
}

/// Superoperator of `ρ ↦ A ρ B`.
pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    kron(&b.transpose(), a)
}

/// Matrix 1-norm (largest absolute column sum).
pub fn norm1(m: &ComplexMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which each Padé degree meets unit roundoff in double precision.
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// of degree 3, 5, 7, 9 or 13 (Higham 2005).
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    let eye = identity(n);
    let norm = norm1(a);

    let low_degree = [
        (THETA_3, &PADE_3[..]),
        (THETA_5, &PADE_5[..]),
        (THETA_7, &PADE_7[..]),
        (THETA_9, &PADE_9[..]),
    ];
    for (theta, b) in low_degree {
        if norm <= theta {
            let (u, v) = pade_low(a, b, &eye);
            return pade_solve(&u, &v);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scale(0.5f64.powi(s));
    let (u, v) = pade_13(&scaled, &eye);
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low(a: &ComplexMatrix, b: &[f64], eye: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let a2 = a * a;
    let mut power = eye.clone();
    let mut u = eye.scale(b[1]);
    let mut v = eye.scale(b[0]);
    for k in (2..b.len()).step_by(2) {
        power = &power * &a2;
        v += power.scale(b[k]);
        if k + 1 < b.len() {
            u += power.scale(b[k + 1]);
        }
    }
    (a * u, v)
}

fn pade_13(a: &ComplexMatrix, eye: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let b = &PADE_13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]);
    let u = a * (&a6 * inner_u
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + eye.scale(b[1]));
    let inner_v = a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]);
    let v = &a6 * inner_v + a6.scale(b[6]) + a4.scale(b[4]) + a2.scale(b[2]) + eye.scale(b[0]);
    (u, v)
}

fn pade_solve(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).ok_or(Error::Singular("Padé denominator"))
}

/// Tolerances for density-matrix validation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityTolerances {
    pub hermiticity: f64,
    pub trace: f64,
    /// Smallest admissible eigenvalue is `-positivity`.
    pub positivity: f64,
}

impl Default for DensityTolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            trace: 1e-10,
            positivity: 1e-8,
        }
    }
}

impl DensityTolerances {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            hermiticity: self.hermiticity * factor,
            trace: self.trace * factor,
            positivity: self.positivity * factor,
        }
    }
}

/// Measured deviations of a matrix from being a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DensityReport {
    pub hermiticity_err: f64,
    pub trace_err: f64,
    pub min_eigenvalue: f64,
}

impl DensityReport {
    pub fn measure(rho: &ComplexMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::NotSquare {
                rows: rho.nrows(),
                cols: rho.ncols(),
            });
        }
        let adj = rho.adjoint();
        let hermiticity_err = max_abs_diff(rho, &adj);
        let trace_err = (trace(rho) - ONE).norm();
        let herm = (rho + &adj).scale(0.5);
        let min_eigenvalue = SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            hermiticity_err,
            trace_err,
            min_eigenvalue,
        })
    }

    pub fn within(&self, tol: &DensityTolerances) -> bool {
        self.hermiticity_err <= tol.hermiticity
            && self.trace_err <= tol.trace
            && self.min_eigenvalue >= -tol.positivity
    }

    pub fn describe(&self) -> String {
        format!(
            "hermiticity error {:e}, trace error {:e}, min eigenvalue {:e}",
            self.hermiticity_err, self.trace_err, self.min_eigenvalue
        )
    }
}

pub fn validate_density(rho: &ComplexMatrix, tol: &DensityTolerances) -> Result<DensityReport> {
    let report = DensityReport::measure(rho)?;
    if report.within(tol) {
        Ok(report)
    } else {
        Err(Error::InvalidDensity(report.describe()))
    }
}

/// Hermitian square root with negative eigenvalues clamped to zero.
pub fn psd_sqrt(rho: &ComplexMatrix) -> ComplexMatrix {
    let herm = (rho + rho.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let roots = eig.eigenvalues.map(|l| c(l.max(0.0).sqrt()));
    &eig.eigenvectors * ComplexMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}
