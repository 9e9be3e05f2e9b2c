#![allow(dead_code)]

use pseudomode::entanglement::XState;
use pseudomode::hilbert::{self, ComplexMatrix, C64};
use rand::Rng;

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, n);
    (&g + g.adjoint()).scale(0.5)
}

/// G G† / tr, full rank with probability one.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, n);
    let rho = &g * g.adjoint();
    let tr = hilbert::trace(&rho);
    rho.unscale(tr.re)
}

/// Density matrix of rank `rank`.
pub fn random_low_rank_density<R: Rng>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, rank);
    let rho = &g * g.adjoint();
    let tr = hilbert::trace(&rho);
    rho.unscale(tr.re)
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).qr().q()
}

pub fn random_x_state<R: Rng>(rng: &mut R) -> XState {
    let raw: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    let s: f64 = raw.iter().sum();
    let [a, b, c, d] = raw.map(|p| p / s);
    let w = C64::from_polar(rng.gen::<f64>() * (a * d).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
    let z = C64::from_polar(rng.gen::<f64>() * (b * c).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
    XState { a, b, c, d, w, z }
}
