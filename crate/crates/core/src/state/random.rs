//! Seeded sampling: induced-measure mixed states and Haar-random bases.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, C64};

use super::{MultipartiteState, ProductBasis};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    // column-major fill keeps the stream order independent of nalgebra internals
    let mut m = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = gaussian(rng);
        }
    }
    m
}

/// Haar-random unitary: Gram-Schmidt on a Ginibre matrix (QR with a
/// positive diagonal).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ginibre(d, d, rng);
    for j in 0..d {
        for k in 0..j {
            let overlap = m.column(k).dotc(&m.column(j));
            let proj = m.column(k) * overlap;
            let mut col = m.column_mut(j);
            col -= proj;
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
    m
}

/// Uniformly random unit ket.
pub fn random_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<C64> {
    let v = DVector::from_iterator(d, (0..d).map(|_| gaussian(rng)));
    let n = v.norm();
    v.unscale(n)
}

/// One uniformly random unit ket per party.
pub fn random_product_ket<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Vec<DVector<C64>> {
    dims.iter().map(|&d| random_ket(d, rng)).collect()
}

/// Mixed state from the induced measure: a Haar-random pure state on the
/// system plus a `rank`-dimensional ancilla, ancilla traced out.
pub fn random_state(dims: &[usize], rank: usize, seed: u64) -> Result<MultipartiteState> {
    let total: usize = dims.iter().product();
    if rank == 0 || rank > total {
        return Err(Error::InvalidInput(format!(
            "rank {rank} must lie in 1..={total}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let g = ginibre(total, rank, &mut rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    MultipartiteState::validate(dims, rho.unscale(tr))
}

pub fn random_product_basis(dims: &[usize], seed: u64) -> ProductBasis {
    let mut rng = rng_from_seed(seed);
    ProductBasis::from_locals_unchecked(dims.iter().map(|&d| haar_unitary(d, &mut rng)).collect())
}
