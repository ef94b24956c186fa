//! Named states: Bell-diagonal, W, four-qubit cluster, their closest
//! separable states, and the two-qubit state separating MID from discord.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{c, projector, tensor_product, ComplexMatrix, C64};

use super::MultipartiteState;

const DIST_TOL: f64 = 1e-9;

fn basis_ket(dim: usize, index: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[index] = c(1.0, 0.0);
    v
}

fn ket_from_bits(bits: &str) -> DVector<C64> {
    let index = usize::from_str_radix(bits, 2).expect("binary label");
    basis_ket(1 << bits.len(), index)
}

fn real_ket(amps: &[f64]) -> DVector<C64> {
    DVector::from_iterator(amps.len(), amps.iter().map(|&a| c(a, 0.0)))
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !x.is_finite() || x < -DIST_TOL) {
        return Err(Error::InvalidDistribution(format!(
            "entries must be non-negative: {p:?}"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DIST_TOL {
        return Err(Error::InvalidDistribution(format!("entries sum to {sum}, not 1")));
    }
    Ok(())
}

/// Bell basis in the fixed order `Phi+, Phi-, Psi+, Psi-`.
pub fn bell_basis() -> [DVector<C64>; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        real_ket(&[s, 0.0, 0.0, s]),
        real_ket(&[s, 0.0, 0.0, -s]),
        real_ket(&[0.0, s, s, 0.0]),
        real_ket(&[0.0, s, -s, 0.0]),
    ]
}

/// `sum_i lambda_i |Psi_i><Psi_i|` with `lambda` sorted non-increasing and
/// assigned to `Phi+, Phi-, Psi+, Psi-` in that order.
pub fn bell_diagonal(lambda: [f64; 4]) -> Result<MultipartiteState> {
    check_distribution(&lambda)?;
    let mut sorted = lambda;
    sorted.sort_by(|a, b| b.total_cmp(a));
    MultipartiteState::validate(&[2, 2], bell_mixture(&sorted))
}

/// Bell mixture with weights attached in basis order (no sorting).
pub(crate) fn bell_mixture(weights: &[f64; 4]) -> ComplexMatrix {
    bell_basis()
        .iter()
        .zip(weights)
        .fold(ComplexMatrix::zeros(4, 4), |acc, (v, &w)| acc + projector(v).scale(w))
}

/// `(|100> + |010> + |001>) / sqrt 3`
pub fn w_ket() -> DVector<C64> {
    (ket_from_bits("100") + ket_from_bits("010") + ket_from_bits("001")).unscale(3f64.sqrt())
}

/// `(|011> + |101> + |110>) / sqrt 3`
pub fn w_bar_ket() -> DVector<C64> {
    (ket_from_bits("011") + ket_from_bits("101") + ket_from_bits("110")).unscale(3f64.sqrt())
}

pub fn w_state() -> MultipartiteState {
    MultipartiteState::pure(&[2, 2, 2], &w_ket()).expect("W state is valid")
}

/// `8/27 |000><000| + 12/27 |W><W| + 6/27 |Wbar><Wbar| + 1/27 |111><111|`
pub fn closest_separable_w() -> MultipartiteState {
    let m = projector(&ket_from_bits("000")).scale(8.0 / 27.0)
        + projector(&w_ket()).scale(12.0 / 27.0)
        + projector(&w_bar_ket()).scale(6.0 / 27.0)
        + projector(&ket_from_bits("111")).scale(1.0 / 27.0);
    MultipartiteState::validate(&[2, 2, 2], m).expect("valid by construction")
}

fn plus() -> DVector<C64> {
    real_ket(&[std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2])
}

fn minus() -> DVector<C64> {
    real_ket(&[std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2])
}

fn product_ket(kets: &[DVector<C64>]) -> DVector<C64> {
    kets.iter()
        .skip(1)
        .fold(kets[0].clone(), |acc, k| acc.kronecker(k))
}

/// The four orthogonal product kets `|0+0+>, |1+1+>, |0-1->, |1-0->`.
fn cluster_terms() -> [DVector<C64>; 4] {
    let (z0, z1) = (basis_ket(2, 0), basis_ket(2, 1));
    let (p, m) = (plus(), minus());
    [
        product_ket(&[z0.clone(), p.clone(), z0.clone(), p.clone()]),
        product_ket(&[z1.clone(), p.clone(), z1.clone(), p]),
        product_ket(&[z0.clone(), m.clone(), z1.clone(), m.clone()]),
        product_ket(&[z1, m.clone(), z0, m]),
    ]
}

/// `(|0+0+> + |1+1+> + |0-1-> + |1-0->) / 2`
pub fn cluster_state_4_ket() -> DVector<C64> {
    cluster_terms()
        .iter()
        .fold(DVector::zeros(16), |acc, k| acc + k)
        .scale(0.5)
}

pub fn cluster_state_4() -> MultipartiteState {
    MultipartiteState::pure(&[2, 2, 2, 2], &cluster_state_4_ket()).expect("cluster state is valid")
}

/// Equal mixture of the four product kets making up the cluster state.
pub fn closest_separable_cluster4() -> MultipartiteState {
    let m = cluster_terms()
        .iter()
        .fold(ComplexMatrix::zeros(16, 16), |acc, k| acc + projector(k).scale(0.25));
    MultipartiteState::validate(&[2, 2, 2, 2], m).expect("valid by construction")
}

/// `(1-q) sum_ij p_ij |ij><ij|_zz + q/2 (|++><++| + |--><--|)`, with `p`
/// indexed `[p00, p01, p10, p11]`.
pub fn mid_counterexample(q: f64, p: [f64; 4]) -> Result<MultipartiteState> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidDistribution(format!("mixing weight q = {q} outside [0, 1]")));
    }
    check_distribution(&p)?;
    let z_part = p
        .iter()
        .enumerate()
        .fold(ComplexMatrix::zeros(4, 4), |acc, (k, &w)| {
            acc + projector(&basis_ket(4, k)).scale(w)
        });
    let pp = tensor_product(&projector(&plus()), &projector(&plus()));
    let mm = tensor_product(&projector(&minus()), &projector(&minus()));
    let x_part = (pp + mm).scale(0.5);
    MultipartiteState::validate(&[2, 2], z_part.scale(1.0 - q) + x_part.scale(q))
}
