
use crate::error::{Error, Result};
use crate::linalg::{self, c, eig_hermitian_unchecked, ComplexMatrix, C64};

use super::MultipartiteState;

const UNITARITY_TOL: f64 = 1e-9;

/// One orthonormal basis per party; column `k` of `locals[n]` is `|k_n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBasis {
    locals: Vec<ComplexMatrix>,
}

impl ProductBasis {
    pub fn new(locals: Vec<ComplexMatrix>) -> Result<Self> {
        if locals.is_empty() {
            return Err(Error::DimensionMismatch("product basis needs at least one party".into()));
        }
        for (n, u) in locals.iter().enumerate() {
            if !u.is_square() {
                return Err(Error::DimensionMismatch(format!("local basis {n} is not square")));
            }
            let dev = linalg::max_abs_diff(&(u.adjoint() * u), &linalg::identity(u.nrows()));
            if dev > UNITARITY_TOL {
                return Err(Error::InvalidInput(format!(
                    "local basis {n} is not unitary (deviation {dev:.3e})"
                )));
            }
        }
        Ok(Self { locals })
    }

    pub(crate) fn from_locals_unchecked(locals: Vec<ComplexMatrix>) -> Self {
        Self { locals }
    }

    pub fn computational(dims: &[usize]) -> Self {
        Self::from_locals_unchecked(dims.iter().map(|&d| linalg::identity(d)).collect())
    }

    /// Fourier basis on every party (the Pauli-x eigenbasis for qubits).
    pub fn fourier(dims: &[usize]) -> Self {
        Self::from_locals_unchecked(dims.iter().map(|&d| fourier_matrix(d, 0.0)).collect())
    }

    /// Phase-shifted Fourier basis (the Pauli-y eigenbasis for qubits).
    pub fn fourier_shifted(dims: &[usize]) -> Self {
        Self::from_locals_unchecked(dims.iter().map(|&d| fourier_matrix(d, 0.5)).collect())
    }

    /// Eigenbases of the single-party marginals, in the deterministic
    /// eigensolver order.
    pub fn marginal_eigenbasis(state: &MultipartiteState) -> Self {
        Self::from_locals_unchecked(
            state
                .marginals()
                .iter()
                .map(|m| eig_hermitian_unchecked(m).eigenvectors)
                .collect(),
        )
    }

    /// Per-party choice between the computational and Fourier bases.
    pub fn mixed_pattern(dims: &[usize], fourier_on: impl Fn(usize) -> bool) -> Self {
        Self::from_locals_unchecked(
            dims.iter()
                .enumerate()
                .map(|(n, &d)| {
                    if fourier_on(n) {
                        fourier_matrix(d, 0.0)
                    } else {
                        linalg::identity(d)
                    }
                })
                .collect(),
        )
    }

    pub fn locals(&self) -> &[ComplexMatrix] {
        &self.locals
    }

    pub fn local(&self, party: usize) -> &ComplexMatrix {
        &self.locals[party]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.locals.iter().map(|u| u.nrows()).collect()
    }

    /// `U_1 (x) ... (x) U_N`; column `k` is the product ket `|k_1 ... k_N>`.
    pub fn unitary(&self) -> ComplexMatrix {
        linalg::tensor_product_all(self.locals.iter())
    }

    /// Replace one party's basis.
    pub fn with_local(&self, party: usize, u: ComplexMatrix) -> Self {
        let mut locals = self.locals.clone();
        locals[party] = u;
        Self { locals }
    }

    /// `anchor_n * V_n` for every party.
    pub fn compose(&self, rotations: &[ComplexMatrix]) -> Self {
        Self::from_locals_unchecked(
            self.locals
                .iter()
                .zip(rotations)
                .map(|(a, r)| a * r)
                .collect(),
        )
    }
}

fn fourier_matrix(d: usize, shift: f64) -> ComplexMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    let tau = std::f64::consts::TAU;
    ComplexMatrix::from_fn(d, d, |j, k| {
        let angle = tau * (j as f64) * (k as f64 + shift) / d as f64;
        C64::from_polar(norm, angle)
    })
}

/// Unconstrained coordinates for a product basis.
///
/// Party `n` of dimension `d` carries `d(d-1)` reals: the real and imaginary
/// parts of the strictly upper-triangular entries of an anti-Hermitian
/// generator `A` with zero diagonal. The local basis is `exp(A)`, which for a
/// qubit is a rotation by `|z|` about an axis set by `arg z` (two angles).
/// Diagonal phases and column orderings are deliberately not represented;
/// they do not change the induced dephasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisParameters {
    per_party: Vec<Vec<f64>>,
}

impl BasisParameters {
    pub fn len_for(d: usize) -> usize {
        d * (d - 1)
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            per_party: dims.iter().map(|&d| vec![0.0; Self::len_for(d)]).collect(),
        }
    }

    pub fn total_len(dims: &[usize]) -> usize {
        dims.iter().map(|&d| Self::len_for(d)).sum()
    }

    pub fn from_flat(dims: &[usize], flat: &[f64]) -> Result<Self> {
        if flat.len() != Self::total_len(dims) {
            return Err(Error::DimensionMismatch(format!(
                "expected {} basis parameters for dims {dims:?}, got {}",
                Self::total_len(dims),
                flat.len()
            )));
        }
        let mut offset = 0;
        let per_party = dims
            .iter()
            .map(|&d| {
                let n = Self::len_for(d);
                let chunk = flat[offset..offset + n].to_vec();
                offset += n;
                chunk
            })
            .collect();
        Ok(Self { per_party })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.per_party.iter().flatten().copied().collect()
    }

    pub fn party(&self, n: usize) -> &[f64] {
        &self.per_party[n]
    }

    /// Basis relative to the computational one.
    pub fn decode(&self) -> ProductBasis {
        ProductBasis::from_locals_unchecked(
            self.per_party
                .iter()
                .map(|p| local_unitary(dim_from_len(p.len()), p))
                .collect(),
        )
    }

    /// Basis `anchor_n * exp(A_n)`.
    pub fn decode_from(&self, anchor: &ProductBasis) -> ProductBasis {
        let rotations: Vec<ComplexMatrix> = anchor
            .locals()
            .iter()
            .zip(&self.per_party)
            .map(|(a, p)| local_unitary(a.nrows(), p))
            .collect();
        anchor.compose(&rotations)
    }
}

fn dim_from_len(len: usize) -> usize {
    // d(d-1) = len
    let d = (1.0 + (1.0 + 4.0 * len as f64).sqrt()) / 2.0;
    d.round() as usize
}

/// `exp(A)` for the zero-diagonal anti-Hermitian generator encoded by `params`.
pub fn local_unitary(d: usize, params: &[f64]) -> ComplexMatrix {
    debug_assert_eq!(params.len(), BasisParameters::len_for(d));
    if d == 2 {
        let z = c(params[0], params[1]);
        let r = z.norm();
        if r == 0.0 {
            return linalg::identity(2);
        }
        let (s, co) = r.sin_cos();
        let w = z * (s / r);
        return ComplexMatrix::from_row_slice(2, 2, &[c(co, 0.0), w, -w.conj(), c(co, 0.0)]);
    }
    // A = -iH with H Hermitian, so exp(A) = V exp(-i lambda) V^dagger.
    let mut h = ComplexMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            let a = c(params[k], params[k + 1]);
            k += 2;
            // H = iA
            h[(i, j)] = C64::i() * a;
            h[(j, i)] = (C64::i() * a).conj();
        }
    }
    let eig = eig_hermitian_unchecked(&h);
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (col, &lam) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lam);
        for r in 0..d {
            scaled[(r, col)] *= phase;
        }
    }
    scaled * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoded_bases_are_unitary() {
        let dims = [2, 3, 4];
        let n = BasisParameters::total_len(&dims);
        assert_eq!(n, 2 + 6 + 12);
        let flat: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.7).collect();
        let b = BasisParameters::from_flat(&dims, &flat).unwrap().decode();
        assert!(ProductBasis::new(b.locals().to_vec()).is_ok());
    }

    #[test]
    fn qubit_generator_matches_general_path() {
        let p = [0.4, -1.3];
        let closed = local_unitary(2, &p);
        // general path via a 2x2 Hermitian eigendecomposition
        let mut h = ComplexMatrix::zeros(2, 2);
        let a = c(p[0], p[1]);
        h[(0, 1)] = C64::i() * a;
        h[(1, 0)] = (C64::i() * a).conj();
        let eig = eig_hermitian_unchecked(&h);
        let general = {
            let v = &eig.eigenvectors;
            let mut s = v.clone();
            for (col, &lam) in eig.eigenvalues.iter().enumerate() {
                for r in 0..2 {
                    s[(r, col)] *= C64::from_polar(1.0, -lam);
                }
            }
            s * v.adjoint()
        };
        assert!(linalg::max_abs_diff(&closed, &general) < 1e-12);
    }

    #[test]
    fn zero_parameters_decode_to_anchor() {
        let dims = [2, 3];
        let anchor = ProductBasis::fourier(&dims);
        let b = BasisParameters::zeros(&dims).decode_from(&anchor);
        assert_eq!(b, anchor);
    }

    #[test]
    fn fourier_qubit_is_hadamard_like() {
        let f = ProductBasis::fourier(&[2]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = f.local(0);
        assert!((u[(0, 0)].re - s).abs() < 1e-15);
        assert!((u[(1, 1)].re + s).abs() < 1e-15);
    }

    #[test]
    fn non_unitary_rejected() {
        let m = linalg::diag(&[1.0, 0.5]);
        assert!(ProductBasis::new(vec![m]).is_err());
    }

    #[test]
    fn wrong_parameter_count_rejected() {
        assert!(BasisParameters::from_flat(&[2, 2], &[0.0; 3]).is_err());
    }
}
