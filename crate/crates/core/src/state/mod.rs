//! Multipartite states, local product bases, named families and sampling.

mod basis;
mod families;
mod file;
mod random;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    self, check_hermitian, eig_hermitian_unchecked, hermitian_part, ComplexMatrix, C64, PSD_TOL,
    TRACE_TOL,
};

pub use basis::{local_unitary, BasisParameters, ProductBasis};
pub use families::{
    bell_basis, bell_diagonal, closest_separable_cluster4, closest_separable_w, cluster_state_4,
    cluster_state_4_ket, mid_counterexample, w_bar_ket, w_ket, w_state,
};
pub(crate) use families::bell_mixture;
pub use file::{build_family, load_state_file, parse_state_json, MatrixJson, StateFile};
pub use random::{haar_unitary, random_ket, random_product_basis, random_product_ket, random_state, rng_from_seed};

/// Largest total Hilbert-space dimension accepted.
pub const MAX_TOTAL_DIM: usize = 64;

/// A density matrix together with its party-dimension signature.
#[derive(Debug, Clone)]
pub struct MultipartiteState {
    dims: Vec<usize>,
    rho: ComplexMatrix,
}

impl MultipartiteState {
    /// Validate `matrix` as a state on parties of dimensions `dims`.
    ///
    /// Eigenvalues in `[-PSD_TOL, 0)` are clipped and a trace drift of at
    /// most `TRACE_TOL` is renormalised away; anything worse is rejected.
    pub fn validate(dims: &[usize], matrix: ComplexMatrix) -> Result<Self> {
        check_dims(dims, &matrix)?;
        check_hermitian(&matrix).map_err(|e| match e {
            Error::NonHermitian { deviation } => {
                Error::NotAState(format!("not Hermitian (deviation {deviation:.3e})"))
            }
            other => other,
        })?;
        let mut rho = hermitian_part(&matrix);
        let eig = eig_hermitian_unchecked(&rho);
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotAState(format!(
                "not positive semidefinite (eigenvalue {min:.3e})"
            )));
        }
        if min < 0.0 {
            rho = eig.apply(|l| l.max(0.0));
        }
        let tr = linalg::trace(&rho).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotAState(format!("trace {tr:.12} is not 1")));
        }
        rho.unscale_mut(tr);
        Ok(Self {
            dims: dims.to_vec(),
            rho,
        })
    }

    /// Normalised pure state `|psi><psi|`.
    pub fn pure(dims: &[usize], ket: &DVector<C64>) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::NotAState("zero vector".into()));
        }
        let v = ket.unscale(norm);
        Self::validate(dims, linalg::projector(&v))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.rho
    }

    /// Reduced state of one party.
    pub fn marginal(&self, party: usize) -> ComplexMatrix {
        linalg::partial_trace(&self.rho, &self.dims, &[party])
            .expect("party index checked by caller")
    }

    pub fn marginals(&self) -> Vec<ComplexMatrix> {
        (0..self.n_parties()).map(|p| self.marginal(p)).collect()
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        let eig = eig_hermitian_unchecked(&self.rho);
        linalg::shannon_entropy(&eig.eigenvalues)
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// `<psi|rho|psi>` for a normalised ket.
    pub fn overlap(&self, ket: &DVector<C64>) -> f64 {
        ket.dotc(&(&self.rho * ket)).re
    }

    /// `U rho U^dagger` for a unitary on the full space.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        Self::validate(&self.dims, u * &self.rho * u.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.rho, &other.rho)
    }
}

fn check_dims(dims: &[usize], matrix: &ComplexMatrix) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::DimensionMismatch("no parties given".into()));
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 2) {
        return Err(Error::DimensionMismatch(format!(
            "party dimension {d} is below 2"
        )));
    }
    let total: usize = dims.iter().product();
    if total > MAX_TOTAL_DIM {
        return Err(Error::DimensionMismatch(format!(
            "total dimension {total} exceeds the supported maximum {MAX_TOTAL_DIM}"
        )));
    }
    if !matrix.is_square() || matrix.nrows() != total {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} need a {total}x{total} matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    Ok(())
}
