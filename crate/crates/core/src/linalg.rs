//! Dense complex-matrix kernel.
//!
//! Everything downstream (states, dephasing, entropies, relative entropy)
//! reduces to the handful of routines in this module. Matrices are
//! `nalgebra::DMatrix<Complex<f64>>`; all logarithms are base 2.

use std::cmp::Ordering;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

/// Entrywise bound on `|M - M^dagger|` for operations that require Hermiticity.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Eigenvalues in `[-PSD_TOL, 0)` are clipped to zero; anything lower is an error.
pub const PSD_TOL: f64 = 1e-9;
/// Allowed drift of the trace from one.
pub const TRACE_TOL: f64 = 1e-9;
/// Weight of `x` on the kernel of `y` above which `S(x||y)` is infinite.
pub const SUPPORT_TOL: f64 = 1e-9;

const DEGENERACY_TOL: f64 = 1e-10;
const PHASE_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

/// `|v><v|`
pub fn projector(v: &DVector<C64>) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise deviation `|M - M^dagger|`.
pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let deviation = hermiticity_deviation(m);
    if deviation > HERMITICITY_TOL {
        return Err(Error::NonHermitian { deviation });
    }
    Ok(())
}

/// `(M + M^dagger) / 2`
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Spectral decomposition of a Hermitian matrix with a deterministic layout.
///
/// Eigenvalues are non-increasing. Within a degenerate cluster the
/// eigenvectors depend only on the eigenspace (not on solver internals):
/// the subspace is spanned by pivoted projections of the standard basis
/// vectors, each vector has its first non-negligible entry real positive,
/// and ties are ordered lexicographically.
#[derive(Debug, Clone)]
pub struct HermitianEigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V f(diag(lambda)) V^dagger`
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let fk = f(lam);
            scaled.column_mut(k).scale_mut(fk);
        }
        scaled * v.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|x| x)
    }

    /// Indices of eigenvalues that coincide with a neighbour.
    pub fn has_degeneracy(&self, tol: f64) -> bool {
        self.eigenvalues.windows(2).any(|w| (w[0] - w[1]).abs() <= tol)
    }
}

/// Hermitian eigendecomposition with tolerance check.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigensystem> {
    check_hermitian(m)?;
    Ok(eig_hermitian_unchecked(m))
}

/// Same as [`eig_hermitian`] but symmetrises the input instead of checking it.
pub fn eig_hermitian_unchecked(m: &ComplexMatrix) -> HermitianEigensystem {
    let n = m.nrows();
    let h = hermitian_part(m);
    let raw = nalgebra::linalg::SymmetricEigen::new(h);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        raw.eigenvalues[b]
            .partial_cmp(&raw.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&k| raw.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &raw.eigenvectors.column(src));
    }

    let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let tol = DEGENERACY_TOL * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end - 1] - values[end]).abs() <= tol {
            end += 1;
        }
        if end - start > 1 {
            canonicalize_cluster(&mut vectors, start, end);
        } else {
            normalize_phase(&mut vectors, start);
        }
        start = end;
    }

    HermitianEigensystem {
        eigenvalues: values,
        eigenvectors: vectors,
    }
}

fn normalize_phase(vectors: &mut ComplexMatrix, col: usize) {
    let n = vectors.nrows();
    let norm = vectors.column(col).norm();
    for i in 0..n {
        let z = vectors[(i, col)];
        if z.norm() > PHASE_TOL * norm.max(1.0) {
            let phase = z.conj() / z.norm();
            for r in 0..n {
                vectors[(r, col)] *= phase;
            }
            return;
        }
    }
}

fn lexicographic_desc(a: &DVector<C64>, b: &DVector<C64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x.re - y.re).abs() > 1e-12 {
            return y.re.partial_cmp(&x.re).unwrap_or(Ordering::Equal);
        }
        if (x.im - y.im).abs() > 1e-12 {
            return y.im.partial_cmp(&x.im).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Replace the columns `start..end` (an eigenspace) by a basis that depends
/// only on the span: greedy pivoted projections of standard basis vectors.
fn canonicalize_cluster(vectors: &mut ComplexMatrix, start: usize, end: usize) {
    let n = vectors.nrows();
    let k = end - start;
    let q = vectors.columns(start, k).into_owned();
    let proj = &q * q.adjoint();

    let mut chosen: Vec<DVector<C64>> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    for _ in 0..k {
        let mut best: Option<(usize, DVector<C64>, f64)> = None;
        for j in 0..n {
            if used[j] {
                continue;
            }
            let mut v: DVector<C64> = proj.column(j).into_owned();
            for u in &chosen {
                let overlap = u.dotc(&v);
                v -= u * overlap;
            }
            let norm = v.norm();
            let better = match &best {
                None => true,
                Some((_, _, bn)) => norm > bn + 1e-9,
            };
            if better {
                best = Some((j, v, norm));
            }
        }
        let (j, v, norm) = best.expect("cluster smaller than dimension");
        used[j] = true;
        chosen.push(v.unscale(norm));
    }

    for v in chosen.iter_mut() {
        let mut m = ComplexMatrix::from_column_slice(n, 1, v.as_slice());
        normalize_phase(&mut m, 0);
        *v = m.column(0).into_owned();
    }
    chosen.sort_by(lexicographic_desc);
    for (offset, v) in chosen.into_iter().enumerate() {
        vectors.set_column(start + offset, &v);
    }
}

/// Kronecker product `A (x) B`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn tensor_product_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| tensor_product(&acc, f))
}

pub fn kron_vectors(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    a.kronecker(b)
}

fn check_dims(m: &ComplexMatrix, dims: &[usize]) -> Result<usize> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != m.nrows() || !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "party dimensions {dims:?} (product {total}) do not match a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(total)
}

/// Digits of a flat index in the mixed radix given by `dims` (first party most significant).
pub fn split_index(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for (slot, &d) in digits.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    digits
}

fn join_index(digits: impl Iterator<Item = (usize, usize)>) -> usize {
    digits.fold(0, |acc, (digit, d)| acc * d + digit)
}

/// Reduced operator on the parties in `keep` (ascending order of parties).
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total = check_dims(m, dims)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.iter().any(|&p| p >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep set {keep:?} is empty or out of range for {} parties",
            dims.len()
        )));
    }
    let kept_dims: Vec<usize> = keep.iter().map(|&p| dims[p]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|p| !keep.contains(p)).collect();
    let kept_total: usize = kept_dims.iter().product();

    // (kept index, traced index) for every flat index.
    let split: Vec<(usize, usize)> = (0..total)
        .map(|i| {
            let digits = split_index(i, dims);
            let k = join_index(keep.iter().map(|&p| (digits[p], dims[p])));
            let t = join_index(traced.iter().map(|&p| (digits[p], dims[p])));
            (k, t)
        })
        .collect();

    let mut out = ComplexMatrix::zeros(kept_total, kept_total);
    for i in 0..total {
        let (ki, ti) = split[i];
        for j in 0..total {
            let (kj, tj) = split[j];
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Transpose of the indices belonging to `party`.
pub fn partial_transpose(m: &ComplexMatrix, dims: &[usize], party: usize) -> Result<ComplexMatrix> {
    let total = check_dims(m, dims)?;
    if party >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "party {party} out of range for {} parties",
            dims.len()
        )));
    }
    let mut out = ComplexMatrix::zeros(total, total);
    for i in 0..total {
        let mut di = split_index(i, dims);
        for j in 0..total {
            let mut dj = split_index(j, dims);
            std::mem::swap(&mut di[party], &mut dj[party]);
            let ii = join_index(di.iter().zip(dims).map(|(&x, &d)| (x, d)));
            let jj = join_index(dj.iter().zip(dims).map(|(&x, &d)| (x, d)));
            out[(ii, jj)] = m[(i, j)];
            std::mem::swap(&mut di[party], &mut dj[party]);
        }
    }
    Ok(out)
}

/// `-p log2 p` with `0 log 0 = 0`.
pub fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits; non-positive entries contribute nothing.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().copied().map(entropy_term).sum()
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_term(p) + entropy_term(1.0 - p)
}

/// Eigenvalues of a density operator, with the PSD and trace checks applied.
pub fn state_spectrum(rho: &ComplexMatrix) -> Result<HermitianEigensystem> {
    let mut eig = eig_hermitian(rho)?;
    check_spectrum(&mut eig.eigenvalues)?;
    Ok(eig)
}

fn check_spectrum(values: &mut [f64]) -> Result<()> {
    if let Some(&min) = values.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -PSD_TOL {
            return Err(Error::NotAState(format!(
                "eigenvalue {min:.3e} below -{PSD_TOL:e}"
            )));
        }
    }
    let tr: f64 = values.iter().sum();
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::NotAState(format!("trace {tr:.12} differs from 1")));
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

/// `S(rho) = -tr(rho log2 rho)` in bits.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let eig = state_spectrum(rho)?;
    Ok(shannon_entropy(&eig.eigenvalues))
}

/// Value of a relative entropy; `Infinite` when the support condition fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelativeEntropy {
    Finite(f64),
    Infinite,
}

impl RelativeEntropy {
    pub fn value(self) -> f64 {
        match self {
            RelativeEntropy::Finite(v) => v,
            RelativeEntropy::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, RelativeEntropy::Finite(_))
    }
}

impl PartialOrd for RelativeEntropy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

/// `S(x||y) = -tr(x log2 y) - S(x)` in bits.
pub fn relative_entropy(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<RelativeEntropy> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy of {}x{} and {}x{} matrices",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let sx = von_neumann_entropy(x)?;
    let ey = state_spectrum(y)?;
    Ok(relative_entropy_with(x, sx, &ey))
}

/// Relative entropy given `S(x)` and the spectral decomposition of `y`.
pub(crate) fn relative_entropy_with(
    x: &ComplexMatrix,
    entropy_x: f64,
    y: &HermitianEigensystem,
) -> RelativeEntropy {
    let v = &y.eigenvectors;
    let xv = x * v;
    let zero = 64.0 * f64::EPSILON * y.eigenvalues.first().copied().unwrap_or(1.0).max(1.0);
    let mut cross = 0.0;
    for (k, &lam) in y.eigenvalues.iter().enumerate() {
        let weight = v.column(k).dotc(&xv.column(k)).re;
        if lam <= zero {
            if weight > SUPPORT_TOL {
                return RelativeEntropy::Infinite;
            }
        } else {
            cross -= weight * lam.log2();
        }
    }
    let value = cross - entropy_x;
    debug_assert!(value >= -1e-7, "negative relative entropy {value}");
    RelativeEntropy::Finite(value.max(0.0))
}
