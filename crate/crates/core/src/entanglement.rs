//! Relative entropy of entanglement `E = min_sigma S(rho||sigma)` over
//! separable `sigma`.
//!
//! Known families are solved in closed form; everything else goes through
//! an alternating minimisation over a mixture of pure product states.

use std::f64::consts::LN_2;

use log::debug;
use nalgebra::DVector;
use rand::Rng;

use crate::classical::{classical_correlations, restart_seed, structured_anchor, total_mutual_information};
use crate::error::{Error, Result};
use crate::linalg::{
    self, c, eig_hermitian_unchecked, partial_transpose, relative_entropy, shannon_entropy,
    ComplexMatrix, RelativeEntropy, C64,
};
use crate::optimize::{lbfgs, LbfgsOptions};
use crate::parallel;
use crate::state::{
    bell_basis, closest_separable_cluster4, closest_separable_w, cluster_state_4_ket, haar_unitary,
    random_product_ket, rng_from_seed, w_ket, MultipartiteState,
};

const PURITY_TOL: f64 = 1e-9;
const FAMILY_FIDELITY_TOL: f64 = 1e-9;
const BELL_DIAGONAL_TOL: f64 = 1e-9;
const PPT_TOL: f64 = 1e-12;
/// Restarts whose values differ by more than this flag non-convergence.
const RESTART_AGREEMENT: f64 = 1e-4;
/// Candidates within this of the best value count as equally optimal.
const TIE_TOL: f64 = 1e-6;
/// ... and as distinct when their states differ entrywise by more than this.
const DISTINCT_TOL: f64 = 1e-3;

/// Mixture of pure product states.
#[derive(Debug, Clone)]
pub struct SeparableAnsatz {
    dims: Vec<usize>,
    terms: Vec<(f64, Vec<DVector<C64>>)>,
}

impl SeparableAnsatz {
    pub fn new(dims: &[usize], terms: Vec<(f64, Vec<DVector<C64>>)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("separable ansatz without terms".into()));
        }
        let weights: Vec<f64> = terms.iter().map(|t| t.0).collect();
        if weights.iter().any(|&w| w < -1e-12 || !w.is_finite()) {
            return Err(Error::InvalidDistribution(format!("negative weight in {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("weights sum to {sum}")));
        }
        for (_, kets) in &terms {
            if kets.len() != dims.len() {
                return Err(Error::DimensionMismatch(format!(
                    "term has {} kets for {} parties",
                    kets.len(),
                    dims.len()
                )));
            }
            for (k, &d) in kets.iter().zip(dims) {
                if k.len() != d {
                    return Err(Error::DimensionMismatch(format!(
                        "ket of length {} for a party of dimension {d}",
                        k.len()
                    )));
                }
                if (k.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!("ket norm {} is not 1", k.norm())));
                }
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            terms,
        })
    }

    /// `m` Haar-random product kets with Dirichlet(1) weights.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], m: usize, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..m).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let total: f64 = raw.iter().sum();
        let terms = raw
            .iter()
            .map(|w| (w / total, random_product_ket(dims, rng)))
            .collect();
        Self {
            dims: dims.to_vec(),
            terms,
        }
    }

    pub fn terms(&self) -> &[(f64, Vec<DVector<C64>>)] {
        &self.terms
    }

    pub fn assemble(&self) -> MultipartiteState {
        let d: usize = self.dims.iter().product();
        let m = self.terms.iter().fold(ComplexMatrix::zeros(d, d), |acc, (w, kets)| {
            acc + linalg::projector(&kron_all(kets)).scale(*w)
        });
        MultipartiteState::validate(&self.dims, m).expect("mixture of product states is a state")
    }
}

fn kron_all(kets: &[DVector<C64>]) -> DVector<C64> {
    kets.iter().skip(1).fold(kets[0].clone(), |acc, k| acc.kronecker(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReeMethod {
    /// Two-qubit state with positive partial transpose: separable, E = 0.
    PptSeparable,
    AnalyticBellDiagonal,
    AnalyticPureBipartite,
    TableW,
    TableCluster4,
    Numeric,
}

#[derive(Debug, Clone)]
pub struct ReeDiagnostics {
    pub terms: usize,
    pub restarts: usize,
    /// Sweeps used by the winning restart.
    pub sweeps: usize,
    pub converged: bool,
    /// Gap between the best and second-best restart.
    pub restart_gap: f64,
    /// `S(sigma) + tr(rho log sigma)`; non-negative in every known example.
    pub entropy_gap_monitor: f64,
}

#[derive(Debug, Clone)]
pub struct ReeResult {
    pub value: f64,
    pub sigma: MultipartiteState,
    pub method: ReeMethod,
    pub diagnostics: ReeDiagnostics,
    /// Other optimal separable states found by distinct restarts.
    pub alternatives: Vec<MultipartiteState>,
}

#[derive(Debug, Clone)]
pub struct ReeOptions {
    /// Number of product terms; `None` means (total dimension)^2.
    pub terms: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Stop when a sweep improves the objective by less than this.
    pub sweep_tol: f64,
    /// Weight of the maximally mixed state added during the search.
    pub regularization: f64,
}

impl Default for ReeOptions {
    fn default() -> Self {
        Self {
            terms: None,
            restarts: 8,
            seed: 0,
            max_sweeps: 500,
            sweep_tol: 1e-8,
            regularization: 1e-9,
        }
    }
}

fn exact_result(x: &MultipartiteState, sigma: MultipartiteState, method: ReeMethod) -> ReeResult {
    let value = relative_entropy(x.matrix(), sigma.matrix())
        .expect("validated states")
        .value();
    let monitor = entropy_gap_monitor(x, &sigma);
    ReeResult {
        value,
        sigma,
        method,
        diagnostics: ReeDiagnostics {
            terms: 0,
            restarts: 0,
            sweeps: 0,
            converged: true,
            restart_gap: 0.0,
            entropy_gap_monitor: monitor,
        },
        alternatives: Vec::new(),
    }
}

/// `S(sigma) + tr(rho log2 sigma)`.
fn entropy_gap_monitor(x: &MultipartiteState, sigma: &MultipartiteState) -> f64 {
    let eig = eig_hermitian_unchecked(sigma.matrix());
    let v = &eig.eigenvectors;
    let xv = x.matrix() * v;
    let mut cross = 0.0;
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let w = v.column(k).dotc(&xv.column(k)).re;
        if lam > 1e-14 {
            cross += w * lam.log2();
        } else if w > 1e-9 {
            return f64::NEG_INFINITY;
        }
    }
    shannon_entropy(&eig.eigenvalues) + cross
}

/// True when the partial transpose is positive semidefinite.
pub fn is_ppt(x: &MultipartiteState) -> bool {
    let last = x.n_parties() - 1;
    let pt = partial_transpose(x.matrix(), x.dims(), last).expect("dims validated");
    let eig = eig_hermitian_unchecked(&pt);
    eig.eigenvalues.last().copied().unwrap_or(0.0) >= -PPT_TOL
}

/// Weights on `Phi+, Phi-, Psi+, Psi-` if `x` is diagonal in the Bell basis.
pub fn bell_weights(x: &MultipartiteState) -> Option<[f64; 4]> {
    if x.dims() != [2, 2] {
        return None;
    }
    let basis = bell_basis();
    let mut w = [0.0; 4];
    for i in 0..4 {
        let xi = x.matrix() * &basis[i];
        for j in 0..4 {
            let entry = basis[j].dotc(&xi);
            if i == j {
                w[i] = entry.re;
            } else if entry.norm() > BELL_DIAGONAL_TOL {
                return None;
            }
        }
    }
    Some(w)
}

/// Closest separable state of a Bell-diagonal state: weight 1/2 on the
/// dominant Bell state, `lambda_i / (2 (1 - lambda_max))` elsewhere.
fn ree_bell_diagonal(x: &MultipartiteState, w: [f64; 4]) -> ReeResult {
    let (imax, &lmax) = w
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("four weights");
    if lmax <= 0.5 {
        return exact_result(x, x.clone(), ReeMethod::AnalyticBellDiagonal);
    }
    let rest: f64 = (0..4).filter(|&i| i != imax).map(|i| w[i].max(0.0)).sum();
    let mut p = [0.0; 4];
    for i in 0..4 {
        p[i] = if i == imax {
            0.5
        } else if rest > 1e-12 {
            w[i].max(0.0) / (2.0 * rest)
        } else {
            // pure Bell state: any split of the remaining half is optimal
            1.0 / 6.0
        };
    }
    let sigma = MultipartiteState::validate(
        &[2, 2],
        crate::state::bell_mixture(&p),
    )
    .expect("Bell mixture is a state");
    exact_result(x, sigma, ReeMethod::AnalyticBellDiagonal)
}

/// Pure bipartite states: `E` is the entanglement entropy and the closest
/// separable state is the dephasing in the Schmidt basis.
pub fn ree_pure_bipartite(psi: &MultipartiteState) -> Result<ReeResult> {
    if psi.n_parties() != 2 {
        return Err(Error::WrongArity {
            expected: 2,
            actual: psi.n_parties(),
        });
    }
    let purity = psi.purity();
    if (purity - 1.0).abs() > PURITY_TOL {
        return Err(Error::NotPure { purity });
    }
    let (da, db) = (psi.dims()[0], psi.dims()[1]);
    let top = eig_hermitian_unchecked(psi.matrix());
    let ket: DVector<C64> = top.eigenvectors.column(0).into_owned();

    let rho_a = eig_hermitian_unchecked(&psi.marginal(0));
    let mut sigma = ComplexMatrix::zeros(da * db, da * db);
    for i in 0..da {
        let lam = rho_a.eigenvalues[i];
        if lam <= 1e-14 {
            continue;
        }
        let a: DVector<C64> = rho_a.eigenvectors.column(i).into_owned();
        // b_i = (<a_i| (x) I) |psi> / sqrt(lambda_i)
        let mut b = DVector::<C64>::zeros(db);
        for (j, bj) in b.iter_mut().enumerate() {
            *bj = (0..da).map(|k| a[k].conj() * ket[k * db + j]).sum();
        }
        let b = b.unscale(b.norm());
        sigma += linalg::projector(&a.kronecker(&b)).scale(lam);
    }
    let sigma = MultipartiteState::validate(psi.dims(), sigma)?;
    let e = shannon_entropy(&rho_a.eigenvalues.iter().map(|l| l.max(0.0)).collect::<Vec<_>>());

    let t = total_mutual_information(psi).value;
    let c_rho = classical_correlations(&sigma).value;
    if (t - (e + c_rho)).abs() > 1e-9 {
        return Err(Error::ConsistencyError(format!(
            "pure-state additivity T = E + C violated: T = {t}, E + C = {}",
            e + c_rho
        )));
    }
    let mut r = exact_result(psi, sigma, ReeMethod::AnalyticPureBipartite);
    debug_assert!((r.value - e).abs() < 1e-7);
    r.value = r.value.max(0.0);
    Ok(r)
}

/// Relative entropy of entanglement with analytic dispatch.
///
/// Order: two-qubit PPT check, Bell-diagonal closed form, pure bipartite
/// closed form, tabulated W and four-qubit cluster states, numeric search.
pub fn ree(x: &MultipartiteState, opts: &ReeOptions) -> ReeResult {
    if x.dims() == [2, 2] && is_ppt(x) {
        return exact_result(x, x.clone(), ReeMethod::PptSeparable);
    }
    if let Some(w) = bell_weights(x) {
        return ree_bell_diagonal(x, w);
    }
    if x.n_parties() == 2 && (x.purity() - 1.0).abs() <= PURITY_TOL {
        if let Ok(r) = ree_pure_bipartite(x) {
            return r;
        }
    }
    if x.dims() == [2, 2, 2] && x.overlap(&w_ket()) >= 1.0 - FAMILY_FIDELITY_TOL {
        return exact_result(x, closest_separable_w(), ReeMethod::TableW);
    }
    if x.dims() == [2, 2, 2, 2] && x.overlap(&cluster_state_4_ket()) >= 1.0 - FAMILY_FIDELITY_TOL {
        return exact_result(x, closest_separable_cluster4(), ReeMethod::TableCluster4);
    }
    ree_numeric(x, opts)
}

/// Flat layout: for term `i` and party `n`, `2 d_n` reals (re, im) of an
/// unnormalised local ket.
struct Layout {
    dims: Vec<usize>,
    total: usize,
    m: usize,
    per_term: usize,
    party_offsets: Vec<usize>,
    strides: Vec<usize>,
}

impl Layout {
    fn new(dims: &[usize], m: usize) -> Self {
        let mut party_offsets = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &d in dims {
            party_offsets.push(off);
            off += 2 * d;
        }
        let total: usize = dims.iter().product();
        let mut strides = vec![1; dims.len()];
        for n in (0..dims.len().saturating_sub(1)).rev() {
            strides[n] = strides[n + 1] * dims[n + 1];
        }
        Self {
            dims: dims.to_vec(),
            total,
            m,
            per_term: off,
            party_offsets,
            strides,
        }
    }

    fn len(&self) -> usize {
        self.m * self.per_term
    }

    fn local(&self, flat: &[f64], term: usize, party: usize) -> (Vec<C64>, f64) {
        let d = self.dims[party];
        let base = term * self.per_term + self.party_offsets[party];
        let raw: Vec<C64> = (0..d).map(|j| c(flat[base + 2 * j], flat[base + 2 * j + 1])).collect();
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (raw, norm)
    }

    fn write_local(&self, flat: &mut [f64], term: usize, party: usize, ket: &DVector<C64>) {
        let base = term * self.per_term + self.party_offsets[party];
        for (j, z) in ket.iter().enumerate() {
            flat[base + 2 * j] = z.re;
            flat[base + 2 * j + 1] = z.im;
        }
    }
}

/// Objective `-tr(rho log2 sigma_eps)` and its gradients for a mixture of
/// product kets, `sigma_eps = (1 - eps) sum_i p_i |A_i><A_i| + eps I / D`.
struct Objective<'a> {
    rho: &'a ComplexMatrix,
    layout: Layout,
    eps: f64,
}

struct Evaluation {
    value: f64,
    /// d value / d p_i
    grad_weights: Vec<f64>,
    grad_kets: Option<Vec<f64>>,
}

impl<'a> Objective<'a> {
    fn normalized_kets(&self, flat: &[f64]) -> (Vec<Vec<Vec<C64>>>, Vec<Vec<f64>>, Vec<DVector<C64>>) {
        let l = &self.layout;
        let mut locals = Vec::with_capacity(l.m);
        let mut norms = Vec::with_capacity(l.m);
        let mut products = Vec::with_capacity(l.m);
        for i in 0..l.m {
            let mut term_locals = Vec::with_capacity(l.dims.len());
            let mut term_norms = Vec::with_capacity(l.dims.len());
            for n in 0..l.dims.len() {
                let (raw, norm) = l.local(flat, i, n);
                let unit: Vec<C64> = raw.iter().map(|z| z / norm).collect();
                term_locals.push(unit);
                term_norms.push(norm);
            }
            let mut prod = DVector::<C64>::zeros(l.total);
            for (idx, slot) in prod.iter_mut().enumerate() {
                let mut v = c(1.0, 0.0);
                for (n, loc) in term_locals.iter().enumerate() {
                    v *= loc[(idx / l.strides[n]) % l.dims[n]];
                }
                *slot = v;
            }
            locals.push(term_locals);
            norms.push(term_norms);
            products.push(prod);
        }
        (locals, norms, products)
    }

    fn evaluate(&self, weights: &[f64], flat: &[f64], want_kets: bool) -> Evaluation {
        let l = &self.layout;
        let d = l.total;
        let (locals, norms, products) = self.normalized_kets(flat);

        let keep = 1.0 - self.eps;
        let mut sigma = ComplexMatrix::identity(d, d).scale(self.eps / d as f64);
        for (w, a) in weights.iter().zip(&products) {
            if *w != 0.0 {
                sigma.gerc(c(keep * w, 0.0), a, a, c(1.0, 0.0));
            }
        }

        let raw = nalgebra::linalg::SymmetricEigen::new(linalg::hermitian_part(&sigma));
        let v = &raw.eigenvectors;
        let lam: Vec<f64> = raw.eigenvalues.iter().map(|&x| x.max(1e-300)).collect();
        let rho_t = v.adjoint() * self.rho * v;
        let mut value = 0.0;
        for k in 0..d {
            value -= rho_t[(k, k)].re * lam[k].ln();
        }
        value /= LN_2;

        // G = D log(sigma)[rho] in the eigenbasis: rho_kl * (ln l_k - ln l_l) / (l_k - l_l)
        let mut g_t = rho_t.clone();
        for k in 0..d {
            for q in 0..d {
                let (a, b) = (lam[k], lam[q]);
                let div = if (a - b).abs() <= 1e-12 * a.max(b) {
                    1.0 / a.max(b)
                } else {
                    (a.ln() - b.ln()) / (a - b)
                };
                g_t[(k, q)] *= div;
            }
        }
        let g = v * g_t * v.adjoint();

        let mut grad_weights = vec![0.0; l.m];
        let mut grad_kets = if want_kets { Some(vec![0.0; l.len()]) } else { None };
        for i in 0..l.m {
            let h = &g * &products[i];
            let gi = products[i].dotc(&h).re;
            grad_weights[i] = -keep * gi / LN_2;
            if let Some(gk) = grad_kets.as_mut() {
                let scale = -2.0 * keep * weights[i] / LN_2;
                for n in 0..l.dims.len() {
                    let dn = l.dims[n];
                    // r_n[j] = sum_{idx: idx_n = j} h[idx] prod_{m != n} conj(a_m[idx_m])
                    let mut r = vec![c(0.0, 0.0); dn];
                    for idx in 0..d {
                        let mut coeff = h[idx];
                        for (mm, loc) in locals[i].iter().enumerate() {
                            if mm != n {
                                coeff *= loc[(idx / l.strides[mm]) % l.dims[mm]].conj();
                            }
                        }
                        r[(idx / l.strides[n]) % dn] += coeff;
                    }
                    let norm = norms[i][n];
                    let (raw_ket, _) = l.local(flat, i, n);
                    // zeta = scale * r; grad_c = zeta/|c| - c Re(zeta^dagger c)/|c|^3
                    let proj: f64 = r
                        .iter()
                        .zip(&raw_ket)
                        .map(|(z, cc)| (z.conj() * cc).re * scale)
                        .sum();
                    let base = i * l.per_term + l.party_offsets[n];
                    for j in 0..dn {
                        let zeta = r[j] * scale;
                        let gc = zeta / norm - raw_ket[j] * (proj / norm.powi(3));
                        gk[base + 2 * j] = gc.re;
                        gk[base + 2 * j + 1] = gc.im;
                    }
                }
            }
        }
        Evaluation {
            value,
            grad_weights,
            grad_kets,
        }
    }

    fn assemble(&self, weights: &[f64], flat: &[f64], eps: f64) -> ComplexMatrix {
        let d = self.layout.total;
        let (_, _, products) = self.normalized_kets(flat);
        let mut sigma = ComplexMatrix::identity(d, d).scale(eps / d as f64);
        for (w, a) in weights.iter().zip(&products) {
            sigma.gerc(c((1.0 - eps) * w, 0.0), a, a, c(1.0, 0.0));
        }
        sigma
    }
}

/// Exponentiated-gradient descent on the simplex with kets held fixed.
fn weight_step(obj: &Objective, weights: &mut [f64], flat: &[f64], current: f64) -> f64 {
    let mut f = current;
    let mut eta = 1.0;
    for _ in 0..200 {
        let ev = obj.evaluate(weights, flat, false);
        f = ev.value;
        let mean: f64 = weights.iter().zip(&ev.grad_weights).map(|(w, g)| w * g).sum();
        let mut accepted = false;
        let mut trial = weights.to_vec();
        for _ in 0..30 {
            let mut z = 0.0;
            for (t, (w, g)) in trial.iter_mut().zip(weights.iter().zip(&ev.grad_weights)) {
                *t = w * (-eta * (g - mean)).exp();
                z += *t;
            }
            trial.iter_mut().for_each(|t| *t /= z);
            let decrease: f64 = trial
                .iter()
                .zip(weights.iter())
                .zip(&ev.grad_weights)
                .map(|((t, w), g)| g * (t - w))
                .sum();
            let ft = obj.evaluate(&trial, flat, false).value;
            if ft <= f + 1e-4 * decrease.min(0.0) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
        let change = trial
            .iter()
            .zip(weights.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        weights.copy_from_slice(&trial);
        eta = (eta * 2.0).min(1e6);
        if change < 1e-10 {
            break;
        }
    }
    obj.evaluate(weights, flat, false).value.min(f)
}

struct RestartOutcome {
    value: f64,
    weights: Vec<f64>,
    flat: Vec<f64>,
    sweeps: usize,
}

fn initial_terms(
    x: &MultipartiteState,
    layout: &Layout,
    restart: usize,
    seed: u64,
    eps: f64,
) -> (Vec<f64>, Vec<f64>) {
    let dims = x.dims();
    let d = layout.total;
    let m = layout.m;
    let mut rng = rng_from_seed(restart_seed(seed, restart));

    // (weight, local kets) seeds
    let mut seeds: Vec<(f64, Vec<DVector<C64>>)> = Vec::new();
    let dephasing_terms = |basis: &crate::state::ProductBasis| -> Vec<(f64, Vec<DVector<C64>>)> {
        let u = basis.unitary();
        let xu = x.matrix() * &u;
        (0..d)
            .map(|k| {
                let p = u.column(k).dotc(&xu.column(k)).re.max(0.0);
                let digits = linalg::split_index(k, dims);
                let kets = digits
                    .iter()
                    .enumerate()
                    .map(|(n, &j)| basis.local(n).column(j).into_owned())
                    .collect();
                (p, kets)
            })
            .collect()
    };
    match restart {
        0 => {
            // best structured dephasing by the objective itself
            let probe = Objective {
                rho: x.matrix(),
                layout: Layout::new(dims, d),
                eps: eps.max(1e-6),
            };
            let mut best: Option<(f64, Vec<(f64, Vec<DVector<C64>>)>)> = None;
            for a in 0..8 {
                let terms = dephasing_terms(&structured_anchor(x, a));
                let (w, flat) = pack(&probe.layout, &terms);
                let f = probe.evaluate(&w, &flat, false).value;
                if best.as_ref().is_none_or(|(bf, _)| f < *bf - 1e-12) {
                    best = Some((f, terms));
                }
            }
            seeds = best.expect("eight anchors").1;
        }
        1 => {
            // eigen-ensemble of x, each eigenvector replaced by the product of
            // the dominant eigenvectors of its marginals
            let eig = eig_hermitian_unchecked(x.matrix());
            for (k, &lam) in eig.eigenvalues.iter().enumerate() {
                if lam <= 1e-12 {
                    continue;
                }
                let v: DVector<C64> = eig.eigenvectors.column(k).into_owned();
                let pure = MultipartiteState::pure(dims, &v).expect("eigenvector");
                let kets = (0..dims.len())
                    .map(|n| eig_hermitian_unchecked(&pure.marginal(n)).eigenvectors.column(0).into_owned())
                    .collect();
                seeds.push((lam, kets));
            }
        }
        _ => {
            let locals = dims.iter().map(|&dn| haar_unitary(dn, &mut rng)).collect();
            let basis = crate::state::ProductBasis::new(locals).expect("Haar unitaries");
            seeds = dephasing_terms(&basis);
        }
    }
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
    seeds.truncate(m);

    let fill = 0.05;
    let floor = fill / m as f64;
    let mut terms: Vec<(f64, Vec<DVector<C64>>)> = seeds
        .into_iter()
        .map(|(w, kets)| (w * (1.0 - fill) + floor, kets))
        .collect();
    while terms.len() < m {
        terms.push((floor, random_product_ket(dims, &mut rng)));
    }
    let total: f64 = terms.iter().map(|t| t.0).sum();
    terms.iter_mut().for_each(|t| t.0 /= total);
    pack(layout, &terms)
}

fn pack(layout: &Layout, terms: &[(f64, Vec<DVector<C64>>)]) -> (Vec<f64>, Vec<f64>) {
    let mut flat = vec![0.0; layout.m * layout.per_term];
    let mut weights = vec![0.0; layout.m];
    for (i, (w, kets)) in terms.iter().enumerate().take(layout.m) {
        weights[i] = *w;
        for (n, k) in kets.iter().enumerate() {
            layout.write_local(&mut flat, i, n, k);
        }
    }
    (weights, flat)
}

/// Sweeps improving less than this trigger a joint polish.
const SLOW_SWEEP: f64 = 1e-5;

/// L-BFGS over softmax logits and kets together. Block steps zigzag when
/// weights and kets are strongly coupled; the joint step does not.
fn joint_step(obj: &Objective, weights: &mut Vec<f64>, flat: &mut Vec<f64>, current: f64) -> f64 {
    let m = weights.len();
    let mut x0: Vec<f64> = weights.iter().map(|w| w.max(1e-300).ln()).collect();
    x0.extend_from_slice(flat);
    let softmax = |z: &[f64]| -> Vec<f64> {
        let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
        let total: f64 = e.iter().sum();
        e.into_iter().map(|v| v / total).collect()
    };
    let opts = LbfgsOptions {
        memory: 20,
        max_iters: 300,
        gtol: 1e-10,
        ftol: 1e-14,
    };
    let result = lbfgs(
        |v: &[f64], g: &mut [f64]| {
            let w = softmax(&v[..m]);
            let ev = obj.evaluate(&w, &v[m..], true);
            let mean: f64 = w.iter().zip(&ev.grad_weights).map(|(a, b)| a * b).sum();
            for j in 0..m {
                g[j] = w[j] * (ev.grad_weights[j] - mean);
            }
            g[m..].copy_from_slice(ev.grad_kets.as_ref().expect("requested"));
            ev.value
        },
        x0,
        &opts,
    );
    if result.f < current {
        *weights = softmax(&result.x[..m]);
        flat.copy_from_slice(&result.x[m..]);
        result.f
    } else {
        current
    }
}

fn run_restart(x: &MultipartiteState, m: usize, restart: usize, opts: &ReeOptions) -> RestartOutcome {
    let layout = Layout::new(x.dims(), m);
    let (mut weights, mut flat) = initial_terms(x, &layout, restart, opts.seed, opts.regularization);
    let obj = Objective {
        rho: x.matrix(),
        layout,
        eps: opts.regularization,
    };
    let ket_opts = LbfgsOptions {
        memory: 12,
        max_iters: 40,
        gtol: 1e-10,
        ftol: 1e-14,
    };

    let mut f = obj.evaluate(&weights, &flat, false).value;
    let mut sweeps = 0;
    let mut quiet = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let before = f;
        f = weight_step(&obj, &mut weights, &flat, f);
        let w = weights.clone();
        let m = lbfgs(
            |p: &[f64], g: &mut [f64]| {
                let ev = obj.evaluate(&w, p, true);
                g.copy_from_slice(ev.grad_kets.as_ref().expect("requested"));
                ev.value
            },
            flat.clone(),
            &ket_opts,
        );
        if m.f <= f {
            flat = m.x;
            f = m.f;
        }
        if before - f < SLOW_SWEEP {
            f = joint_step(&obj, &mut weights, &mut flat, f);
        }
        if before - f < opts.sweep_tol {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    RestartOutcome {
        value: f,
        weights,
        flat,
        sweeps,
    }
}

/// Numeric relative entropy of entanglement by alternating minimisation:
/// an exponentiated-gradient step on the mixture weights, then an L-BFGS
/// step on the product kets, repeated until a sweep stops improving.
pub fn ree_numeric(x: &MultipartiteState, opts: &ReeOptions) -> ReeResult {
    let d = x.dim();
    let m = opts.terms.unwrap_or(d * d).max(1);
    let restarts = opts.restarts.max(1);
    let outcomes = parallel::map_indexed(restarts, |r| run_restart(x, m, r, opts));

    let layout = Layout::new(x.dims(), m);
    let obj = Objective {
        rho: x.matrix(),
        layout,
        eps: opts.regularization,
    };
    let finalize = |o: &RestartOutcome| -> (f64, MultipartiteState) {
        debug!("ree_numeric restart: objective {:.10} after {} sweeps", o.value, o.sweeps);
        let with_eps = MultipartiteState::validate(x.dims(), obj.assemble(&o.weights, &o.flat, opts.regularization))
            .expect("regularised mixture is a state");
        let e_eps = relative_entropy(x.matrix(), with_eps.matrix()).expect("states").value();
        let without = MultipartiteState::validate(x.dims(), obj.assemble(&o.weights, &o.flat, 0.0))
            .expect("mixture is a state");
        match relative_entropy(x.matrix(), without.matrix()).expect("states") {
            RelativeEntropy::Finite(e0) if (e0 - e_eps).abs() <= 1e-9 => (e0, without),
            _ => (e_eps, with_eps),
        }
    };
    let finals: Vec<(f64, MultipartiteState)> = outcomes.iter().map(finalize).collect();

    let mut best = 0;
    for (i, (v, _)) in finals.iter().enumerate() {
        if *v < finals[best].0 {
            best = i;
        }
    }
    let second = finals
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, (v, _))| *v)
        .fold(f64::INFINITY, f64::min);
    let gap = if second.is_finite() { second - finals[best].0 } else { 0.0 };
    let (value, sigma) = finals[best].clone();

    let mut alternatives: Vec<MultipartiteState> = Vec::new();
    for (i, (v, s)) in finals.iter().enumerate() {
        if i == best || *v > value + TIE_TOL {
            continue;
        }
        if s.max_abs_diff(&sigma) > DISTINCT_TOL
            && alternatives.iter().all(|a| a.max_abs_diff(s) > DISTINCT_TOL)
        {
            alternatives.push(s.clone());
        }
    }

    let monitor = entropy_gap_monitor(x, &sigma);
    debug!("ree_numeric: E = {value:.9}, restart gap {gap:.3e}, S(sigma)+tr(rho log sigma) = {monitor:.6}");
    ReeResult {
        value,
        sigma,
        method: ReeMethod::Numeric,
        diagnostics: ReeDiagnostics {
            terms: m,
            restarts,
            sweeps: outcomes[best].sweeps,
            converged: gap <= RESTART_AGREEMENT,
            restart_gap: gap,
            entropy_gap_monitor: monitor,
        },
        alternatives,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::binary_entropy;
    use crate::state::{bell_diagonal, cluster_state_4, random_state, w_state};

    #[test]
    fn gradient_matches_finite_differences() {
        let x = random_state(&[2, 2], 4, 21).unwrap();
        let layout = Layout::new(&[2, 2], 5);
        let mut rng = rng_from_seed(4);
        let ans = SeparableAnsatz::random(&[2, 2], 5, &mut rng);
        let (w, flat) = pack(&layout, ans.terms());
        let obj = Objective {
            rho: x.matrix(),
            layout,
            eps: 1e-3,
        };
        let ev = obj.evaluate(&w, &flat, true);
        let gk = ev.grad_kets.unwrap();
        let h = 1e-6;
        for idx in [0usize, 3, 7, 12, 19] {
            let mut p = flat.clone();
            p[idx] += h;
            let fp = obj.evaluate(&w, &p, false).value;
            p[idx] -= 2.0 * h;
            let fm = obj.evaluate(&w, &p, false).value;
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - gk[idx]).abs() < 1e-6 * (1.0 + fd.abs()), "ket {idx}: {fd} vs {}", gk[idx]);
        }
        for i in 0..5 {
            let mut wp = w.clone();
            wp[i] += h;
            let fp = obj.evaluate(&wp, &flat, false).value;
            wp[i] -= 2.0 * h;
            let fm = obj.evaluate(&wp, &flat, false).value;
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - ev.grad_weights[i]).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn ppt_two_qubit_state_has_zero_entanglement() {
        let x = bell_diagonal([0.4, 0.3, 0.2, 0.1]).unwrap();
        let r = ree(&x, &ReeOptions::default());
        assert_eq!(r.method, ReeMethod::PptSeparable);
        assert_eq!(r.value, 0.0);
        assert!(r.sigma.max_abs_diff(&x) < 1e-15);
    }

    #[test]
    fn bell_diagonal_closed_form() {
        let x = bell_diagonal([0.7, 0.1, 0.1, 0.1]).unwrap();
        let r = ree(&x, &ReeOptions::default());
        assert_eq!(r.method, ReeMethod::AnalyticBellDiagonal);
        assert_close!(r.value, 1.0 - binary_entropy(0.7), 1e-12);
        assert_close!(r.value, 0.1187, 1e-4);
        let expect = bell_diagonal([0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]).unwrap();
        assert!(r.sigma.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn bell_diagonal_dominant_weight_not_on_phi_plus() {
        // weights on Psi- dominate; sigma must put 1/2 on Psi-
        let m = crate::state::bell_mixture(&[0.1, 0.1, 0.2, 0.6]);
        let x = MultipartiteState::validate(&[2, 2], m).unwrap();
        let r = ree(&x, &ReeOptions::default());
        assert_eq!(r.method, ReeMethod::AnalyticBellDiagonal);
        assert_close!(r.value, 1.0 - binary_entropy(0.6), 1e-12);
        assert_close!(r.sigma.overlap(&bell_basis()[3]), 0.5, 1e-12);
        assert_close!(r.sigma.overlap(&bell_basis()[2]), 0.2 / 0.8, 1e-12);
    }

    #[test]
    fn pure_bell_state_through_bell_diagonal_path() {
        let x = bell_diagonal([1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = ree(&x, &ReeOptions::default());
        assert_close!(r.value, 1.0, 1e-12);
        assert_close!(r.sigma.overlap(&bell_basis()[0]), 0.5, 1e-12);
    }

    #[test]
    fn pure_bipartite_closed_forms() {
        let phi = MultipartiteState::pure(&[2, 2], &bell_basis()[0]).unwrap();
        let r = ree_pure_bipartite(&phi).unwrap();
        assert_close!(r.value, 1.0, 1e-12);
        let expect = linalg::diag(&[0.5, 0.0, 0.0, 0.5]);
        assert!(linalg::max_abs_diff(r.sigma.matrix(), &expect) < 1e-12);

        let a = 0.9f64;
        let ket = DVector::from_vec(vec![c(a.sqrt(), 0.), c(0., 0.), c(0., 0.), c((1.0 - a).sqrt(), 0.)]);
        let psi = MultipartiteState::pure(&[2, 2], &ket).unwrap();
        let r = ree_pure_bipartite(&psi).unwrap();
        assert_close!(r.value, binary_entropy(0.9), 1e-12);
        assert_close!(r.value, 0.469, 1e-3);

        let prod = DVector::from_vec(vec![c(0.6, 0.), c(0.8, 0.), c(0., 0.), c(0., 0.)]);
        let r = ree_pure_bipartite(&MultipartiteState::pure(&[2, 2], &prod).unwrap()).unwrap();
        assert_close!(r.value, 0.0, 1e-12);
    }

    #[test]
    fn pure_bipartite_with_rotated_schmidt_basis() {
        // (|0+> + |1->)/sqrt 2 is maximally entangled but not diagonal in z(x)z
        let ket = DVector::from_vec(vec![c(0.5, 0.), c(0.5, 0.), c(0.5, 0.), c(-0.5, 0.)]);
        let psi = MultipartiteState::pure(&[2, 2], &ket).unwrap();
        let r = ree_pure_bipartite(&psi).unwrap();
        assert_close!(r.value, 1.0, 1e-12);
        let check = relative_entropy(psi.matrix(), r.sigma.matrix()).unwrap().value();
        assert_close!(check, 1.0, 1e-9);
    }

    #[test]
    fn pure_bipartite_errors() {
        let mixed = random_state(&[2, 2], 4, 1).unwrap();
        assert!(matches!(ree_pure_bipartite(&mixed), Err(Error::NotPure { .. })));
        assert!(matches!(
            ree_pure_bipartite(&w_state()),
            Err(Error::WrongArity { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn tabulated_families() {
        let r = ree(&w_state(), &ReeOptions::default());
        assert_eq!(r.method, ReeMethod::TableW);
        assert_close!(r.value, (27.0f64 / 12.0).log2(), 1e-12);
        assert_close!(r.value, 1.1699, 1e-4);
        let r = ree(&cluster_state_4(), &ReeOptions::default());
        assert_eq!(r.method, ReeMethod::TableCluster4);
        assert_close!(r.value, 2.0, 1e-12);
    }

    #[test]
    fn numeric_matches_bell_diagonal_closed_form() {
        let x = bell_diagonal([0.7, 0.1, 0.1, 0.1]).unwrap();
        let r = ree_numeric(&x, &ReeOptions::default());
        assert_close!(r.value, 1.0 - binary_entropy(0.7), 2e-3);
        let check = relative_entropy(x.matrix(), r.sigma.matrix()).unwrap().value();
        assert_close!(check, r.value, 1e-7);
    }

    #[test]
    fn ansatz_validation() {
        let k = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(SeparableAnsatz::new(&[2, 2], vec![(0.5, vec![k.clone(), k.clone()])]).is_err());
        assert!(SeparableAnsatz::new(&[2, 2], vec![(1.0, vec![k.clone()])]).is_err());
        let ok = SeparableAnsatz::new(&[2, 2], vec![(1.0, vec![k.clone(), k])]).unwrap();
        assert_close!(ok.assemble().purity(), 1.0, 1e-15);
    }
}
