//! The classical side of the correlation diagram: dephasing in product
//! bases, the search for the closest classical state, and the quantities
//! built from it (T, D, Q, C, L, original discord, MID).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, eig_hermitian_unchecked, shannon_entropy, ComplexMatrix, C64};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::parallel;
use crate::state::{local_unitary, random_product_basis, BasisParameters, MultipartiteState, ProductBasis};

/// Measured values may undershoot zero by this much before it is an error.
pub const VALUE_FLOOR: f64 = -1e-9;
const THEOREM3_TOL: f64 = 1e-8;
const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Numeric,
}

/// What achieves a reported minimum.
#[derive(Debug, Clone)]
pub enum Witness {
    /// Product of marginals (the closest product state).
    Product(MultipartiteState),
    /// Closest classical state and the basis it is diagonal in.
    Classical {
        basis: ProductBasis,
        chi: MultipartiteState,
    },
    /// Closest separable state.
    Separable(MultipartiteState),
    /// Local basis of the measured party (original discord).
    LocalBasis(ComplexMatrix),
}

/// A correlation value in bits with the object that attains it.
#[derive(Debug, Clone)]
pub struct MeasureValue {
    pub value: f64,
    pub witness: Witness,
    pub method: Method,
    pub converged: bool,
}

impl MeasureValue {
    pub(crate) fn new(value: f64, witness: Witness, method: Method, converged: bool) -> Self {
        debug_assert!(value >= VALUE_FLOOR, "measure value {value} below floor");
        Self {
            value: clamp_floor(value),
            witness,
            method,
            converged,
        }
    }
}

fn clamp_floor(v: f64) -> f64 {
    if v < 0.0 && v >= VALUE_FLOOR {
        0.0
    } else {
        v
    }
}

/// Settings for the multi-start basis search.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Total number of local searches, structured seeds included.
    pub restarts: usize,
    /// How many of the restarts start at structured bases.
    pub structured_seeds: usize,
    pub entropy_tol: f64,
    pub param_tol: f64,
    pub seed: u64,
    pub max_evals_per_restart: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            structured_seeds: 8,
            entropy_tol: 1e-8,
            param_tol: 1e-6,
            seed: 0,
            max_evals_per_restart: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchDiagnostics {
    pub restarts: usize,
    /// Entropy gap between the best and the second-best restart.
    pub gap: f64,
    pub converged: bool,
    pub evals: usize,
}

/// Closest classical state of a given input.
#[derive(Debug, Clone)]
pub struct DephasingResult {
    pub basis: ProductBasis,
    pub chi: MultipartiteState,
    pub entropy_chi: f64,
    pub diagnostics: SearchDiagnostics,
}

fn check_basis_dims(x: &MultipartiteState, b: &ProductBasis) -> Result<()> {
    if b.dims() != x.dims() {
        return Err(Error::DimensionMismatch(format!(
            "basis dims {:?} do not match state dims {:?}",
            b.dims(),
            x.dims()
        )));
    }
    Ok(())
}

/// Diagonal of `U^dagger x U`.
fn diagonal_in(x: &ComplexMatrix, u: &ComplexMatrix) -> Vec<f64> {
    let xu = x * u;
    (0..u.ncols())
        .map(|k| u.column(k).dotc(&xu.column(k)).re)
        .collect()
}

fn rebuild(u: &ComplexMatrix, probs: &[f64]) -> ComplexMatrix {
    let mut scaled = u.clone();
    for (k, &p) in probs.iter().enumerate() {
        scaled.column_mut(k).scale_mut(p);
    }
    scaled * u.adjoint()
}

/// Pinching `sum_k |k><k| x |k><k|` in the product basis `b`.
pub fn dephase(x: &MultipartiteState, b: &ProductBasis) -> Result<MultipartiteState> {
    check_basis_dims(x, b)?;
    let u = b.unitary();
    let probs = diagonal_in(x.matrix(), &u);
    MultipartiteState::validate(x.dims(), rebuild(&u, &probs))
}

/// Entropy of `dephase(x, b)` without building the dephased state.
pub fn dephased_entropy(x: &MultipartiteState, b: &ProductBasis) -> Result<f64> {
    check_basis_dims(x, b)?;
    Ok(shannon_entropy(&diagonal_in(x.matrix(), &b.unitary())))
}

/// Product of the single-party marginals.
pub fn closest_product_state(x: &MultipartiteState) -> MultipartiteState {
    let marginals = x.marginals();
    MultipartiteState::validate(x.dims(), linalg::tensor_product_all(marginals.iter()))
        .expect("product of marginals is a state")
}

/// `S(pi_x)` as the sum of marginal entropies.
fn product_entropy(x: &MultipartiteState) -> f64 {
    x.marginals()
        .iter()
        .map(|m| shannon_entropy(&eig_hermitian_unchecked(m).eigenvalues))
        .sum()
}

/// `T = S(pi_x) - S(x)`.
pub fn total_mutual_information(x: &MultipartiteState) -> MeasureValue {
    let value = product_entropy(x) - x.entropy();
    MeasureValue::new(
        value,
        Witness::Product(closest_product_state(x)),
        Method::Analytic,
        true,
    )
}

pub(crate) fn structured_anchor(x: &MultipartiteState, index: usize) -> ProductBasis {
    let dims = x.dims();
    match index % 8 {
        0 => ProductBasis::computational(dims),
        1 => ProductBasis::fourier(dims),
        2 => ProductBasis::fourier_shifted(dims),
        3 => ProductBasis::marginal_eigenbasis(x),
        4 => ProductBasis::mixed_pattern(dims, |n| n % 2 == 1),
        5 => ProductBasis::mixed_pattern(dims, |n| n % 2 == 0),
        6 => {
            let f = ProductBasis::fourier(dims);
            ProductBasis::marginal_eigenbasis(x).compose(f.locals())
        }
        _ => {
            let f = ProductBasis::fourier_shifted(dims);
            ProductBasis::marginal_eigenbasis(x).compose(f.locals())
        }
    }
}

pub(crate) fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Product unitary `anchor_n exp(A_n)` for flat parameters.
fn anchored_unitary(anchor: &ProductBasis, dims: &[usize], flat: &[f64]) -> ComplexMatrix {
    let mut offset = 0;
    let mut u = linalg::identity(1);
    for (n, &d) in dims.iter().enumerate() {
        let len = BasisParameters::len_for(d);
        let local = anchor.local(n) * local_unitary(d, &flat[offset..offset + len]);
        offset += len;
        u = linalg::tensor_product(&u, &local);
    }
    u
}

struct RestartOutcome {
    entropy: f64,
    basis: ProductBasis,
    evals: usize,
}

/// Minimise `S(dephase(x, b))` over product bases `b`.
///
/// Restarts begin at structured anchors (computational, Fourier, shifted
/// Fourier, marginal eigenbases and mixtures of these) and then at
/// Haar-random product bases; each runs Nelder-Mead on the generator
/// parameters. The minimum over restarts wins, earliest restart on ties.
pub fn closest_classical_state(x: &MultipartiteState, opts: &SearchOptions) -> DephasingResult {
    let dims = x.dims().to_vec();
    let n_params = BasisParameters::total_len(&dims);
    let restarts = opts.restarts.max(1);
    let nm = NelderMeadOptions {
        initial_step: 0.4,
        ftol: opts.entropy_tol,
        xtol: opts.param_tol,
        max_evals: opts.max_evals_per_restart,
    };

    let outcomes = parallel::map_indexed(restarts, |r| {
        let anchor = if r < opts.structured_seeds {
            structured_anchor(x, r)
        } else {
            random_product_basis(&dims, restart_seed(opts.seed, r))
        };
        let objective = |p: &[f64]| -> f64 {
            shannon_entropy(&diagonal_in(x.matrix(), &anchored_unitary(&anchor, &dims, p)))
        };
        let m = nelder_mead(objective, &vec![0.0; n_params], &nm);
        let params = BasisParameters::from_flat(&dims, &m.x).expect("parameter count");
        RestartOutcome {
            entropy: m.f,
            basis: params.decode_from(&anchor),
            evals: m.evals,
        }
    });

    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.entropy < outcomes[best].entropy {
            best = i;
        }
    }
    let second = outcomes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, o)| o.entropy)
        .fold(f64::INFINITY, f64::min);
    let gap = if second.is_finite() {
        second - outcomes[best].entropy
    } else {
        0.0
    };
    let evals = outcomes.iter().map(|o| o.evals).sum();
    let basis = outcomes[best].basis.clone();
    let chi = dephase(x, &basis).expect("dims match");
    let entropy_chi = chi.entropy();

    DephasingResult {
        basis,
        chi,
        entropy_chi,
        diagnostics: SearchDiagnostics {
            restarts,
            gap,
            converged: gap <= 10.0 * opts.entropy_tol,
            evals,
        },
    }
}

/// `S(chi) - S(x)` for a precomputed closest classical state.
pub fn discord_from(x: &MultipartiteState, chi: &DephasingResult) -> MeasureValue {
    MeasureValue::new(
        chi.entropy_chi - x.entropy(),
        Witness::Classical {
            basis: chi.basis.clone(),
            chi: chi.chi.clone(),
        },
        Method::Numeric,
        chi.diagnostics.converged,
    )
}

/// Relative-entropy discord `D = S(chi_x) - S(x)`.
pub fn discord(x: &MultipartiteState, opts: &SearchOptions) -> MeasureValue {
    discord_from(x, &closest_classical_state(x, opts))
}

/// Dissonance `Q = S(chi_sigma) - S(sigma)`; the same search applied to a
/// separable input.
pub fn dissonance(sigma: &MultipartiteState, opts: &SearchOptions) -> MeasureValue {
    discord(sigma, opts)
}

/// `C = S(pi_chi) - S(chi)` for a classical state.
pub fn classical_correlations(chi: &MultipartiteState) -> MeasureValue {
    total_mutual_information(chi)
}

/// `L = S(pi_chi) - S(pi_x)`, checking that the product of the dephased
/// state's marginals equals the dephased product of marginals.
pub fn l_quantity(x: &MultipartiteState, chi: &DephasingResult) -> Result<MeasureValue> {
    let pi_x = closest_product_state(x);
    let pi_chi = closest_product_state(&chi.chi);
    let pi_x_dephased = dephase(&pi_x, &chi.basis)?;
    let deviation = pi_chi.max_abs_diff(&pi_x_dephased);
    if deviation > THEOREM3_TOL {
        return Err(Error::ConsistencyError(format!(
            "product of dephased marginals differs from dephased product by {deviation:.3e}"
        )));
    }
    let value = product_entropy(&chi.chi) - product_entropy(x);
    Ok(MeasureValue::new(
        value,
        Witness::Product(pi_chi),
        Method::Analytic,
        chi.diagnostics.converged,
    ))
}

fn require_bipartite(x: &MultipartiteState) -> Result<()> {
    if x.n_parties() != 2 {
        return Err(Error::WrongArity {
            expected: 2,
            actual: x.n_parties(),
        });
    }
    Ok(())
}

/// Projective measurement of one party: `sum_k (|k><k| (x) I) x (|k><k| (x) I)`.
pub fn one_sided_dephase(
    x: &MultipartiteState,
    measured_party: usize,
    local_basis: &ComplexMatrix,
) -> Result<MultipartiteState> {
    require_bipartite(x)?;
    if measured_party > 1 {
        return Err(Error::InvalidInput(format!("measured party {measured_party} is not 0 or 1")));
    }
    let dims = x.dims();
    let (da, db) = (dims[0], dims[1]);
    if local_basis.nrows() != dims[measured_party] {
        return Err(Error::DimensionMismatch(format!(
            "local basis of size {} for a party of dimension {}",
            local_basis.nrows(),
            dims[measured_party]
        )));
    }
    let mut chi = ComplexMatrix::zeros(da * db, da * db);
    for k in 0..dims[measured_party] {
        let p = linalg::projector(&local_basis.column(k).into_owned());
        let proj = if measured_party == 0 {
            linalg::tensor_product(&p, &linalg::identity(db))
        } else {
            linalg::tensor_product(&linalg::identity(da), &p)
        };
        chi += &proj * x.matrix() * &proj;
    }
    MultipartiteState::validate(dims, chi)
}

/// Original discord at a fixed projective measurement, computed two ways:
/// as `D(b) - L(b)` and as `T - C(b)`.
#[derive(Debug, Clone)]
pub struct FixedBasisDiscord {
    pub delta: f64,
    pub t_minus_c: f64,
    pub chi: MultipartiteState,
}

pub fn original_discord_at(
    x: &MultipartiteState,
    measured_party: usize,
    local_basis: &ComplexMatrix,
) -> Result<FixedBasisDiscord> {
    let chi = one_sided_dephase(x, measured_party, local_basis)?;
    let s_x = x.entropy();
    let s_chi = chi.entropy();
    let s_pi_x = product_entropy(x);
    let s_pi_chi = product_entropy(&chi);
    let d = s_chi - s_x;
    let l = s_pi_chi - s_pi_x;
    let t = s_pi_x - s_x;
    let c = s_pi_chi - s_chi;
    Ok(FixedBasisDiscord {
        delta: d - l,
        t_minus_c: t - c,
        chi,
    })
}

#[derive(Debug, Clone)]
pub struct OriginalDiscord {
    pub delta: MeasureValue,
    /// `|delta(b) - (T - C(b))|` at the optimal measurement.
    pub identity_gap: f64,
    pub chi: MultipartiteState,
}

/// Original (one-sided, projective) discord: `min_b D(b) - L(b)` over the
/// measured party's basis.
pub fn original_discord(
    x: &MultipartiteState,
    measured_party: usize,
    opts: &SearchOptions,
) -> Result<OriginalDiscord> {
    require_bipartite(x)?;
    if measured_party > 1 {
        return Err(Error::InvalidInput(format!("measured party {measured_party} is not 0 or 1")));
    }
    let d = x.dims()[measured_party];
    let n_params = BasisParameters::len_for(d);
    let restarts = opts.restarts.max(1);
    let nm = NelderMeadOptions {
        initial_step: 0.4,
        ftol: opts.entropy_tol,
        xtol: opts.param_tol,
        max_evals: opts.max_evals_per_restart,
    };
    let marginal_basis = eig_hermitian_unchecked(&x.marginal(measured_party)).eigenvectors;
    let anchors_structured = [
        linalg::identity(d),
        ProductBasis::fourier(&[d]).local(0).clone(),
        ProductBasis::fourier_shifted(&[d]).local(0).clone(),
        marginal_basis,
    ];

    let outcomes = parallel::map_indexed(restarts, |r| {
        let anchor = if r < anchors_structured.len().min(opts.structured_seeds) {
            anchors_structured[r].clone()
        } else {
            random_product_basis(&[d], restart_seed(opts.seed, r)).local(0).clone()
        };
        let objective = |p: &[f64]| -> f64 {
            let u = &anchor * local_unitary(d, p);
            original_discord_at(x, measured_party, &u)
                .map(|r| r.delta)
                .unwrap_or(f64::INFINITY)
        };
        let m = nelder_mead(objective, &vec![0.0; n_params], &nm);
        (m.f, &anchor * local_unitary(d, &m.x))
    });

    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.0 < outcomes[best].0 {
            best = i;
        }
    }
    let second = outcomes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, o)| o.0)
        .fold(f64::INFINITY, f64::min);
    let converged = !second.is_finite() || second - outcomes[best].0 <= 10.0 * opts.entropy_tol;
    let basis = outcomes[best].1.clone();
    let at = original_discord_at(x, measured_party, &basis)?;
    Ok(OriginalDiscord {
        identity_gap: (at.delta - at.t_minus_c).abs(),
        delta: MeasureValue::new(at.delta, Witness::LocalBasis(basis), Method::Numeric, converged),
        chi: at.chi,
    })
}

#[derive(Debug, Clone)]
pub struct MidResult {
    pub value: MeasureValue,
    pub eta: MultipartiteState,
    /// Some marginal has a degenerate spectrum, so `eta` depends on the
    /// eigensolver's tie-break.
    pub ambiguous: bool,
}

/// Measurement-induced disturbance `S(eta) - S(x)`, with `eta` the
/// dephasing of `x` in the product of marginal eigenbases.
pub fn mid(x: &MultipartiteState) -> Result<MidResult> {
    require_bipartite(x)?;
    let basis = ProductBasis::marginal_eigenbasis(x);
    let ambiguous = x
        .marginals()
        .iter()
        .any(|m| eig_hermitian_unchecked(m).has_degeneracy(DEGENERACY_TOL));
    let eta = dephase(x, &basis)?;
    let value = eta.entropy() - x.entropy();
    Ok(MidResult {
        value: MeasureValue::new(
            value,
            Witness::Classical {
                basis,
                chi: eta.clone(),
            },
            Method::Analytic,
            true,
        ),
        eta,
        ambiguous,
    })
}

/// Kets of a product basis, in flat index order.
pub fn product_kets(b: &ProductBasis) -> Vec<DVector<C64>> {
    let u = b.unitary();
    (0..u.ncols()).map(|k| u.column(k).into_owned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{binary_entropy, diag, identity, max_abs_diff};
    use crate::state::{bell_basis, bell_diagonal, random_state, w_state};

    fn quick() -> SearchOptions {
        SearchOptions {
            restarts: 12,
            ..SearchOptions::default()
        }
    }

    #[test]
    fn dephasing_diagonal_state_is_identity_operation() {
        let x = MultipartiteState::validate(&[2, 2], diag(&[0.1, 0.2, 0.3, 0.4])).unwrap();
        let d = dephase(&x, &ProductBasis::computational(&[2, 2])).unwrap();
        assert!(d.max_abs_diff(&x) < 1e-15);
    }

    #[test]
    fn dephasing_bell_state_kills_coherences() {
        let x = MultipartiteState::pure(&[2, 2], &bell_basis()[0]).unwrap();
        let d = dephase(&x, &ProductBasis::computational(&[2, 2])).unwrap();
        assert!(max_abs_diff(d.matrix(), &diag(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);
    }

    #[test]
    fn dephase_rejects_wrong_dims() {
        let x = random_state(&[2, 2], 4, 1).unwrap();
        assert!(matches!(
            dephase(&x, &ProductBasis::computational(&[4])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn product_state_has_no_mutual_information() {
        let a = diag(&[0.3, 0.7]);
        let b = diag(&[0.6, 0.1, 0.3]);
        let x = MultipartiteState::validate(&[2, 3], linalg::tensor_product(&a, &b)).unwrap();
        assert!(closest_product_state(&x).max_abs_diff(&x) < 1e-15);
        assert_close!(total_mutual_information(&x).value, 0.0, 1e-12);
    }

    #[test]
    fn bell_state_mutual_information_is_two_bits() {
        let x = MultipartiteState::pure(&[2, 2], &bell_basis()[0]).unwrap();
        assert_close!(total_mutual_information(&x).value, 2.0, 1e-12);
    }

    #[test]
    fn w_state_product_and_mutual_information() {
        let w = w_state();
        let pi = closest_product_state(&w);
        let m = diag(&[2.0 / 3.0, 1.0 / 3.0]);
        let expect = linalg::tensor_product_all([&m, &m, &m]);
        assert!(max_abs_diff(pi.matrix(), &expect) < 1e-14);
        assert_close!(total_mutual_information(&w).value, 3.0 * binary_entropy(1.0 / 3.0), 1e-12);
        assert_close!(total_mutual_information(&w).value, 2.7549, 1e-4);
    }

    #[test]
    fn classical_input_has_zero_discord() {
        let x = MultipartiteState::validate(&[2, 2], diag(&[0.4, 0.1, 0.2, 0.3])).unwrap();
        let r = closest_classical_state(&x, &quick());
        assert_close!(r.entropy_chi, x.entropy(), 1e-9);
        assert!(r.chi.max_abs_diff(&x) < 1e-6);
        assert_close!(discord(&x, &quick()).value, 0.0, 1e-9);
    }

    #[test]
    fn bell_diagonal_closest_classical_entropy() {
        let x = bell_diagonal([0.7, 0.1, 0.1, 0.1]).unwrap();
        let r = closest_classical_state(&x, &quick());
        let expect = binary_entropy(0.8) + 1.0;
        assert_close!(expect, 1.7219, 1e-4);
        assert_close!(r.entropy_chi, expect, 1e-7);
        let d = discord_from(&x, &r);
        assert_close!(d.value, expect - x.entropy(), 1e-7);
        assert_close!(d.value, 0.3651, 1e-4);
    }

    #[test]
    fn w_state_closest_classical_is_standard_basis_dephasing() {
        let w = w_state();
        let r = closest_classical_state(&w, &quick());
        assert_close!(r.entropy_chi, 3f64.log2(), 1e-7);
        let standard = dephase(&w, &ProductBasis::computational(&[2, 2, 2])).unwrap();
        assert!(r.chi.max_abs_diff(&standard) < 1e-4);
    }

    #[test]
    fn l_quantity_zero_when_basis_diagonalises_marginals() {
        let x = bell_diagonal([0.7, 0.1, 0.1, 0.1]).unwrap();
        let r = closest_classical_state(&x, &quick());
        assert_close!(l_quantity(&x, &r).unwrap().value, 0.0, 1e-9);
        let w = w_state();
        let rw = closest_classical_state(&w, &quick());
        assert_close!(l_quantity(&w, &rw).unwrap().value, 0.0, 1e-6);
    }

    #[test]
    fn dephased_state_commutes_with_basis_projectors() {
        let x = random_state(&[2, 3], 6, 5).unwrap();
        let r = closest_classical_state(&x, &quick());
        let u = r.basis.unitary();
        let in_basis = u.adjoint() * r.chi.matrix() * &u;
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(in_basis[(i, j)].norm() < 1e-10);
                }
            }
        }
        // the basis is also an eigenbasis of chi, so dephasing again is a no-op
        let again = dephase(&r.chi, &r.basis).unwrap();
        assert!(again.max_abs_diff(&r.chi) < 1e-10);
    }

    #[test]
    fn original_discord_of_bell_state_is_one() {
        let x = MultipartiteState::pure(&[2, 2], &bell_basis()[0]).unwrap();
        let od = original_discord(&x, 0, &quick()).unwrap();
        assert_close!(od.delta.value, 1.0, 1e-7);
        assert!(od.identity_gap < 1e-9);
    }

    #[test]
    fn original_discord_classical_state_is_zero() {
        let x = MultipartiteState::validate(&[2, 2], diag(&[0.4, 0.1, 0.2, 0.3])).unwrap();
        let at = original_discord_at(&x, 0, &identity(2)).unwrap();
        assert_close!(at.delta, 0.0, 1e-12);
        let od = original_discord(&x, 1, &quick()).unwrap();
        assert_close!(od.delta.value, 0.0, 1e-8);
    }

    #[test]
    fn original_discord_needs_two_parties() {
        let w = w_state();
        assert!(matches!(
            original_discord(&w, 0, &quick()),
            Err(Error::WrongArity { expected: 2, actual: 3 })
        ));
        assert!(matches!(mid(&w), Err(Error::WrongArity { .. })));
    }

    #[test]
    fn mid_of_bell_state() {
        let x = MultipartiteState::pure(&[2, 2], &bell_basis()[0]).unwrap();
        let m = mid(&x).unwrap();
        assert_close!(m.value.value, 1.0, 1e-12);
        assert!(m.ambiguous);
        assert!(max_abs_diff(m.eta.matrix(), &diag(&[0.5, 0.0, 0.0, 0.5])) < 1e-14);
    }

    #[test]
    fn mid_of_classical_state_in_marginal_basis() {
        let x = MultipartiteState::validate(&[2, 2], diag(&[0.5, 0.2, 0.1, 0.2])).unwrap();
        let m = mid(&x).unwrap();
        assert_close!(m.value.value, 0.0, 1e-12);
        assert!(!m.ambiguous);
    }
}
