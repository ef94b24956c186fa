//! Relative-entropy correlation measures for multipartite quantum states.
//!
//! Every correlation is a minimal relative entropy from a state to a set of
//! "uncorrelated" states:
//!
//! * total mutual information `T` (distance to the product of marginals),
//! * discord `D` (distance to the closest classical state),
//! * entanglement `E` (distance to the closest separable state `sigma`),
//! * dissonance `Q` (distance from `sigma` to its closest classical state),
//! * classical correlations `C` and the loop-closing quantities `L`.
//!
//! The modules mirror that chain: [`linalg`] is the matrix kernel,
//! [`state`] builds and validates states, [`classical`] handles the
//! product-basis (dephasing) side, [`entanglement`] the separable side, and
//! [`report`] runs the whole pipeline.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol) = ($a as f64, $b as f64, $tol as f64);
        assert!((a - b).abs() <= tol, "{} vs {} (tol {})", a, b, tol);
    }};
}

pub mod classical;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod optimize;
pub mod parallel;
pub mod report;
pub mod selftest;
pub mod state;

pub use classical::{
    classical_correlations, closest_classical_state, closest_product_state, dephase, discord,
    dissonance, l_quantity, mid, original_discord, total_mutual_information, DephasingResult,
    MeasureValue, Method, SearchOptions, Witness,
};
pub use entanglement::{ree, ree_numeric, ree_pure_bipartite, ReeMethod, ReeOptions, ReeResult, SeparableAnsatz};
pub use report::{
    full_analysis, subadditivity_audit, sweep, AnalysisOptions, CorrelationReport, Measure, SweepSpec,
};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianEigensystem, RelativeEntropy};
pub use state::{BasisParameters, MultipartiteState, ProductBasis};
