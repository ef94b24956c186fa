//! JSON state files.
//!
//! Two shapes are accepted:
//!
//! ```json
//! {"dims": [2, 2], "matrix": {"re": [[...], ...], "im": [[...], ...]}}
//! {"family": "bell_diagonal", "params": [0.7, 0.1, 0.1, 0.1]}
//! ```
//!
//! Families: `bell_diagonal` (four weights), `w`, `cluster4` (no params),
//! `mid_counterexample` (`q, p00, p01, p10, p11`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix};

use super::{bell_diagonal, cluster_state_4, mid_counterexample, w_state, MultipartiteState};

/// Row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&nalgebra::Complex<f64>) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let n = self.re.len();
        if self.re.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix.re is not square".into()));
        }
        if !self.im.is_empty() && (self.im.len() != n || self.im.iter().any(|r| r.len() != n)) {
            return Err(Error::DimensionMismatch(
                "matrix.im does not match the shape of matrix.re".into(),
            ));
        }
        Ok(ComplexMatrix::from_fn(n, n, |i, j| {
            let im = if self.im.is_empty() { 0.0 } else { self.im[i][j] };
            c(self.re[i][j], im)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateFile {
    Matrix { dims: Vec<usize>, matrix: MatrixJson },
    Family {
        family: String,
        #[serde(default)]
        params: Vec<f64>,
    },
}

impl StateFile {
    pub fn build(&self) -> Result<MultipartiteState> {
        match self {
            StateFile::Matrix { dims, matrix } => {
                MultipartiteState::validate(dims, matrix.to_matrix()?)
            }
            StateFile::Family { family, params } => build_family(family, params),
        }
    }

    pub fn from_state(state: &MultipartiteState) -> Self {
        StateFile::Matrix {
            dims: state.dims().to_vec(),
            matrix: MatrixJson::from_matrix(state.matrix()),
        }
    }
}

fn expect_params(family: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(Error::InvalidInput(format!(
            "family '{family}' takes {n} parameters, got {}",
            params.len()
        )));
    }
    Ok(())
}

/// Construct a named family member.
pub fn build_family(family: &str, params: &[f64]) -> Result<MultipartiteState> {
    match family {
        "bell_diagonal" => {
            expect_params(family, params, 4)?;
            bell_diagonal([params[0], params[1], params[2], params[3]])
        }
        "w" => {
            expect_params(family, params, 0)?;
            Ok(w_state())
        }
        "cluster4" => {
            expect_params(family, params, 0)?;
            Ok(cluster_state_4())
        }
        "mid_counterexample" => {
            expect_params(family, params, 5)?;
            mid_counterexample(params[0], [params[1], params[2], params[3], params[4]])
        }
        other => Err(Error::InvalidInput(format!("unknown state family '{other}'"))),
    }
}

pub fn parse_state_json(text: &str) -> Result<MultipartiteState> {
    let file: StateFile = serde_json::from_str(text)?;
    file.build()
}

pub fn load_state_file(path: impl AsRef<Path>) -> Result<MultipartiteState> {
    let text = std::fs::read_to_string(path)?;
    parse_state_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::random_state;

    #[test]
    fn matrix_form_round_trips() {
        let s = random_state(&[2, 3], 6, 11).unwrap();
        let text = serde_json::to_string(&StateFile::from_state(&s)).unwrap();
        let back = parse_state_json(&text).unwrap();
        assert_eq!(back.dims(), s.dims());
        assert!(back.max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn family_forms() {
        let s = parse_state_json(r#"{"family":"bell_diagonal","params":[0.7,0.1,0.1,0.1]}"#).unwrap();
        assert_eq!(s.dims(), &[2, 2]);
        let w = parse_state_json(r#"{"family":"w"}"#).unwrap();
        assert_eq!(w.dims(), &[2, 2, 2]);
        let m = parse_state_json(
            r#"{"family":"mid_counterexample","params":[0.6,0.3,0.25,0.25,0.2]}"#,
        )
        .unwrap();
        assert_eq!(m.dim(), 4);
    }

    #[test]
    fn real_only_matrix_accepted() {
        let s = parse_state_json(
            r#"{"dims":[2],"matrix":{"re":[[0.5,0.0],[0.0,0.5]]}}"#,
        )
        .unwrap();
        assert_close!(s.entropy(), 1.0, 1e-12);
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(matches!(
            parse_state_json(r#"{"family":"ghz"}"#),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            parse_state_json(r#"{"family":"bell_diagonal","params":[1.0]}"#),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            parse_state_json(r#"{"dims":[2,2],"matrix":{"re":[[1.0,0.0],[0.0,0.0]]}}"#),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(parse_state_json("not json"), Err(Error::Json(_))));
    }
}
