//! Golden values for the named families, run by `corrgeo selftest`.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::entanglement::{ree_numeric, ReeOptions};
use crate::error::Result;
use crate::linalg::{binary_entropy, c, shannon_entropy};
use crate::report::{full_analysis, AnalysisOptions, CorrelationReport};
use crate::state::{bell_basis, bell_diagonal, cluster_state_4, w_state, MultipartiteState};

#[derive(Debug, Clone)]
pub struct GoldenCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tol: f64,
}

impl GoldenCheck {
    fn new(name: &str, value: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            expected,
            tol,
        }
    }

    pub fn passed(&self) -> bool {
        (self.value - self.expected).abs() <= self.tol
    }
}

fn get(r: &CorrelationReport, name: &str) -> f64 {
    r.named_values()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, m)| m.value)
        .unwrap_or(f64::NAN)
}

pub fn run() -> Result<Vec<GoldenCheck>> {
    let opts = AnalysisOptions::default();
    let mut out = Vec::new();

    let w = full_analysis(&w_state(), &opts)?;
    for (name, expected, tol) in [
        ("E", 1.17, 0.02),
        ("D", 1.58, 0.01),
        ("Q", 0.94, 0.02),
        ("C_rho", 1.17, 0.01),
        ("C_sigma", 0.36, 0.02),
        ("L_rho", 0.0, 0.01),
        ("L_sigma", 0.24, 0.02),
    ] {
        out.push(GoldenCheck::new(&format!("W {name}"), get(&w, name), expected, tol));
    }
    out.push(GoldenCheck::new(
        "W T_rho - (E + Q + C_sigma)",
        w.subadditivity_gap.unwrap_or(f64::NAN),
        0.285,
        0.02,
    ));
    let w_numeric = ree_numeric(&w_state(), &ReeOptions::default());
    out.push(GoldenCheck::new("W E (numeric)", w_numeric.value, 1.1699, 5e-3));

    let c4 = full_analysis(&cluster_state_4(), &opts)?;
    out.push(GoldenCheck::new("C4 E", get(&c4, "E"), 2.0, 5e-3));
    out.push(GoldenCheck::new("C4 Q", get(&c4, "Q"), 0.0, 5e-3));
    out.push(GoldenCheck::new("C4 C_rho", get(&c4, "C_rho"), 2.0, 1e-3));
    out.push(GoldenCheck::new(
        "C4 T_rho - (E + C_rho)",
        get(&c4, "T_rho") - get(&c4, "E") - get(&c4, "C_rho"),
        0.0,
        1e-2,
    ));

    let weights = [0.7, 0.1, 0.1, 0.1];
    let bell = full_analysis(&bell_diagonal(weights)?, &opts)?;
    out.push(GoldenCheck::new("Bell-diagonal E", get(&bell, "E"), 1.0 - binary_entropy(0.7), 1e-9));
    out.push(GoldenCheck::new(
        "Bell-diagonal D",
        get(&bell, "D"),
        1.0 + binary_entropy(0.8) - shannon_entropy(&weights),
        1e-6,
    ));
    let werner = full_analysis(&bell_diagonal([0.5, 0.5 / 3.0, 0.5 / 3.0, 0.5 / 3.0])?, &opts)?;
    out.push(GoldenCheck::new("Bell-diagonal E at lambda1 = 1/2", get(&werner, "E"), 0.0, 1e-9));

    let ket = DVector::from_vec(vec![c(0.9f64.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.1f64.sqrt(), 0.0)]);
    let pure = full_analysis(&MultipartiteState::pure(&[2, 2], &ket)?, &opts)?;
    out.push(GoldenCheck::new("pure bipartite E", get(&pure, "E"), binary_entropy(0.9), 1e-9));
    out.push(GoldenCheck::new("pure bipartite D", get(&pure, "D"), binary_entropy(0.9), 2e-3));
    out.push(GoldenCheck::new(
        "pure bipartite T - (E + C_rho)",
        get(&pure, "T_rho") - get(&pure, "E") - get(&pure, "C_rho"),
        0.0,
        1e-6,
    ));

    let phi = full_analysis(&MultipartiteState::pure(&[2, 2], &bell_basis()[0])?, &opts)?;
    out.push(GoldenCheck::new(
        "Phi+ original discord",
        phi.delta.as_ref().map(|d| d.delta.value).unwrap_or(f64::NAN),
        1.0,
        1e-6,
    ));
    out.push(GoldenCheck::new(
        "Phi+ MID",
        phi.mid.as_ref().map(|m| m.value.value).unwrap_or(f64::NAN),
        1.0,
        1e-9,
    ));
    Ok(out)
}

pub fn format_table(checks: &[GoldenCheck]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>14}  {:>14}  {:>9}  result",
        "check", "value", "expected", "tol"
    );
    for ch in checks {
        let _ = writeln!(
            s,
            "{:<width$}  {:>14.10}  {:>14.10}  {:>9.1e}  {}",
            ch.name,
            ch.value,
            ch.expected,
            ch.tol,
            if ch.passed() { "PASS" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    let _ = writeln!(s, "{} checks, {} failed", checks.len(), failed);
    s
}
