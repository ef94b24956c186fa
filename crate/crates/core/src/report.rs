//! The full pipeline: from a state to its closest separable, classical and
//! product states, the nine correlation quantities, the additivity checks,
//! and parameter sweeps over named families.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classical::{
    classical_correlations, closest_classical_state, l_quantity, mid, original_discord,
    total_mutual_information, DephasingResult, MeasureValue, Method, MidResult, OriginalDiscord,
    SearchOptions, Witness,
};
use crate::entanglement::{ree, ReeMethod, ReeOptions, ReeResult};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian_unchecked, ComplexMatrix};
use crate::parallel;
use crate::state::{build_family, MatrixJson, MultipartiteState};

/// A report fails the subadditivity audit when the gap is below minus this.
pub const SUBADDITIVITY_TOL: f64 = 1e-3;
const DEGENERACY_TOL: f64 = 1e-9;
const MAX_SWEEP_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Measure {
    T,
    D,
    C,
    L,
    E,
    Q,
    Delta,
    Mid,
}

impl Measure {
    pub const ALL: [Measure; 8] = [
        Measure::T,
        Measure::D,
        Measure::C,
        Measure::L,
        Measure::E,
        Measure::Q,
        Measure::Delta,
        Measure::Mid,
    ];
}

/// Parse `all` or a comma-separated list such as `E,D,Q,delta`.
pub fn parse_measures(text: &str) -> Result<Vec<Measure>> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("all") {
        return Ok(Measure::ALL.to_vec());
    }
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = match item.to_ascii_lowercase().as_str() {
            "t" => Measure::T,
            "d" => Measure::D,
            "c" => Measure::C,
            "l" => Measure::L,
            "e" => Measure::E,
            "q" => Measure::Q,
            "delta" => Measure::Delta,
            "mid" => Measure::Mid,
            _ => return Err(Error::InvalidInput(format!("unknown measure '{item}'"))),
        };
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no measures requested".into()));
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub measures: Vec<Measure>,
    pub search: SearchOptions,
    pub ree: ReeOptions,
    /// Party measured by the original discord.
    pub measured_party: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            measures: Measure::ALL.to_vec(),
            search: SearchOptions::default(),
            ree: ReeOptions::default(),
            measured_party: 0,
        }
    }
}

impl AnalysisOptions {
    /// One seed drives both searches.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.search.seed = seed;
        self.ree.seed = seed;
        self
    }

    fn wants(&self, m: Measure) -> bool {
        self.measures.contains(&m)
    }
}

/// An equally good closest separable state and its dissonance.
#[derive(Debug, Clone)]
pub struct SigmaCandidate {
    pub sigma: MultipartiteState,
    pub e: f64,
    pub q: MeasureValue,
}

#[derive(Debug, Clone, Default)]
pub struct ReportFlags {
    /// Names of quantities whose search did not converge.
    pub non_converged: Vec<String>,
    pub sigma_non_unique: bool,
    /// Some single-party marginal has a degenerate spectrum.
    pub marginal_degeneracy: bool,
}

#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub dims: Vec<usize>,
    pub t_rho: Option<MeasureValue>,
    pub d: Option<MeasureValue>,
    pub c_rho: Option<MeasureValue>,
    pub l_rho: Option<MeasureValue>,
    pub e: Option<MeasureValue>,
    pub t_sigma: Option<MeasureValue>,
    pub q: Option<MeasureValue>,
    pub c_sigma: Option<MeasureValue>,
    pub l_sigma: Option<MeasureValue>,
    pub delta: Option<OriginalDiscord>,
    /// Party measured for `delta`.
    pub measured_party: usize,
    pub mid: Option<MidResult>,
    pub ree: Option<ReeResult>,
    pub chi_rho: Option<DephasingResult>,
    pub chi_sigma: Option<DephasingResult>,
    /// `|T_rho - (D + C_rho - L_rho)|`
    pub residual_rho: Option<f64>,
    /// `|T_sigma - (Q + C_sigma - L_sigma)|`
    pub residual_sigma: Option<f64>,
    /// `T_rho - (E + Q + C_sigma)`
    pub subadditivity_gap: Option<f64>,
    /// Filled only when several optimal separable states were found.
    pub sigma_candidates: Vec<SigmaCandidate>,
    pub flags: ReportFlags,
}

/// Side quantities built on one closest classical state.
struct ChiChain {
    chi: DephasingResult,
    discord: MeasureValue,
    c: MeasureValue,
    l: MeasureValue,
}

fn chi_chain(x: &MultipartiteState, opts: &SearchOptions) -> Result<ChiChain> {
    let chi = closest_classical_state(x, opts);
    let converged = chi.diagnostics.converged;
    let discord = crate::classical::discord_from(x, &chi);
    let mut c = classical_correlations(&chi.chi);
    c.method = Method::Numeric;
    c.converged = converged;
    let mut l = l_quantity(x, &chi)?;
    l.method = Method::Numeric;
    Ok(ChiChain { chi, discord, c, l })
}

fn residual(t: &MeasureValue, d: &MeasureValue, c: &MeasureValue, l: &MeasureValue) -> f64 {
    (t.value - (d.value + c.value - l.value)).abs()
}

/// Run the pipeline `rho -> sigma -> chi_sigma`, `rho -> chi_rho`, and the
/// product states of each, for the requested measures.
pub fn full_analysis(x: &MultipartiteState, opts: &AnalysisOptions) -> Result<CorrelationReport> {
    let rho_chain = opts.wants(Measure::D) || opts.wants(Measure::C) || opts.wants(Measure::L);
    let sigma_side = opts.wants(Measure::E) || opts.wants(Measure::Q);
    let sigma_chain = sigma_side
        && (opts.wants(Measure::Q) || opts.wants(Measure::C) || opts.wants(Measure::L));

    let mut report = CorrelationReport {
        dims: x.dims().to_vec(),
        t_rho: opts.wants(Measure::T).then(|| total_mutual_information(x)),
        d: None,
        c_rho: None,
        l_rho: None,
        e: None,
        t_sigma: None,
        q: None,
        c_sigma: None,
        l_sigma: None,
        delta: None,
        measured_party: opts.measured_party,
        mid: None,
        ree: None,
        chi_rho: None,
        chi_sigma: None,
        residual_rho: None,
        residual_sigma: None,
        subadditivity_gap: None,
        sigma_candidates: Vec::new(),
        flags: ReportFlags {
            marginal_degeneracy: x
                .marginals()
                .iter()
                .any(|m| eig_hermitian_unchecked(m).has_degeneracy(DEGENERACY_TOL)),
            ..ReportFlags::default()
        },
    };

    if rho_chain {
        let chain = chi_chain(x, &opts.search)?;
        report.d = opts.wants(Measure::D).then_some(chain.discord);
        report.c_rho = opts.wants(Measure::C).then_some(chain.c);
        report.l_rho = opts.wants(Measure::L).then_some(chain.l);
        report.chi_rho = Some(chain.chi);
    }

    if sigma_side {
        let r = ree(x, &opts.ree);
        let method = if r.method == ReeMethod::Numeric {
            Method::Numeric
        } else {
            Method::Analytic
        };
        let sigma = r.sigma.clone();
        report.e = opts.wants(Measure::E).then(|| {
            MeasureValue::new(
                r.value,
                Witness::Separable(sigma.clone()),
                method,
                r.diagnostics.converged,
            )
        });
        report.t_sigma = opts.wants(Measure::T).then(|| total_mutual_information(&sigma));
        if sigma_chain {
            let chain = chi_chain(&sigma, &opts.search)?;
            report.q = opts.wants(Measure::Q).then_some(chain.discord);
            report.c_sigma = opts.wants(Measure::C).then_some(chain.c);
            report.l_sigma = opts.wants(Measure::L).then_some(chain.l);
            report.chi_sigma = Some(chain.chi);
        }
        if !r.alternatives.is_empty() {
            report.flags.sigma_non_unique = true;
            if opts.wants(Measure::Q) {
                let mut candidates = vec![SigmaCandidate {
                    sigma: sigma.clone(),
                    e: r.value,
                    q: report.q.clone().expect("Q requested"),
                }];
                for alt in &r.alternatives {
                    let e = crate::linalg::relative_entropy(x.matrix(), alt.matrix())?.value();
                    let q = crate::classical::discord(alt, &opts.search);
                    candidates.push(SigmaCandidate {
                        sigma: alt.clone(),
                        e,
                        q,
                    });
                }
                report.sigma_candidates = candidates;
            }
        }
        report.ree = Some(r);
    }

    if x.n_parties() == 2 {
        if opts.wants(Measure::Delta) {
            report.delta = Some(original_discord(x, opts.measured_party, &opts.search)?);
        }
        if opts.wants(Measure::Mid) {
            report.mid = Some(mid(x)?);
        }
    }

    if let (Some(t), Some(d), Some(c), Some(l)) = (&report.t_rho, &report.d, &report.c_rho, &report.l_rho) {
        report.residual_rho = Some(residual(t, d, c, l));
    }
    if let (Some(t), Some(q), Some(c), Some(l)) =
        (&report.t_sigma, &report.q, &report.c_sigma, &report.l_sigma)
    {
        report.residual_sigma = Some(residual(t, q, c, l));
    }
    if let (Some(t), Some(e), Some(q), Some(c)) = (&report.t_rho, &report.e, &report.q, &report.c_sigma) {
        report.subadditivity_gap = Some(t.value - (e.value + q.value + c.value));
    }

    let mut non_converged = Vec::new();
    for (name, m) in report.named_values() {
        if !m.converged {
            non_converged.push(name.to_string());
        }
    }
    if let Some(dl) = &report.delta {
        if !dl.delta.converged {
            non_converged.push("delta".into());
        }
    }
    for (k, cand) in report.sigma_candidates.iter().enumerate().skip(1) {
        if !cand.q.converged {
            non_converged.push(format!("Q[{k}]"));
        }
    }
    report.flags.non_converged = non_converged;
    Ok(report)
}

/// Outcome of checking `T_rho >= E + Q + C_sigma`.
#[derive(Debug, Clone, Serialize)]
pub struct SubadditivityAudit {
    pub t_rho: f64,
    pub e: f64,
    pub q: f64,
    pub c_sigma: f64,
    pub gap: f64,
    pub violation: bool,
}

pub fn subadditivity_audit(report: &CorrelationReport) -> Result<SubadditivityAudit> {
    match (&report.t_rho, &report.e, &report.q, &report.c_sigma) {
        (Some(t), Some(e), Some(q), Some(c)) => {
            let gap = t.value - (e.value + q.value + c.value);
            Ok(SubadditivityAudit {
                t_rho: t.value,
                e: e.value,
                q: q.value,
                c_sigma: c.value,
                gap,
                violation: gap < -SUBADDITIVITY_TOL,
            })
        }
        _ => Err(Error::InvalidInput(
            "subadditivity audit needs T, E, Q and C in the report".into(),
        )),
    }
}

/// Round to 12 significant digits.
pub fn sig12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn round_matrix(m: &ComplexMatrix) -> MatrixJson {
    let mut j = MatrixJson::from_matrix(m);
    for row in j.re.iter_mut().chain(j.im.iter_mut()) {
        for v in row.iter_mut() {
            *v = sig12(*v);
        }
    }
    j
}

#[derive(Serialize)]
struct ValueJson {
    value: f64,
    method: Method,
    converged: bool,
}

impl From<&MeasureValue> for ValueJson {
    fn from(m: &MeasureValue) -> Self {
        Self {
            value: sig12(m.value),
            method: m.method,
            converged: m.converged,
        }
    }
}

#[derive(Serialize)]
struct DeltaJson {
    value: f64,
    measured_party: usize,
    identity_gap: f64,
    converged: bool,
    measurement_basis: Option<MatrixJson>,
}

#[derive(Serialize)]
struct MidJson {
    value: f64,
    ambiguous: bool,
}

#[derive(Serialize)]
struct ReeJson {
    method: ReeMethod,
    terms: usize,
    restarts: usize,
    sweeps: usize,
    converged: bool,
    restart_gap: f64,
    entropy_gap_monitor: f64,
}

#[derive(Serialize)]
struct CandidateJson {
    #[serde(rename = "E")]
    e: f64,
    #[serde(rename = "Q")]
    q: f64,
    q_converged: bool,
    sigma: MatrixJson,
}

#[derive(Serialize)]
struct FlagsJson<'a> {
    non_converged: &'a [String],
    sigma_non_unique: bool,
    marginal_degeneracy: bool,
    subadditivity_violation: Option<bool>,
}

#[derive(Serialize)]
struct ClassicalWitnessJson {
    basis: Vec<MatrixJson>,
    state: MatrixJson,
}

#[derive(Serialize)]
struct WitnessesJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_rho: Option<ClassicalWitnessJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_sigma: Option<ClassicalWitnessJson>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    dims: &'a [usize],
    measures: BTreeMap<&'static str, ValueJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<DeltaJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mid: Option<MidJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ree: Option<ReeJson>,
    identity_residuals: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subadditivity_gap: Option<f64>,
    flags: FlagsJson<'a>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    sigma_candidates: Vec<CandidateJson>,
    witnesses: WitnessesJson,
}

fn classical_witness(chi: &DephasingResult) -> ClassicalWitnessJson {
    ClassicalWitnessJson {
        basis: chi.basis.locals().iter().map(round_matrix).collect(),
        state: round_matrix(chi.chi.matrix()),
    }
}

/// Fixed column order of CSV output, after any sweep parameters.
pub const CSV_COLUMNS: [&str; 20] = [
    "T_rho",
    "D",
    "C_rho",
    "L_rho",
    "E",
    "T_sigma",
    "Q",
    "C_sigma",
    "L_sigma",
    "delta",
    "MID",
    "MID_minus_D",
    "residual_rho",
    "residual_sigma",
    "subadditivity_gap",
    "subadditivity_violation",
    "ree_method",
    "non_converged",
    "sigma_non_unique",
    "marginal_degeneracy",
];

/// Text form of a 12-digit value; exponent notation outside `[1e-4, 1e12)`.
pub fn format_number(v: f64) -> String {
    let r = sig12(v);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-4..1e12).contains(&a) || !r.is_finite() {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

impl CorrelationReport {
    /// The nine quantities under their report names, skipping absent ones.
    pub fn named_values(&self) -> Vec<(&'static str, &MeasureValue)> {
        [
            ("T_rho", &self.t_rho),
            ("D", &self.d),
            ("C_rho", &self.c_rho),
            ("L_rho", &self.l_rho),
            ("E", &self.e),
            ("T_sigma", &self.t_sigma),
            ("Q", &self.q),
            ("C_sigma", &self.c_sigma),
            ("L_sigma", &self.l_sigma),
        ]
        .into_iter()
        .filter_map(|(n, v)| v.as_ref().map(|v| (n, v)))
        .collect()
    }

    pub fn has_non_convergence(&self) -> bool {
        !self.flags.non_converged.is_empty()
    }

    pub fn subadditivity_violation(&self) -> Option<bool> {
        self.subadditivity_gap.map(|g| g < -SUBADDITIVITY_TOL)
    }

    pub fn mid_minus_d(&self) -> Option<f64> {
        match (&self.mid, &self.d) {
            (Some(m), Some(d)) => Some(m.value.value - d.value),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let measures = self
            .named_values()
            .into_iter()
            .map(|(n, v)| (n, ValueJson::from(v)))
            .collect();
        let mut residuals = BTreeMap::new();
        if let Some(r) = self.residual_rho {
            residuals.insert("rho", sig12(r));
        }
        if let Some(r) = self.residual_sigma {
            residuals.insert("sigma", sig12(r));
        }
        let delta = self.delta.as_ref().map(|d| DeltaJson {
            value: sig12(d.delta.value),
            measured_party: self.measured_party,
            identity_gap: sig12(d.identity_gap),
            converged: d.delta.converged,
            measurement_basis: match &d.delta.witness {
                Witness::LocalBasis(b) => Some(round_matrix(b)),
                _ => None,
            },
        });
        let json = ReportJson {
            dims: &self.dims,
            measures,
            delta,
            mid: self.mid.as_ref().map(|m| MidJson {
                value: sig12(m.value.value),
                ambiguous: m.ambiguous,
            }),
            ree: self.ree.as_ref().map(|r| ReeJson {
                method: r.method,
                terms: r.diagnostics.terms,
                restarts: r.diagnostics.restarts,
                sweeps: r.diagnostics.sweeps,
                converged: r.diagnostics.converged,
                restart_gap: sig12(r.diagnostics.restart_gap),
                entropy_gap_monitor: sig12(r.diagnostics.entropy_gap_monitor),
            }),
            identity_residuals: residuals,
            subadditivity_gap: self.subadditivity_gap.map(sig12),
            flags: FlagsJson {
                non_converged: &self.flags.non_converged,
                sigma_non_unique: self.flags.sigma_non_unique,
                marginal_degeneracy: self.flags.marginal_degeneracy,
                subadditivity_violation: self.subadditivity_violation(),
            },
            sigma_candidates: self
                .sigma_candidates
                .iter()
                .map(|c| CandidateJson {
                    e: sig12(c.e),
                    q: sig12(c.q.value),
                    q_converged: c.q.converged,
                    sigma: round_matrix(c.sigma.matrix()),
                })
                .collect(),
            witnesses: WitnessesJson {
                sigma: self.ree.as_ref().map(|r| round_matrix(r.sigma.matrix())),
                chi_rho: self.chi_rho.as_ref().map(classical_witness),
                chi_sigma: self.chi_sigma.as_ref().map(classical_witness),
            },
        };
        serde_json::to_value(json).expect("report serialises")
    }

    /// Values in [`CSV_COLUMNS`] order.
    pub fn csv_cells(&self) -> Vec<String> {
        let v = |m: &Option<MeasureValue>| cell(m.as_ref().map(|m| m.value));
        vec![
            v(&self.t_rho),
            v(&self.d),
            v(&self.c_rho),
            v(&self.l_rho),
            v(&self.e),
            v(&self.t_sigma),
            v(&self.q),
            v(&self.c_sigma),
            v(&self.l_sigma),
            cell(self.delta.as_ref().map(|d| d.delta.value)),
            cell(self.mid.as_ref().map(|m| m.value.value)),
            cell(self.mid_minus_d()),
            cell(self.residual_rho),
            cell(self.residual_sigma),
            cell(self.subadditivity_gap),
            self.subadditivity_violation().map(|b| b.to_string()).unwrap_or_default(),
            self.ree
                .as_ref()
                .map(|r| serde_json::to_value(r.method).expect("enum").as_str().unwrap_or("").to_string())
                .unwrap_or_default(),
            self.flags.non_converged.join(";"),
            self.flags.sigma_non_unique.to_string(),
            self.flags.marginal_degeneracy.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        w.write_record(self.csv_cells())?;
        w.flush()?;
        Ok(())
    }

    /// Human-readable summary.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "state dims {:?}", self.dims);
        let _ = writeln!(s, "{:<18} {:>16}  {:<9} {}", "quantity", "bits", "method", "converged");
        for (name, m) in self.named_values() {
            let method = match m.method {
                Method::Analytic => "analytic",
                Method::Numeric => "numeric",
            };
            let _ = writeln!(s, "{:<18} {:>16.10}  {:<9} {}", name, m.value, method, m.converged);
        }
        if let Some(d) = &self.delta {
            let _ = writeln!(s, "{:<18} {:>16.10}  {:<9} {}", "delta", d.delta.value, "numeric", d.delta.converged);
        }
        if let Some(m) = &self.mid {
            let _ = writeln!(s, "{:<18} {:>16.10}  {:<9} {}", "MID", m.value.value, "analytic", true);
        }
        if let Some(r) = self.residual_rho {
            let _ = writeln!(s, "{:<18} {:>16.3e}", "residual_rho", r);
        }
        if let Some(r) = self.residual_sigma {
            let _ = writeln!(s, "{:<18} {:>16.3e}", "residual_sigma", r);
        }
        if let Some(g) = self.subadditivity_gap {
            let verdict = if g < -SUBADDITIVITY_TOL { "VIOLATION" } else { "ok" };
            let _ = writeln!(s, "{:<18} {:>16.10}  {}", "subadditivity_gap", g, verdict);
        }
        if let Some(r) = &self.ree {
            let _ = writeln!(s, "ree method: {}", serde_json::to_value(r.method).expect("enum").as_str().unwrap_or(""));
        }
        for (k, c) in self.sigma_candidates.iter().enumerate() {
            let _ = writeln!(s, "sigma candidate {k}: E = {:.10}, Q = {:.10}", c.e, c.q.value);
        }
        if self.flags.sigma_non_unique {
            let _ = writeln!(s, "flag: closest separable state is not unique");
        }
        if self.flags.marginal_degeneracy {
            let _ = writeln!(s, "flag: degenerate marginal spectrum");
        }
        if !self.flags.non_converged.is_empty() {
            let _ = writeln!(s, "flag: not converged: {}", self.flags.non_converged.join(", "));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    fn value(&self, i: usize) -> f64 {
        if self.steps <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }
}

fn default_measures() -> String {
    "all".into()
}

/// A grid over the parameters of a named family.
///
/// ```json
/// {"family": "bell_diagonal",
///  "axes": [{"name": "l1", "min": 0.25, "max": 1.0, "steps": 16}],
///  "measures": "E,D,Q", "seed": 7}
/// ```
///
/// Parameters not on an axis come from `fixed`. For `bell_diagonal`, giving
/// only `l1` sets the other three weights to `(1 - l1) / 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: String,
    pub axes: Vec<SweepAxis>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default = "default_measures")]
    pub measures: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub ree_terms: Option<usize>,
}

pub fn family_parameters(family: &str) -> Result<&'static [&'static str]> {
    match family {
        "bell_diagonal" => Ok(&["l1", "l2", "l3", "l4"]),
        "mid_counterexample" => Ok(&["q", "p00", "p01", "p10", "p11"]),
        "w" | "cluster4" => Ok(&[]),
        other => Err(Error::InvalidInput(format!("unknown state family '{other}'"))),
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub params: Vec<f64>,
    pub report: CorrelationReport,
}

impl SweepSpec {
    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    fn validate(&self) -> Result<&'static [&'static str]> {
        let names = family_parameters(&self.family)?;
        for a in &self.axes {
            if a.steps == 0 {
                return Err(Error::InvalidInput(format!("axis '{}' has zero steps", a.name)));
            }
            if !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidInput(format!("axis '{}' has a non-finite bound", a.name)));
            }
            if !names.contains(&a.name.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "'{}' is not a parameter of family '{}'",
                    a.name, self.family
                )));
            }
            if self.fixed.contains_key(&a.name) || self.axes.iter().filter(|b| b.name == a.name).count() > 1 {
                return Err(Error::InvalidInput(format!("parameter '{}' given twice", a.name)));
            }
        }
        for k in self.fixed.keys() {
            if !names.contains(&k.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "'{k}' is not a parameter of family '{}'",
                    self.family
                )));
            }
        }
        let total = self
            .axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.steps))
            .filter(|&n| n <= MAX_SWEEP_POINTS);
        if total.is_none() {
            return Err(Error::InvalidInput(format!(
                "sweep grid exceeds {MAX_SWEEP_POINTS} points"
            )));
        }
        Ok(names)
    }

    fn analysis_options(&self) -> Result<AnalysisOptions> {
        let mut opts = AnalysisOptions {
            measures: parse_measures(&self.measures)?,
            ..AnalysisOptions::default()
        }
        .with_seed(self.seed);
        if let Some(r) = self.restarts {
            opts.search.restarts = r.max(1);
        }
        opts.ree.terms = self.ree_terms;
        Ok(opts)
    }

    /// Parameter vectors in row-major order (first axis slowest).
    pub fn grid(&self) -> Result<Vec<Vec<f64>>> {
        let names = self.validate()?;
        let n = self.point_count();
        let mut out = Vec::with_capacity(n);
        for flat in 0..n {
            let mut rem = flat;
            let mut on_axis = BTreeMap::new();
            for a in self.axes.iter().rev() {
                on_axis.insert(a.name.as_str(), a.value(rem % a.steps));
                rem /= a.steps;
            }
            let lookup = |name: &str| on_axis.get(name).copied().or_else(|| self.fixed.get(name).copied());
            let mut params = Vec::with_capacity(names.len());
            let werner_line = self.family == "bell_diagonal"
                && lookup("l1").is_some()
                && names[1..].iter().all(|k| lookup(k).is_none());
            for &name in names {
                let v = match lookup(name) {
                    Some(v) => v,
                    None if werner_line => (1.0 - lookup("l1").expect("checked")) / 3.0,
                    None => {
                        return Err(Error::InvalidInput(format!(
                            "parameter '{name}' of family '{}' is neither on an axis nor fixed",
                            self.family
                        )))
                    }
                };
                params.push(v);
            }
            out.push(params);
        }
        Ok(out)
    }
}

/// Evaluate every grid point. All states are built before any analysis, so
/// an invalid point fails the whole sweep up front.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let grid = spec.grid()?;
    let opts = spec.analysis_options()?;
    let states = grid
        .iter()
        .map(|p| build_family(&spec.family, p))
        .collect::<Result<Vec<_>>>()?;
    let reports = parallel::map_indexed(states.len(), |i| full_analysis(&states[i], &opts));
    grid.into_iter()
        .zip(reports)
        .enumerate()
        .map(|(index, (params, report))| {
            Ok(SweepRow {
                index,
                params,
                report: report?,
            })
        })
        .collect()
}

/// CSV header for a sweep: `point`, the family parameters, then
/// [`CSV_COLUMNS`].
pub fn sweep_header(spec: &SweepSpec) -> Result<Vec<String>> {
    let mut h = vec!["point".to_string()];
    h.extend(family_parameters(&spec.family)?.iter().map(|s| s.to_string()));
    h.extend(CSV_COLUMNS.iter().map(|s| s.to_string()));
    Ok(h)
}

pub fn write_sweep_csv<W: Write>(spec: &SweepSpec, rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(spec)?)?;
    for row in rows {
        let mut rec = vec![row.index.to_string()];
        rec.extend(row.params.iter().map(|p| format_number(*p)));
        rec.extend(row.report.csv_cells());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::binary_entropy;
    use crate::state::{bell_diagonal, cluster_state_4, random_product_ket};

    #[test]
    fn measures_parse() {
        assert_eq!(parse_measures("all").unwrap(), Measure::ALL.to_vec());
        assert_eq!(
            parse_measures("E, d,delta,E").unwrap(),
            vec![Measure::D, Measure::E, Measure::Delta]
        );
        assert!(parse_measures("E,X").is_err());
        assert!(parse_measures(" , ").is_err());
    }

    #[test]
    fn sig12_keeps_twelve_digits() {
        assert_eq!(sig12(0.123456789012345), 0.123456789012);
        assert_eq!(sig12(-1234.56789012345678), -1234.56789012);
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(format_number(2.220446049250313e-16), "2.22044604925e-16");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(-0.0), "0");
    }

    #[test]
    fn bell_diagonal_report() {
        let x = bell_diagonal([0.7, 0.1, 0.1, 0.1]).unwrap();
        let r = full_analysis(&x, &AnalysisOptions::default()).unwrap();
        let e = r.e.as_ref().unwrap().value;
        assert_close!(e, 1.0 - binary_entropy(0.7), 1e-10);
        assert!(r.residual_rho.unwrap() <= 1e-7);
        assert!(r.residual_sigma.unwrap() <= 1e-7);
        let t = r.t_rho.as_ref().unwrap().value;
        assert_close!(t, 0.6432, 1e-4);
        let gap = r.subadditivity_gap.unwrap();
        assert_close!(gap, 0.317, 1e-3);
        let audit = subadditivity_audit(&r).unwrap();
        assert!(!audit.violation);
        assert!(r.flags.non_converged.is_empty());
        let d = r.delta.as_ref().unwrap();
        assert_close!(d.delta.value, 0.3651, 1e-4);
    }

    #[test]
    fn cluster_report() {
        let r = full_analysis(&cluster_state_4(), &AnalysisOptions::default()).unwrap();
        assert_close!(r.e.as_ref().unwrap().value, 2.0, 1e-9);
        assert!(r.q.as_ref().unwrap().value <= 5e-3);
        assert_close!(r.c_rho.as_ref().unwrap().value, 2.0, 1e-6);
        assert_close!(r.t_rho.as_ref().unwrap().value, 4.0, 1e-9);
        assert_close!(r.subadditivity_gap.unwrap(), 0.0, 1e-3);
        assert!(r.delta.is_none() && r.mid.is_none());
    }

    #[test]
    fn product_state_report_is_all_zero() {
        let mut rng = crate::state::rng_from_seed(8);
        let ket = random_product_ket(&[2, 3], &mut rng);
        let x = MultipartiteState::pure(&[2, 3], &crate::linalg::kron_vectors(&ket[0], &ket[1])).unwrap();
        let r = full_analysis(&x, &AnalysisOptions::default()).unwrap();
        for (name, m) in r.named_values() {
            assert!(m.value.abs() < 1e-6, "{name} = {}", m.value);
        }
        assert!(r.delta.unwrap().delta.value.abs() < 1e-6);
        assert!(r.mid.unwrap().value.value.abs() < 1e-6);
    }

    #[test]
    fn measure_subset_skips_unrequested_work() {
        let x = bell_diagonal([0.7, 0.1, 0.1, 0.1]).unwrap();
        let opts = AnalysisOptions {
            measures: parse_measures("T,D").unwrap(),
            ..AnalysisOptions::default()
        };
        let r = full_analysis(&x, &opts).unwrap();
        assert!(r.t_rho.is_some() && r.d.is_some());
        assert!(r.e.is_none() && r.q.is_none() && r.ree.is_none());
        assert!(r.residual_rho.is_none() && r.subadditivity_gap.is_none());
        assert!(subadditivity_audit(&r).is_err());
    }

    #[test]
    fn werner_line_grid() {
        let spec: SweepSpec = serde_json::from_str(
            r#"{"family":"bell_diagonal","axes":[{"name":"l1","min":0.25,"max":1.0,"steps":4}]}"#,
        )
        .unwrap();
        let g = spec.grid().unwrap();
        assert_eq!(g.len(), 4);
        assert_close!(g[1][0], 0.5, 1e-15);
        assert_close!(g[1][3], 0.5 / 3.0, 1e-15);
    }

    #[test]
    fn grid_is_row_major() {
        let spec = SweepSpec {
            family: "mid_counterexample".into(),
            axes: vec![
                SweepAxis { name: "q".into(), min: 0.0, max: 1.0, steps: 2 },
                SweepAxis { name: "p00".into(), min: 0.1, max: 0.3, steps: 3 },
            ],
            fixed: [("p01", 0.2), ("p10", 0.2), ("p11", 0.2)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            measures: "all".into(),
            seed: 0,
            restarts: None,
            ree_terms: None,
        };
        let g = spec.grid().unwrap();
        let qs: Vec<f64> = g.iter().map(|p| p[0]).collect();
        assert_eq!(qs, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_close!(g[4][1], 0.2, 1e-15);
    }

    #[test]
    fn invalid_specs_rejected() {
        let base = r#"{"family":"bell_diagonal","axes":[{"name":"l1","min":0.3,"max":0.9,"steps":3}]"#;
        let bad = [
            r#"{"family":"nope","axes":[]}"#.to_string(),
            r#"{"family":"bell_diagonal","axes":[{"name":"l9","min":0,"max":1,"steps":2}]}"#.into(),
            r#"{"family":"bell_diagonal","axes":[{"name":"l1","min":0,"max":1,"steps":0}]}"#.into(),
            format!(r#"{base},"fixed":{{"l1":0.5}}}}"#),
            format!(r#"{base},"fixed":{{"l2":0.5}}}}"#),
        ];
        for text in bad {
            let spec: SweepSpec = serde_json::from_str(&text).unwrap();
            assert!(spec.grid().is_err(), "{text}");
        }
        let huge: SweepSpec = serde_json::from_str(
            r#"{"family":"mid_counterexample","axes":[
                {"name":"q","min":0,"max":1,"steps":1001},
                {"name":"p00","min":0,"max":1,"steps":1001}],
                "fixed":{"p01":0,"p10":0,"p11":0}}"#,
        )
        .unwrap();
        assert!(huge.grid().is_err());
    }

    #[test]
    fn invalid_state_in_sweep_fails_fast() {
        let spec: SweepSpec = serde_json::from_str(
            r#"{"family":"mid_counterexample","axes":[{"name":"q","min":0.5,"max":1.5,"steps":3}],
                "fixed":{"p00":0.25,"p01":0.25,"p10":0.25,"p11":0.25}}"#,
        )
        .unwrap();
        assert!(matches!(sweep(&spec), Err(Error::InvalidDistribution(_))));
    }
}
