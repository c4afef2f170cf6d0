//! Configuration parsing, one-dimensional parameter sweeps, CSV output and
//! the analytic-versus-simulation comparison report.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{self, AnalyticError, DEFAULT_M, MAX_M};
use crate::link::CombiningScheme;
use crate::montecarlo::{estimate_outage, McError, SimulationPlan, Z_95};
use crate::params::{dbm_to_watts, ParamError, SystemParams};

pub const CSV_HEADER: &str = "variable,value,scheme,engine,p_out,ci_low,ci_high,n_trials,m_count";

/// Relative tolerance of the comparison report.
pub const REL_TOLERANCE: f64 = 0.1;
/// Standard-error multiple of the comparison report.
pub const SE_TOLERANCE: f64 = 3.0;
/// Monte Carlo estimates below this are too noisy to compare.
pub const MIN_COMPARABLE_P: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("line {line}: {key}: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },
    #[error("invalid sweep: {key}: {message}")]
    Spec { key: &'static str, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed CSV record {record}: {message}")]
    Record { record: usize, message: String },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
    #[error("no rows to write")]
    NoRows,
    #[error("no point has both an analytic and a Monte Carlo row")]
    NoPairs,
}

type Result<T> = std::result::Result<T, SweepError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    PTxDbm,
    DA,
    Beta,
    Rate,
    MCount,
}

impl SweepVariable {
    pub fn label(self) -> &'static str {
        match self {
            Self::PTxDbm => "p_tx_dbm",
            Self::DA => "d_a",
            Self::Beta => "beta",
            Self::Rate => "rate",
            Self::MCount => "m_count",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "p_tx_dbm" => Ok(Self::PTxDbm),
            "d_a" => Ok(Self::DA),
            "beta" => Ok(Self::Beta),
            "rate" => Ok(Self::Rate),
            "m_count" => Ok(Self::MCount),
            _ => Err(format!(
                "unknown variable {s:?}; expected p_tx_dbm, d_a, beta, rate or m_count"
            )),
        }
    }
}

/// Evaluation engines. `Direct` is the closed-form outage of the direct link
/// and is emitted for `direct_only` whenever an analytic engine is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Quadrature,
    HighSnr,
    Direct,
    MonteCarlo,
}

impl Engine {
    pub fn label(self) -> &'static str {
        match self {
            Self::Quadrature => "analytic_quadrature",
            Self::HighSnr => "analytic_high_snr",
            Self::Direct => "analytic_direct",
            Self::MonteCarlo => "montecarlo",
        }
    }

    pub fn is_analytic(self) -> bool {
        self != Self::MonteCarlo
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            Self::Quadrature,
            Self::HighSnr,
            Self::Direct,
            Self::MonteCarlo,
        ]
        .into_iter()
        .find(|e| e.label() == s)
        .ok_or_else(|| {
            format!(
                "unknown engine {s:?}; expected analytic_quadrature, analytic_high_snr, \
                     analytic_direct or montecarlo"
            )
        })
    }
}

/// Geometry rule applied at every sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Relay on the terminal-terminal line: `d_b = d_t - d_a`.
    RelayOnLine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub schemes: Vec<CombiningScheme>,
    pub engines: Vec<Engine>,
    pub mc_trials: u64,
    pub base_seed: u64,
    pub coupling: Option<Coupling>,
    /// Quadrature order unless the sweep variable is `m_count`.
    pub m_count: usize,
}

impl Default for SweepSpec {
    /// Outage versus transmit power, 0 to 30 dBm, for the three reference
    /// schemes and every engine.
    fn default() -> Self {
        Self {
            variable: SweepVariable::PTxDbm,
            grid: (0..=6).map(|i| 5.0 * i as f64).collect(),
            schemes: vec![
                CombiningScheme::OptimalCombining,
                CombiningScheme::RelayOnlyNoDirect,
                CombiningScheme::DirectOnly,
            ],
            engines: vec![Engine::Quadrature, Engine::HighSnr, Engine::MonteCarlo],
            mc_trials: 1_000_000,
            base_seed: 1,
            coupling: None,
            m_count: DEFAULT_M,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |key, message: &str| {
            Err(SweepError::Spec {
                key,
                message: message.to_string(),
            })
        };
        if self.grid.is_empty() {
            return bad("sweep.grid", "grid is empty");
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return bad("sweep.grid", "grid values must be finite");
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sweep.grid", "grid must be strictly increasing");
        }
        if self.schemes.is_empty() {
            return bad("sweep.schemes", "no schemes selected");
        }
        if self.engines.is_empty() {
            return bad("sweep.engines", "no engines selected");
        }
        if self.engines.contains(&Engine::MonteCarlo) && self.mc_trials == 0 {
            return bad("sweep.mc_trials", "must be at least 1");
        }
        if self.m_count == 0 || self.m_count > MAX_M {
            return bad("sweep.m_count", "quadrature order out of range");
        }
        if self.variable == SweepVariable::MCount
            && self
                .grid
                .iter()
                .any(|&v| v.fract() != 0.0 || v < 1.0 || v > MAX_M as f64)
        {
            return bad("sweep.grid", "m_count values must be integers in range");
        }
        Ok(())
    }

    /// Parameters and quadrature order at one grid value.
    pub fn point(&self, base: &SystemParams, value: f64) -> Result<(SystemParams, usize)> {
        let mut p = *base;
        let mut m = self.m_count;
        match self.variable {
            SweepVariable::PTxDbm => p.p_tx = dbm_to_watts(value)?,
            SweepVariable::DA => p.d_a = value,
            SweepVariable::Beta => p.beta = value,
            SweepVariable::Rate => p.rate = value,
            SweepVariable::MCount => m = value as usize,
        }
        if self.coupling == Some(Coupling::RelayOnLine) {
            p.d_b = p.d_t - p.d_a;
        }
        Ok((p.validate()?, m))
    }
}

/// One output line of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variable: String,
    pub value: f64,
    pub scheme: String,
    pub engine: String,
    pub p_out: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_trials: Option<u64>,
    pub m_count: Option<usize>,
}

const CONFIG_KEYS: [&str; 22] = [
    "p_tx_dbm",
    "noise_dbm",
    "p_th_dbm",
    "eta",
    "beta",
    "rate",
    "d_a",
    "d_b",
    "d_t",
    "alpha_s",
    "alpha_t",
    "lambda_a",
    "lambda_b",
    "lambda_t",
    "sweep.variable",
    "sweep.grid",
    "sweep.schemes",
    "sweep.engines",
    "sweep.mc_trials",
    "sweep.seed",
    "sweep.coupling",
    "sweep.m_count",
];

/// Config key holding a parameter field.
fn config_key(field: &str) -> &str {
    match field {
        "p_tx" | "p_watts" | "p_dbm" => "p_tx_dbm",
        "noise_power" => "noise_dbm",
        "p_th" => "p_th_dbm",
        other => other,
    }
}

fn param_field(e: &ParamError) -> &'static str {
    match e {
        ParamError::NonFinite(name) | ParamError::NonPositive { name, .. } => name,
        ParamError::BetaOutOfRange(_) => "beta",
        ParamError::EtaOutOfRange(_) => "eta",
    }
}

/// Parses `key = value` lines. `#` starts a comment; lists are
/// comma-separated. Unspecified keys keep their defaults.
pub fn parse_config_str(text: &str) -> Result<(SystemParams, SweepSpec)> {
    let mut params = SystemParams::reference();
    let mut spec = SweepSpec::default();
    let mut seen: HashMap<&str, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |key: &str, message: String| SweepError::Config {
            line,
            key: key.to_string(),
            message,
        };
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(content, "expected key = value".into()))?;
        let key = CONFIG_KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| err(key, "unknown key".into()))?;
        if let Some(first) = seen.insert(key, line) {
            return Err(err(key, format!("already set on line {first}")));
        }

        let number = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| err(key, format!("malformed number {v:?}")))
        };
        let integer = |v: &str| -> Result<u64> {
            v.parse::<u64>()
                .map_err(|_| err(key, format!("malformed integer {v:?}")))
        };
        let list = |v: &str| -> Vec<String> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        };
        let watts = |v: &str| -> Result<f64> {
            dbm_to_watts(number(v)?).map_err(|e| err(key, e.to_string()))
        };

        match key {
            "p_tx_dbm" => params.p_tx = watts(value)?,
            "noise_dbm" => params.noise_power = watts(value)?,
            "p_th_dbm" => params.p_th = watts(value)?,
            "eta" => params.eta = number(value)?,
            "beta" => params.beta = number(value)?,
            "rate" => params.rate = number(value)?,
            "d_a" => params.d_a = number(value)?,
            "d_b" => params.d_b = number(value)?,
            "d_t" => params.d_t = number(value)?,
            "alpha_s" => params.alpha_s = number(value)?,
            "alpha_t" => params.alpha_t = number(value)?,
            "lambda_a" => params.lambda_a = number(value)?,
            "lambda_b" => params.lambda_b = number(value)?,
            "lambda_t" => params.lambda_t = number(value)?,
            "sweep.variable" => spec.variable = value.parse().map_err(|m| err(key, m))?,
            "sweep.grid" => {
                spec.grid = list(value)
                    .iter()
                    .map(|v| number(v))
                    .collect::<Result<_>>()?
            }
            "sweep.schemes" => {
                spec.schemes = list(value)
                    .iter()
                    .map(|v| {
                        v.parse()
                            .map_err(|e: crate::link::SchemeError| err(key, e.to_string()))
                    })
                    .collect::<Result<_>>()?
            }
            "sweep.engines" => {
                spec.engines = list(value)
                    .iter()
                    .map(|v| v.parse().map_err(|m| err(key, m)))
                    .collect::<Result<_>>()?
            }
            "sweep.mc_trials" => spec.mc_trials = integer(value)?,
            "sweep.seed" => spec.base_seed = integer(value)?,
            "sweep.coupling" => {
                spec.coupling = match value.replace(' ', "").as_str() {
                    "none" => None,
                    "d_b=d_t-d_a" => Some(Coupling::RelayOnLine),
                    _ => {
                        return Err(err(
                            key,
                            format!("expected none or d_b = d_t - d_a, got {value:?}"),
                        ))
                    }
                }
            }
            "sweep.m_count" => spec.m_count = integer(value)? as usize,
            _ => unreachable!("key list and match arms out of sync"),
        }
    }

    if let Err(e) = params.validate() {
        let key = config_key(param_field(&e)).to_string();
        let line = seen.get(key.as_str()).copied().unwrap_or(0);
        return Err(SweepError::Config {
            line,
            key,
            message: e.to_string(),
        });
    }
    spec.validate().map_err(|e| match e {
        SweepError::Spec { key, message } => SweepError::Config {
            line: seen.get(key).copied().unwrap_or(0),
            key: key.to_string(),
            message,
        },
        other => other,
    })?;
    Ok((params, spec))
}

pub fn parse_config(path: &Path) -> Result<(SystemParams, SweepSpec)> {
    let text = fs::read_to_string(path).map_err(|source| SweepError::Io {
        context: format!("reading {}", path.display()),
        source,
    })?;
    parse_config_str(&text)
}

/// Engines evaluated for a scheme, in output order.
fn engines_for(scheme: CombiningScheme, selected: &[Engine]) -> Vec<Engine> {
    let any_analytic = selected.iter().any(|e| e.is_analytic());
    let mut out: Vec<Engine> = match scheme {
        CombiningScheme::OptimalCombining => selected
            .iter()
            .copied()
            .filter(|e| matches!(e, Engine::Quadrature | Engine::HighSnr))
            .collect(),
        CombiningScheme::DirectOnly if any_analytic => vec![Engine::Direct],
        _ => Vec::new(),
    };
    if selected.contains(&Engine::MonteCarlo) {
        out.push(Engine::MonteCarlo);
    }
    out.sort();
    out.dedup();
    out
}

fn evaluate(
    spec: &SweepSpec,
    params: &SystemParams,
    m_count: usize,
    value: f64,
    scheme: CombiningScheme,
    engine: Engine,
) -> Result<SweepRow> {
    let mut row = SweepRow {
        variable: spec.variable.label().to_string(),
        value,
        scheme: scheme.label(),
        engine: engine.label().to_string(),
        p_out: 0.0,
        ci_low: None,
        ci_high: None,
        n_trials: None,
        m_count: None,
    };
    match engine {
        Engine::Quadrature => {
            row.p_out = analytic::outage_quadrature(params, m_count)?;
            row.m_count = Some(m_count);
        }
        Engine::HighSnr => row.p_out = analytic::outage_high_snr(params)?,
        Engine::Direct => row.p_out = analytic::direct_outage(&params.derive()?),
        Engine::MonteCarlo => {
            let plan = SimulationPlan::new(*params, scheme, spec.mc_trials, spec.base_seed);
            let est = estimate_outage(&plan)?;
            row.p_out = est.p_hat;
            row.ci_low = Some(est.ci_low);
            row.ci_high = Some(est.ci_high);
            row.n_trials = Some(est.n_trials);
        }
    }
    Ok(row)
}

/// Evaluates grid x schemes x engines. Rows come out in grid order, then
/// scheme order, then engine order. Every Monte Carlo run uses `base_seed`,
/// so schemes at a point see the same channel draws.
pub fn run_sweep(params: &SystemParams, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut tasks = Vec::new();
    for &value in &spec.grid {
        let (p, m) = spec.point(params, value)?;
        for &scheme in &spec.schemes {
            for engine in engines_for(scheme, &spec.engines) {
                tasks.push((p, m, value, scheme, engine));
            }
        }
    }
    tasks
        .into_par_iter()
        .map(|(p, m, value, scheme, engine)| evaluate(spec, &p, m, value, scheme, engine))
        .collect()
}

/// Formats with 12 significant digits, fixed notation for moderate
/// magnitudes and scientific otherwise. Trailing zeros are dropped.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn record(row: &SweepRow) -> [String; 9] {
    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    [
        row.variable.clone(),
        format_number(row.value),
        row.scheme.clone(),
        row.engine.clone(),
        format_number(row.p_out),
        opt(row.ci_low),
        opt(row.ci_high),
        row.n_trials.map(|n| n.to_string()).unwrap_or_default(),
        row.m_count.map(|m| m.to_string()).unwrap_or_default(),
    ]
}

/// Writes rows as CSV to any writer.
pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(SweepError::NoRows);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush().map_err(|source| SweepError::Io {
        context: "writing CSV".into(),
        source,
    })
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(SweepError::NoRows);
    }
    let file = fs::File::create(path).map_err(|source| SweepError::Io {
        context: format!("creating {}", path.display()),
        source,
    })?;
    write_csv(rows, std::io::BufWriter::new(file))
}

/// Parses CSV text produced by [`write_csv`].
pub fn read_csv_from<R: std::io::Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header.join(",") != CSV_HEADER {
        return Err(SweepError::Record {
            record: 0,
            message: format!("unexpected header {:?}", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| SweepError::Record {
            record: i + 1,
            message,
        };
        let field = |j: usize| rec.get(j).unwrap_or("");
        let float = |j: usize| -> Result<f64> {
            field(j)
                .parse::<f64>()
                .map_err(|_| bad(format!("bad number {:?}", field(j))))
        };
        let opt_float = |j: usize| -> Result<Option<f64>> {
            if field(j).is_empty() {
                Ok(None)
            } else {
                float(j).map(Some)
            }
        };
        let opt_int = |j: usize| -> Result<Option<u64>> {
            if field(j).is_empty() {
                Ok(None)
            } else {
                field(j)
                    .parse::<u64>()
                    .map(Some)
                    .map_err(|_| bad(format!("bad integer {:?}", field(j))))
            }
        };
        rows.push(SweepRow {
            variable: field(0).to_string(),
            value: float(1)?,
            scheme: field(2).to_string(),
            engine: field(3).to_string(),
            p_out: float(4)?,
            ci_low: opt_float(5)?,
            ci_high: opt_float(6)?,
            n_trials: opt_int(7)?,
            m_count: opt_int(8)?.map(|m| m as usize),
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let file = fs::File::open(path).map_err(|source| SweepError::Io {
        context: format!("opening {}", path.display()),
        source,
    })?;
    read_csv_from(file)
}

/// One analytic row checked against the Monte Carlo row at the same point.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub variable: String,
    pub value: f64,
    pub scheme: String,
    pub engine: String,
    pub analytic: f64,
    pub monte_carlo: f64,
    pub rel_gap: f64,
    /// Gap in units of the Monte Carlo standard error.
    pub se_multiple: f64,
    /// `None` when the Monte Carlo estimate is below [`MIN_COMPARABLE_P`].
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub comparisons: Vec<Comparison>,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass != Some(false))
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.comparisons {
            let verdict = match c.pass {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "skip",
            };
            writeln!(
                f,
                "{verdict} {}={} {} {}: analytic {} mc {} rel_gap {:.4} se_multiple {:.2}",
                c.variable,
                format_number(c.value),
                c.scheme,
                c.engine,
                format_number(c.analytic),
                format_number(c.monte_carlo),
                c.rel_gap,
                c.se_multiple
            )?;
        }
        let failed = self
            .comparisons
            .iter()
            .filter(|c| c.pass == Some(false))
            .count();
        let skipped = self.comparisons.iter().filter(|c| c.pass.is_none()).count();
        write!(
            f,
            "overall {}: {} compared, {} failed, {} skipped",
            if self.passed() { "PASS" } else { "FAIL" },
            self.comparisons.len() - skipped,
            failed,
            skipped
        )
    }
}

/// Pairs each `analytic_quadrature` and `analytic_direct` row with the Monte
/// Carlo row of the same point and scheme. A pair passes when the gap is
/// within `max(10% of MC, 3 MC standard errors)`.
pub fn compare_report(rows: &[SweepRow]) -> Result<CompareReport> {
    let key = |r: &SweepRow| (r.variable.clone(), r.value.to_bits(), r.scheme.clone());
    let mc: HashMap<_, &SweepRow> = rows
        .iter()
        .filter(|r| r.engine == Engine::MonteCarlo.label())
        .map(|r| (key(r), r))
        .collect();
    let comparable = [Engine::Quadrature.label(), Engine::Direct.label()];
    let mut comparisons = Vec::new();
    for r in rows
        .iter()
        .filter(|r| comparable.contains(&r.engine.as_str()))
    {
        let Some(m) = mc.get(&key(r)) else { continue };
        let se = match (m.ci_low, m.ci_high) {
            (Some(lo), Some(hi)) => (hi - lo) / (2.0 * Z_95),
            _ => 0.0,
        };
        let gap = (r.p_out - m.p_out).abs();
        let rel_gap = if m.p_out > 0.0 {
            gap / m.p_out
        } else {
            f64::INFINITY
        };
        let se_multiple = if se > 0.0 { gap / se } else { f64::INFINITY };
        let pass = (m.p_out >= MIN_COMPARABLE_P)
            .then(|| gap <= (REL_TOLERANCE * m.p_out).max(SE_TOLERANCE * se));
        comparisons.push(Comparison {
            variable: r.variable.clone(),
            value: r.value,
            scheme: r.scheme.clone(),
            engine: r.engine.clone(),
            analytic: r.p_out,
            monte_carlo: m.p_out,
            rel_gap: if gap == 0.0 { 0.0 } else { rel_gap },
            se_multiple: if gap == 0.0 { 0.0 } else { se_multiple },
            pass,
        });
    }
    if comparisons.is_empty() {
        return Err(SweepError::NoPairs);
    }
    Ok(CompareReport { comparisons })
}
