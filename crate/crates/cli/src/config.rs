//! JSON run configuration and its translation into library objects.

use std::collections::BTreeMap;

use gdms::maps::MapFamily;
use gdms::multifractal::{BetaOptions, KlOptions, LegendreOptions};
use gdms::thermo::{BowenOptions, KernelOptions, PressureMethod, DEFAULT_STATE_BUDGET};
use gdms::{Alphabet, Expr, IncidenceMatrix, Interval, PotentialVector, SystemDescriptor, TailRule};
use serde::{Deserialize, Serialize};

/// A configuration problem at a field path such as `numerics.n`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl ToString) -> Self {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub pressure: Option<PressureSection>,
    #[serde(default)]
    pub dimension: Option<DimensionSection>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default)]
    pub sets: Option<SetsSection>,
    #[serde(default)]
    pub counterexample: Option<CounterexampleSection>,
    #[serde(default)]
    pub beta: Option<BetaSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphabetSpec {
    Size(u32),
    Named(String),
}

impl AlphabetSpec {
    fn build(&self, path: &str) -> CResult<Alphabet> {
        match self {
            AlphabetSpec::Size(0) => Err(ConfigError::new(path, "alphabet size must be at least 1")),
            AlphabetSpec::Size(n) => Ok(Alphabet::Finite(*n)),
            AlphabetSpec::Named(s) if s == "infinite" => Ok(Alphabet::Infinite),
            AlphabetSpec::Named(s) => Err(ConfigError::new(path, format!("expected a size or \"infinite\", got \"{s}\""))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailSpec {
    PowerLaw { lower: f64, upper: f64, exponent: f64 },
    /// Weight in the edge index `k`.
    Expression(String),
}

impl TailSpec {
    fn build(&self, path: &str) -> CResult<TailRule> {
        Ok(match self {
            TailSpec::PowerLaw { lower, upper, exponent } => {
                TailRule::PowerLaw { lower: *lower, upper: *upper, exponent: *exponent }
            }
            TailSpec::Expression(e) => TailRule::Expression(Expr::parse(e).map_err(|e| ConfigError::new(path, e))?),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSpec {
    Similarity {
        ratios: Vec<f64>,
        #[serde(default)]
        offsets: Option<Vec<f64>>,
        #[serde(default)]
        incidence: Option<Vec<Vec<u8>>>,
    },
    ContinuedFraction {
        alphabet: AlphabetSpec,
        #[serde(default)]
        tail: Option<TailSpec>,
        #[serde(default)]
        incidence: Option<Vec<Vec<u8>>>,
    },
    Custom {
        /// Map `phi_k(x)` in `x` and `k`.
        map: String,
        deriv: String,
        domain: [f64; 2],
        alphabet: AlphabetSpec,
        contraction: f64,
        contraction_constant: f64,
        distortion: f64,
        #[serde(default)]
        tail: Option<TailSpec>,
        #[serde(default)]
        incidence: Option<Vec<Vec<u8>>>,
    },
}

fn incidence(rows: &Option<Vec<Vec<u8>>>, alphabet: Alphabet, path: &str) -> CResult<IncidenceMatrix> {
    match rows {
        None => Ok(IncidenceMatrix::full_shift(alphabet)),
        Some(rows) => {
            if alphabet != Alphabet::Finite(rows.len() as u32) {
                return Err(ConfigError::new(format!("{path}.incidence"), "matrix size must equal the alphabet size"));
            }
            IncidenceMatrix::dense(rows.clone()).map_err(|e| ConfigError::new(format!("{path}.incidence"), e))
        }
    }
}

impl SystemSpec {
    pub fn build(&self) -> CResult<SystemDescriptor> {
        let p = "system";
        let err = |e: gdms::Error| ConfigError::new(p, e);
        match self {
            SystemSpec::Similarity { ratios, offsets, incidence: inc } => {
                let fam = match offsets {
                    Some(o) => MapFamily::similarity(ratios.clone(), o.clone()),
                    None => MapFamily::similarity_spaced(ratios.clone()),
                }
                .map_err(|e| ConfigError::new(format!("{p}.ratios"), e))?;
                let a = Alphabet::Finite(ratios.len() as u32);
                SystemDescriptor::new(incidence(inc, a, p)?, fam, None).map_err(err)
            }
            SystemSpec::ContinuedFraction { alphabet, tail, incidence: inc } => {
                let a = alphabet.build(&format!("{p}.alphabet"))?;
                let mut sys = SystemDescriptor::continued_fraction(a);
                if let Some(t) = tail {
                    sys = sys.with_tail(Some(t.build(&format!("{p}.tail"))?));
                }
                if inc.is_some() {
                    sys = SystemDescriptor::new(incidence(inc, a, p)?, sys.family().clone(), sys.tail().cloned()).map_err(err)?;
                }
                Ok(sys)
            }
            SystemSpec::Custom { map, deriv, domain, alphabet, contraction, contraction_constant, distortion, tail, incidence: inc } => {
                let parse = |s: &str, f: &str| Expr::parse(s).map_err(|e| ConfigError::new(format!("{p}.{f}"), e));
                if !(domain[0] < domain[1]) {
                    return Err(ConfigError::new(format!("{p}.domain"), "expected [lo, hi] with lo < hi"));
                }
                let fam = MapFamily::custom(
                    parse(map, "map")?,
                    parse(deriv, "deriv")?,
                    Interval::new(domain[0], domain[1]),
                    *contraction,
                    *contraction_constant,
                    *distortion,
                )
                .map_err(err)?;
                let a = alphabet.build(&format!("{p}.alphabet"))?;
                let tail = tail.as_ref().map(|t| t.build(&format!("{p}.tail"))).transpose()?;
                SystemDescriptor::new(incidence(inc, a, p)?, fam, tail).map_err(err)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub window: Vec<u32>,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero { dim: usize },
    /// `J(k)` for `k = 1..=len`.
    PerSymbol { values: Vec<Vec<f64>> },
    /// `J(k)` repeating with the period of `values`.
    Periodic { values: Vec<Vec<f64>> },
    Table { depth: usize, entries: Vec<TableEntry> },
    /// One expression in `k` per component.
    Expressions {
        components: Vec<String>,
        #[serde(default)]
        bound: Option<f64>,
    },
    /// The two parity potentials of the continued fraction example.
    CfParity,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Zero { dim: 1 }
    }
}

impl PotentialSpec {
    pub fn build(&self) -> CResult<PotentialVector> {
        let p = "potential";
        let err = |f: &str, e: gdms::Error| ConfigError::new(format!("{p}.{f}"), e);
        match self {
            PotentialSpec::Zero { dim } => {
                if *dim == 0 {
                    return Err(ConfigError::new(format!("{p}.dim"), "must be at least 1"));
                }
                Ok(PotentialVector::zero(*dim))
            }
            PotentialSpec::PerSymbol { values } => PotentialVector::per_symbol(values.clone()).map_err(|e| err("values", e)),
            PotentialSpec::Periodic { values } => PotentialVector::periodic(values.clone()).map_err(|e| err("values", e)),
            PotentialSpec::Table { depth, entries } => {
                let mut map = BTreeMap::new();
                for (i, e) in entries.iter().enumerate() {
                    if map.insert(e.window.clone(), e.value.clone()).is_some() {
                        return Err(ConfigError::new(format!("{p}.entries[{i}].window"), "duplicate window"));
                    }
                }
                PotentialVector::table(*depth, map).map_err(|e| err("entries", e))
            }
            PotentialSpec::Expressions { components, bound } => {
                let exprs = components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| Expr::parse(c).map_err(|e| ConfigError::new(format!("{p}.components[{i}]"), e)))
                    .collect::<CResult<Vec<_>>>()?;
                PotentialVector::expressions(exprs, *bound).map_err(|e| err("components", e))
            }
            PotentialSpec::CfParity => Ok(PotentialVector::cf_parity_example()),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodSpec {
    Auto,
    WordSum,
    TransferRatio,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub n: usize,
    /// Defaults to the alphabet size, or 24 for infinite alphabets.
    pub truncation: Option<u32>,
    pub tol: f64,
    pub method: MethodSpec,
    pub memory: Option<usize>,
    pub state_budget: usize,
    pub n_schedule: Vec<usize>,
    pub fd_step: f64,
    pub workers: Option<usize>,
    pub seed: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            n: 10,
            truncation: None,
            tol: 1e-8,
            method: MethodSpec::Auto,
            memory: None,
            state_budget: DEFAULT_STATE_BUDGET,
            n_schedule: Vec::new(),
            fd_step: 1e-4,
            workers: None,
            seed: 0,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> CResult<()> {
        let p = "numerics";
        if self.n == 0 {
            return Err(ConfigError::new(format!("{p}.n"), "word length must be at least 1"));
        }
        if self.truncation == Some(0) {
            return Err(ConfigError::new(format!("{p}.truncation"), "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(ConfigError::new(format!("{p}.tol"), "must be positive"));
        }
        if !(self.fd_step > 0.0) {
            return Err(ConfigError::new(format!("{p}.fd_step"), "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(ConfigError::new(format!("{p}.workers"), "must be at least 1"));
        }
        if self.state_budget < 2 {
            return Err(ConfigError::new(format!("{p}.state_budget"), "must be at least 2"));
        }
        if let Some(i) = self.n_schedule.iter().position(|&n| n == 0) {
            return Err(ConfigError::new(format!("{p}.n_schedule[{i}]"), "word length must be at least 1"));
        }
        Ok(())
    }

    pub fn truncation_for(&self, sys: &SystemDescriptor) -> u32 {
        match (self.truncation, sys.alphabet()) {
            (Some(t), _) => t,
            (None, Alphabet::Finite(n)) => n,
            (None, Alphabet::Infinite) => 24,
        }
    }

    pub fn kernel(&self) -> KernelOptions {
        KernelOptions { memory: self.memory, state_budget: self.state_budget }
    }

    pub fn method(&self) -> PressureMethod {
        match self.method {
            MethodSpec::Auto => PressureMethod::Auto,
            MethodSpec::WordSum => PressureMethod::WordSum,
            MethodSpec::TransferRatio => PressureMethod::TransferRatio,
        }
    }

    pub fn bowen(&self, sys: &SystemDescriptor, tol: Option<f64>) -> BowenOptions {
        BowenOptions {
            n: self.n,
            truncation: self.truncation_for(sys),
            tol: tol.unwrap_or(self.tol),
            method: self.method(),
            n_schedule: self.n_schedule.clone(),
            kernel: self.kernel(),
            ..BowenOptions::default()
        }
    }

    pub fn beta(&self, sys: &SystemDescriptor) -> BetaOptions {
        BetaOptions {
            n: self.n,
            truncation: self.truncation_for(sys),
            kernel: self.kernel(),
            tol: self.tol,
            fd_step: self.fd_step,
            ..BetaOptions::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.from],
            c => (0..c).map(|i| self.from + (self.to - self.from) * i as f64 / (c - 1) as f64).collect(),
        }
    }

    fn validate(&self, path: &str) -> CResult<()> {
        if !self.from.is_finite() || !self.to.is_finite() {
            return Err(ConfigError::new(path, "range ends must be finite"));
        }
        Ok(())
    }
}

/// Explicit points, or the product of per-coordinate ranges with the
/// first coordinate varying slowest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<Vec<f64>>),
    Ranges { ranges: Vec<Range> },
}

impl GridSpec {
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            GridSpec::Points(p) => p.clone(),
            GridSpec::Ranges { ranges } => {
                let mut out = vec![Vec::new()];
                for r in ranges {
                    let vals = r.values();
                    out = out.into_iter().flat_map(|prefix| vals.iter().map(move |v| [prefix.clone(), vec![*v]].concat())).collect();
                }
                if ranges.is_empty() {
                    Vec::new()
                } else {
                    out
                }
            }
        }
    }

    pub fn validate(&self, path: &str, dim: usize) -> CResult<()> {
        match self {
            GridSpec::Points(p) => {
                for (i, x) in p.iter().enumerate() {
                    if x.len() != dim {
                        return Err(ConfigError::new(format!("{path}[{i}]"), format!("expected {dim} coordinates, got {}", x.len())));
                    }
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(ConfigError::new(format!("{path}[{i}]"), "coordinates must be finite"));
                    }
                }
            }
            GridSpec::Ranges { ranges } => {
                if !ranges.is_empty() && ranges.len() != dim {
                    return Err(ConfigError::new(format!("{path}.ranges"), format!("expected {dim} ranges, got {}", ranges.len())));
                }
                for (i, r) in ranges.iter().enumerate() {
                    r.validate(&format!("{path}.ranges[{i}]"))?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub t: Vec<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PressureSection {
    pub points: Vec<PointSpec>,
    /// Shared `t` for `beta_grid`.
    pub t: Option<Vec<f64>>,
    pub beta_grid: Option<Range>,
}

impl PressureSection {
    pub fn queries(&self, dim: usize) -> CResult<Vec<(Vec<f64>, f64)>> {
        let p = "pressure";
        let mut out = Vec::new();
        for (i, q) in self.points.iter().enumerate() {
            if q.t.len() != dim {
                return Err(ConfigError::new(format!("{p}.points[{i}].t"), format!("expected {dim} coordinates, got {}", q.t.len())));
            }
            if !(q.beta >= 0.0) {
                return Err(ConfigError::new(format!("{p}.points[{i}].beta"), format!("must be nonnegative, got {}", q.beta)));
            }
            out.push((q.t.clone(), q.beta));
        }
        if let Some(g) = &self.beta_grid {
            g.validate(&format!("{p}.beta_grid"))?;
            let t = self.t.clone().unwrap_or_else(|| vec![0.0; dim]);
            if t.len() != dim {
                return Err(ConfigError::new(format!("{p}.t"), format!("expected {dim} coordinates, got {}", t.len())));
            }
            for b in g.values() {
                if !(b >= 0.0) {
                    return Err(ConfigError::new(format!("{p}.beta_grid"), format!("beta values must be nonnegative, got {b}")));
                }
                out.push((t.clone(), b));
            }
        }
        if out.is_empty() {
            return Err(ConfigError::new(p, "no (t, beta) points requested"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimensionSection {
    pub probe_t: Vec<f64>,
    pub tol: Option<f64>,
}

impl Default for DimensionSection {
    fn default() -> Self {
        DimensionSection { probe_t: vec![0.0, 0.5, 1.0], tol: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LegendreSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub escape_radius: f64,
    pub hd_upper: f64,
}

impl Default for LegendreSpec {
    fn default() -> Self {
        let d = LegendreOptions::default();
        LegendreSpec {
            tol: d.tol,
            max_iter: d.max_iter,
            armijo: d.armijo,
            backtrack: d.backtrack,
            escape_radius: d.escape_radius,
            hd_upper: d.hd_upper,
        }
    }
}

impl LegendreSpec {
    pub fn options(&self, path: &str) -> CResult<LegendreOptions> {
        if !(self.tol > 0.0) {
            return Err(ConfigError::new(format!("{path}.tol"), "must be positive"));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(ConfigError::new(format!("{path}.armijo"), "must lie in (0, 1)"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(ConfigError::new(format!("{path}.backtrack"), "must lie in (0, 1)"));
        }
        Ok(LegendreOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            armijo: self.armijo,
            backtrack: self.backtrack,
            escape_radius: self.escape_radius,
            hd_upper: self.hd_upper,
            start: None,
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub alpha: Option<GridSpec>,
    pub surface: Option<GridSpec>,
    pub legendre: LegendreSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsSection {
    pub t_grid: GridSpec,
    #[serde(default = "default_max_period")]
    pub max_period: usize,
    #[serde(default)]
    pub truncation: Option<u32>,
    #[serde(default = "default_bernoulli_samples")]
    pub bernoulli_samples: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub legendre: LegendreSpec,
}

fn default_max_period() -> usize {
    4
}

fn default_bernoulli_samples() -> usize {
    64
}

fn default_eps() -> f64 {
    1e-6
}

impl SetsSection {
    pub fn kl(&self, sys: &SystemDescriptor, seed: u64) -> KlOptions {
        KlOptions {
            max_period: self.max_period,
            truncation: self.truncation.unwrap_or(match sys.alphabet() {
                Alphabet::Finite(n) => n,
                Alphabet::Infinite => 6,
            }),
            bernoulli_samples: self.bernoulli_samples,
            seed,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    pub m: f64,
    pub n: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSection {
    pub t: GridSpec,
    #[serde(default = "default_true")]
    pub derivatives: bool,
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn parse(text: &str) -> CResult<RunConfig> {
        serde_json::from_str(text).map_err(|e| {
            ConfigError::new(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }

    pub fn system(&self) -> CResult<SystemDescriptor> {
        self.system.as_ref().ok_or_else(|| ConfigError::new("system", "required for this command"))?.build()
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> CResult<&'a T> {
        value.as_ref().ok_or_else(|| ConfigError::new(name, "section is required for this command"))
    }
}
