//! Topological pressure, the finiteness threshold, Bowen dimension and
//! regularity of a system.

pub mod kernel;
pub mod ratio;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::potential::PotentialVector;
use crate::roots::decreasing_root;
use crate::symbolic::Alphabet;
use crate::system::{SystemDescriptor, TailRule};

pub use kernel::{KernelOptions, KernelOutput, WordSumKernel, DEFAULT_STATE_BUDGET};
pub use ratio::RatioKernel;

#[derive(Debug, Clone, PartialEq)]
pub struct PressureQuery {
    pub t: Vec<f64>,
    pub beta: f64,
    pub n: usize,
    pub truncation: u32,
}

impl PressureQuery {
    pub fn new(t: Vec<f64>, beta: f64, n: usize, truncation: u32) -> Self {
        PressureQuery { t, beta, n, truncation }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("word_length must be at least 1"));
        }
        if self.truncation == 0 {
            return Err(Error::invalid("truncation must be at least 1"));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::NegativeBeta(self.beta));
        }
        if self.t.iter().any(|x| !x.is_finite()) || !self.beta.is_finite() {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PressureMethod {
    /// Transfer-ratio when applicable, word sums otherwise.
    Auto,
    WordSum,
    TransferRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureBracket {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub truncation: u32,
    /// Bound on the weight carried by edges beyond the truncation; `+inf`
    /// when no tail rule is declared for an infinite alphabet.
    pub tail_bound: f64,
    /// True when the bracket equals the literal cylinder sums.
    pub exact: bool,
}

impl PressureBracket {
    pub fn interval(&self) -> Interval {
        Interval::new(self.lower, self.upper)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Pressure bracket together with derivatives of its midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PressurePoint {
    pub bracket: PressureBracket,
    /// `d mid / d beta`
    pub d_beta: f64,
    /// `d mid / d t`
    pub d_t: Vec<f64>,
    pub kernel: KernelOutput,
}

#[derive(Debug, Clone)]
enum Engine {
    Words(WordSumKernel),
    Ratio(RatioKernel),
}

/// A pressure evaluator prepared for fixed `(system, J, n, N)`.
#[derive(Debug, Clone)]
pub struct PressureEngine {
    engine: Engine,
    tail: TailInfo,
    n: usize,
    truncation: u32,
}

#[derive(Debug, Clone)]
struct TailInfo {
    infinite: bool,
    rule: Option<TailRule>,
    j_bound: f64,
}

impl PressureEngine {
    pub fn new(
        sys: &SystemDescriptor,
        j: &PotentialVector,
        n: usize,
        truncation: u32,
        method: PressureMethod,
        opts: &KernelOptions,
    ) -> Result<Self> {
        if n == 0 || truncation == 0 {
            return Err(Error::invalid("word length and truncation must be at least 1"));
        }
        let size = sys.effective_size(truncation);
        let use_ratio = match method {
            PressureMethod::WordSum => false,
            PressureMethod::TransferRatio => true,
            PressureMethod::Auto => {
                RatioKernel::applicable(sys, j)
                    && sys.alphabet() == Alphabet::Finite(size)
                    && (size as usize).checked_pow(n as u32 + 1).is_some_and(|c| c <= ratio::WORD_BUDGET)
            }
        };
        let engine = if use_ratio {
            if sys.alphabet() != Alphabet::Finite(size) {
                return Err(Error::invalid("transfer-ratio brackets need the whole finite alphabet inside the truncation"));
            }
            Engine::Ratio(RatioKernel::new(sys, j, n, ratio::DEFAULT_GRID)?)
        } else {
            Engine::Words(WordSumKernel::new(sys, j, n, truncation, opts)?)
        };
        Ok(PressureEngine {
            engine,
            tail: TailInfo {
                infinite: !sys.alphabet().is_finite(),
                rule: sys.tail().cloned(),
                j_bound: j.bound().unwrap_or(f64::INFINITY),
            },
            n,
            truncation: size,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn is_ratio(&self) -> bool {
        matches!(self.engine, Engine::Ratio(_))
    }

    pub fn is_exact(&self) -> bool {
        match &self.engine {
            Engine::Words(k) => k.is_exact(),
            Engine::Ratio(_) => false,
        }
    }

    pub fn memory(&self) -> Option<usize> {
        match &self.engine {
            Engine::Words(k) => Some(k.memory()),
            Engine::Ratio(_) => None,
        }
    }

    fn tail_bound(&self, t: &[f64], beta: f64) -> f64 {
        if !self.tail.infinite {
            return 0.0;
        }
        let tn: f64 = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        let growth = if tn == 0.0 { 1.0 } else { (tn * self.tail.j_bound).exp() };
        match &self.tail.rule {
            Some(TailRule::PowerLaw { upper, exponent, .. }) => {
                let q = exponent * beta;
                if q <= 1.0 {
                    f64::INFINITY
                } else {
                    growth * upper.powf(beta) * (self.truncation as f64).powf(1.0 - q) / (q - 1.0)
                }
            }
            _ => f64::INFINITY,
        }
    }

    pub fn bracket(&self, t: &[f64], beta: f64) -> Result<PressureBracket> {
        if !(beta >= 0.0) {
            return Err(Error::NegativeBeta(beta));
        }
        let n = self.n as f64;
        let (lower, upper) = match &self.engine {
            Engine::Words(k) => {
                let out = k.evaluate(t, beta)?;
                (out.log_z_lower / n, out.log_z_upper / n)
            }
            Engine::Ratio(r) => {
                let iv = r.bracket(t, beta)?;
                (iv.lo, iv.hi)
            }
        };
        if lower.is_nan() || upper.is_nan() {
            return Err(Error::Numerical("pressure evaluation produced NaN".into()));
        }
        Ok(PressureBracket {
            lower,
            upper: upper.max(lower),
            n: self.n,
            truncation: self.truncation,
            tail_bound: self.tail_bound(t, beta),
            exact: self.is_exact(),
        })
    }

    /// Bracket plus exact derivatives of its midpoint (word sums only).
    pub fn point(&self, t: &[f64], beta: f64) -> Result<PressurePoint> {
        let k = match &self.engine {
            Engine::Words(k) => k,
            Engine::Ratio(_) => return Err(Error::invalid("derivatives need the word-sum method")),
        };
        if !(beta >= 0.0) {
            return Err(Error::NegativeBeta(beta));
        }
        let out = k.evaluate(t, beta)?;
        let n = self.n as f64;
        if out.log_z_lower == f64::NEG_INFINITY {
            return Err(Error::invalid("no admissible words of the requested length"));
        }
        let bracket = PressureBracket {
            lower: out.log_z_lower / n,
            upper: out.log_z_upper / n,
            n: self.n,
            truncation: self.truncation,
            tail_bound: self.tail_bound(t, beta),
            exact: k.is_exact(),
        };
        let d_beta = -(out.mean_i_lower + out.mean_i_upper) / (2.0 * n);
        let d_t = out.mean_j_lower.iter().zip(&out.mean_j_upper).map(|(a, b)| (a + b) / (2.0 * n)).collect();
        Ok(PressurePoint { bracket, d_beta, d_t, kernel: out })
    }
}

/// Pressure bracket at a single query using word sums.
pub fn pressure_bracket(sys: &SystemDescriptor, j: &PotentialVector, q: &PressureQuery) -> Result<PressureBracket> {
    q.validate()?;
    let engine = PressureEngine::new(sys, j, q.n, q.truncation, PressureMethod::WordSum, &KernelOptions::default())?;
    engine.bracket(&q.t, q.beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    /// `None` when undetermined.
    pub enclosure: Option<Interval>,
    pub note: String,
}

/// `theta = inf { beta : sum_k ||phi_k'||^beta < inf }` from a declared rule.
pub fn estimate_theta(sys: &SystemDescriptor, rule: Option<&TailRule>) -> ThetaEstimate {
    if sys.alphabet().is_finite() {
        return ThetaEstimate { enclosure: Some(Interval::point(0.0)), note: "finite alphabet".into() };
    }
    match rule.or(sys.tail()) {
        Some(TailRule::PowerLaw { exponent, .. }) => ThetaEstimate {
            enclosure: Some(Interval::point(1.0 / exponent)),
            note: format!("power law k^-{exponent}: sum converges iff {exponent} beta > 1"),
        },
        Some(TailRule::Expression(e)) => {
            // Local decay exponents over three decades each.
            let slope = |a: f64, b: f64| -((e.eval(0.0, b)).ln() - (e.eval(0.0, a)).ln()) / (b / a).ln();
            let p1 = slope(1e3, 1e6);
            let p2 = slope(1e6, 1e9);
            if !(p1 > 0.0 && p2 > 0.0) || !p1.is_finite() || !p2.is_finite() {
                return ThetaEstimate {
                    enclosure: None,
                    note: format!("weight rule '{e}' does not decay polynomially"),
                };
            }
            let (a, b) = (1.0 / p1, 1.0 / p2);
            ThetaEstimate {
                enclosure: Some(Interval::spanning(a, b)),
                note: format!("empirical decay exponents {p1:.6} and {p2:.6} of '{e}'"),
            }
        }
        None => ThetaEstimate { enclosure: None, note: "no tail rule declared".into() },
    }
}

#[derive(Debug, Clone)]
pub struct BowenOptions {
    pub n: usize,
    pub truncation: u32,
    pub tol: f64,
    pub method: PressureMethod,
    /// Word lengths tried after `n` when the enclosure is still too wide.
    pub n_schedule: Vec<usize>,
    pub kernel: KernelOptions,
    pub max_evals: usize,
}

impl Default for BowenOptions {
    fn default() -> Self {
        BowenOptions {
            n: 10,
            truncation: 2,
            tol: 1e-6,
            method: PressureMethod::Auto,
            n_schedule: Vec::new(),
            kernel: KernelOptions::default(),
            max_evals: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowenResult {
    /// Zero of the pressure of the truncated system.
    pub enclosure: Interval,
    /// For infinite alphabets, an enclosure of the full-system dimension.
    pub full_alphabet: Option<Interval>,
    pub n: usize,
    pub truncation: u32,
    /// Pressure is negative on the whole domain; the enclosure is then of
    /// `inf { t : p(t) < 0 }`.
    pub irregular: bool,
    pub ratio_method: bool,
}

/// Enclosure of the zero of `beta -> P(-beta I)` for one engine.
fn bowen_once(engine: &PressureEngine, tol: f64, max_evals: usize) -> Result<(Interval, bool)> {
    let zero = vec![0.0; 1];
    let at0 = engine.bracket(&zero, 0.0)?;
    if at0.upper < 0.0 {
        return Ok((Interval::point(0.0), true));
    }
    let xtol = (tol / 8.0).max(1e-15);
    let mut mid = |b: f64| engine.bracket(&zero, b).map(|p| p.mid());
    let c = decreasing_root(&mut mid, 0.0, 0.5, Some(0.0), xtol, max_evals)?;
    let centre = c.mid();
    let slope = if c.right > c.left { ((c.f_left - c.f_right) / (c.right - c.left)).max(1e-3) } else { 1.0 };
    let here = engine.bracket(&zero, centre)?;
    let step = (0.6 * here.width() / slope).max(xtol);

    let mut lower = |b: f64| engine.bracket(&zero, b).map(|p| p.lower);
    let lo = decreasing_root(&mut lower, (centre - step).max(0.0), step, Some(0.0), xtol, max_evals)?;
    let mut upper = |b: f64| engine.bracket(&zero, b).map(|p| p.upper);
    let hi = decreasing_root(&mut upper, centre + step, step, Some(0.0), xtol, max_evals)?;
    Ok((Interval::new(lo.left, hi.right.max(lo.left)), false))
}

/// Hausdorff dimension of the limit set as the zero of the pressure.
pub fn bowen_dimension(sys: &SystemDescriptor, opts: &BowenOptions) -> Result<BowenResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let j = PotentialVector::zero(1);
    let mut schedule = vec![opts.n];
    schedule.extend(opts.n_schedule.iter().copied().filter(|&m| m > opts.n));
    let mut best: Option<Interval> = None;
    let mut last = None;
    for &n in &schedule {
        let engine = PressureEngine::new(sys, &j, n, opts.truncation, opts.method, &opts.kernel)?;
        let (enc, irregular) = bowen_once(&engine, opts.tol, opts.max_evals)?;
        let enc = match best {
            Some(b) => b.intersect(&enc).unwrap_or(enc),
            None => enc,
        };
        best = Some(enc);
        last = Some((n, engine.truncation(), irregular, engine.is_ratio()));
        if enc.width() <= opts.tol || irregular {
            break;
        }
    }
    let enc = best.unwrap();
    let (n, truncation, irregular, ratio_method) = last.unwrap();
    if enc.width() > opts.tol && !irregular {
        return Err(Error::BudgetExceeded { what: "bowen dimension".into(), best: Some(enc) });
    }
    let full_alphabet = if sys.alphabet().is_finite() {
        None
    } else {
        // Subsystems have smaller dimension; the ambient space is one dimensional.
        Some(Interval::new(enc.lo, 1.0f64.max(enc.hi)))
    };
    Ok(BowenResult { enclosure: enc, full_alphabet, n, truncation, irregular, ratio_method })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    Regular,
    StronglyRegular,
    CoFinitelyRegular,
    Irregular,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub class: Regularity,
    pub notes: Vec<String>,
}

/// Classifies regularity from certified evidence only.
pub fn classify_regularity(
    sys: &SystemDescriptor,
    probe_ts: &[f64],
    n: usize,
    truncation: u32,
) -> Result<RegularityReport> {
    let mut notes = Vec::new();
    let theta = estimate_theta(sys, None);
    notes.push(format!("theta: {}", theta.note));
    if !sys.alphabet().is_finite() {
        if let Some(TailRule::PowerLaw { lower, exponent, .. }) = sys.tail() {
            notes.push(format!(
                "sum over k > K of ({lower} k^-{exponent})^(1/{exponent}) diverges for every K, so every co-finite subsystem has infinite pressure at theta"
            ));
            return Ok(RegularityReport { class: Regularity::CoFinitelyRegular, notes });
        }
        if let (Some(TailRule::Expression(e)), Some(enc)) = (sys.tail(), theta.enclosure) {
            // k w(k)^theta bounded below on three decades: harmonic comparison.
            let th = enc.hi;
            let g: Vec<f64> = [1e3, 1e6, 1e9].iter().map(|&k| k * e.eval(0.0, k).powf(th)).collect();
            let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = g.iter().cloned().fold(0.0, f64::max);
            if enc.width() <= 1e-6 && lo > 0.0 && hi / lo < 2.0 {
                notes.push(format!(
                    "k w(k)^{th} stays in [{lo}, {hi}] on k = 1e3..1e9, so the co-finite tail sums diverge at theta"
                ));
                return Ok(RegularityReport { class: Regularity::CoFinitelyRegular, notes });
            }
        }
    } else {
        notes.push("finite alphabet: co-finite regularity not applicable".into());
    }
    let j = PotentialVector::zero(1);
    let engine = PressureEngine::new(sys, &j, n, truncation, PressureMethod::WordSum, &KernelOptions::default())?;
    let theta_hi = theta.enclosure.map(|e| e.hi);
    for &t in probe_ts {
        if t < 0.0 {
            continue;
        }
        let finite_here = match theta_hi {
            Some(th) => t > th || sys.alphabet().is_finite(),
            None => false,
        };
        let p = engine.bracket(&[0.0], t)?;
        if p.lower > 0.0 && finite_here {
            notes.push(format!("pressure at t={t} is in [{}, {}] > 0", p.lower, p.upper));
            return Ok(RegularityReport { class: Regularity::StronglyRegular, notes });
        }
    }
    if sys.alphabet().is_finite() {
        let p0 = engine.bracket(&[0.0], 0.0)?;
        if p0.lower >= 0.0 {
            notes.push(format!("pressure at 0 is {} >= 0 and decreasing: Bowen zero exists", p0.lower));
            return Ok(RegularityReport { class: Regularity::Regular, notes });
        }
        if p0.upper < 0.0 {
            notes.push("pressure negative at 0".into());
            return Ok(RegularityReport { class: Regularity::Irregular, notes });
        }
    }
    notes.push("no certified evidence".into());
    Ok(RegularityReport { class: Regularity::Undetermined, notes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoReport {
    pub theta: Option<Interval>,
    pub hausdorff_dim: Interval,
    pub truncated_dim: Interval,
    pub regularity: Regularity,
    pub notes: Vec<String>,
}

/// Threshold, dimension and regularity in one report.
pub fn thermo_report(sys: &SystemDescriptor, opts: &BowenOptions, probe_ts: &[f64]) -> Result<ThermoReport> {
    let theta = estimate_theta(sys, None);
    let dim = bowen_dimension(sys, opts)?;
    let reg = classify_regularity(sys, probe_ts, opts.n.min(8), opts.truncation)?;
    let mut notes = reg.notes.clone();
    if dim.irregular {
        notes.push("pressure negative everywhere on the domain".into());
    }
    Ok(ThermoReport {
        theta: theta.enclosure,
        hausdorff_dim: dim.full_alphabet.unwrap_or(dim.enclosure),
        truncated_dim: dim.enclosure,
        regularity: reg.class,
        notes,
    })
}
