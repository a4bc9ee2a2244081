//! Invariant measures on the coding space and the quotient
//! `Q(mu) = int J dmu / int I dmu`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::maps::MapFamily;
use crate::potential::{PotentialSource, PotentialVector};
use crate::symbolic::{Symbol, Word};
use crate::system::SystemDescriptor;

/// `sum_k k^-2`
pub const BASEL: f64 = PI * PI / 6.0;

const DEFAULT_PERIODS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Entropy {
    Value(Interval),
    Infinite,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
    pub i_mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub q_value: Vec<Interval>,
    pub i_mean: Interval,
    pub j_mean: Vec<Interval>,
    pub entropy: Entropy,
    pub monte_carlo: Option<MonteCarlo>,
}

impl MeasureSummary {
    fn new(j_mean: Vec<Interval>, i_mean: Interval, entropy: Entropy) -> Self {
        let q_value = j_mean.iter().map(|&j| j / i_mean).collect();
        MeasureSummary { q_value, i_mean, j_mean, entropy, monte_carlo: None }
    }

    pub fn q_mid(&self) -> Vec<f64> {
        self.q_value.iter().map(|q| q.mid()).collect()
    }
}

/// Uniform distribution on the orbit of `cycle^infinity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitMeasure {
    pub cycle: Word,
    pub period: usize,
    pub birkhoff_j: Vec<f64>,
    pub birkhoff_i: Interval,
}

impl PeriodicOrbitMeasure {
    pub fn new(sys: &SystemDescriptor, j: &PotentialVector, cycle: &Word, periods: usize) -> Result<Self> {
        let birkhoff_i = sys.cycle_potential(cycle, periods)?;
        let birkhoff_j = j.birkhoff_cycle(cycle)?;
        Ok(PeriodicOrbitMeasure { cycle: cycle.clone(), period: cycle.len(), birkhoff_j, birkhoff_i })
    }

    pub fn summary(&self) -> MeasureSummary {
        let p = self.period as f64;
        let j_mean = self.birkhoff_j.iter().map(|&x| Interval::point(x / p)).collect();
        MeasureSummary::new(j_mean, self.birkhoff_i.scale(1.0 / p), Entropy::Value(Interval::point(0.0)))
    }
}

pub fn q_of_periodic(sys: &SystemDescriptor, j: &PotentialVector, cycle: &Word) -> Result<MeasureSummary> {
    Ok(PeriodicOrbitMeasure::new(sys, j, cycle, DEFAULT_PERIODS)?.summary())
}

/// Quotient enclosure valid at every point of the cylinder of `cycle^m`,
/// from the derivative bracket of `m` periods over the whole domain.
pub fn q_of_periodic_level(sys: &SystemDescriptor, j: &PotentialVector, cycle: &Word, m: usize) -> Result<Vec<Interval>> {
    if !sys.incidence().is_cyclable(cycle)? {
        return Err(Error::NotCyclable { word: cycle.clone() });
    }
    if m == 0 {
        return Err(Error::invalid("need at least one period"));
    }
    let b = sys.family().log_deriv_over(&cycle.repeat(m), sys.family().domain())?;
    let i = -b;
    let s = j.birkhoff_cycle(cycle)?;
    Ok(s.iter().map(|&x| Interval::point(x * m as f64) / i).collect())
}

/// `S_n J / S_n I` along `m` periods of `cycle` starting from the point
/// `phi_{cycle^m}(x0)`.
pub fn empirical_periodic_quotient(
    sys: &SystemDescriptor,
    j: &PotentialVector,
    cycle: &Word,
    m: usize,
    x0: f64,
) -> Result<Vec<f64>> {
    if !sys.family().domain().contains(x0) {
        return Err(Error::invalid(format!("start point {x0} is outside the domain")));
    }
    let s = j.birkhoff_cycle(cycle)?;
    let fam = sys.family();
    let mut y = x0;
    let mut acc = crate::sum::Neumaier::default();
    for _ in 0..m {
        for &e in cycle.symbols().iter().rev() {
            let yi = Interval::point(y);
            acc.add(-fam.log_deriv_on(e, yi).mid());
            y = fam.map_interval(e, yi).mid();
        }
    }
    let i = acc.value();
    Ok(s.iter().map(|&x| x * m as f64 / i).collect())
}

/// Bernoulli measures by their probability vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum BernoulliSpec {
    /// `p_k` for `k = 1..=len`.
    Finite { probs: Vec<f64> },
    /// `p_k = k^-2 / S`.
    InverseSquare,
    /// `p_k ~ 1 / ((k+1) log^2 (k+1))`, normalized.
    HeavyTail,
    /// `p_k = c / (S k^2)` for `k < n`, remaining mass on `n`, `c = 1 - M / log n`.
    Remark { m: f64, n: f64 },
}

impl BernoulliSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BernoulliSpec::Finite { probs } => {
                if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                    return Err(Error::invalid("probabilities must be finite and nonnegative"));
                }
                let total: f64 = crate::sum::neumaier_sum(probs.iter().copied());
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
                }
                Ok(())
            }
            BernoulliSpec::Remark { m, n } => {
                if !(m.is_finite() && *n >= 2.0 && n.is_finite() && n.fract() == 0.0) {
                    return Err(Error::invalid("remark vector needs finite M and an integer n >= 2"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Constant in `1 - M / log n`.
    pub fn remark_c(m: f64, n: f64) -> f64 {
        1.0 - m / n.ln()
    }

    /// Whether every `p_k` lies in `[0, 1]`.
    pub fn is_probability(&self) -> bool {
        match self {
            BernoulliSpec::Remark { m, n } => {
                let c = Self::remark_c(*m, *n);
                (0.0..=1.0).contains(&c)
            }
            _ => self.validate().is_ok(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BernoulliOptions {
    /// Symbols summed term by term before analytic tail bounds take over.
    pub cutoff: u64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for BernoulliOptions {
    fn default() -> Self {
        BernoulliOptions { cutoff: 200_000, mc_samples: 0, seed: 0 }
    }
}

/// `sum_{k=a}^{b} f(k)` for a decreasing `f` with antiderivative `big_f`
/// (`big_f(inf)` must be finite).
fn decreasing_sum(f: impl Fn(f64) -> f64, big_f: impl Fn(f64) -> f64, a: f64, b: f64) -> Interval {
    if b < a {
        return Interval::point(0.0);
    }
    let lo = big_f(b + 1.0) - big_f(a);
    let hi = f(a) + big_f(b) - big_f(a);
    Interval::new(lo.max(0.0), hi.max(lo))
}

fn inv_sq(a: f64, b: f64) -> Interval {
    decreasing_sum(|x| x.powi(-2), |x| if x.is_infinite() { 0.0 } else { -1.0 / x }, a, b)
}

fn log_over_sq(a: f64, b: f64) -> Interval {
    decreasing_sum(|x| x.ln() / (x * x), |x| if x.is_infinite() { 0.0 } else { -(x.ln() + 1.0) / x }, a.max(2.0), b)
}

fn inv_cube(a: f64, b: f64) -> Interval {
    decreasing_sum(|x| x.powi(-3), |x| if x.is_infinite() { 0.0 } else { -0.5 / (x * x) }, a, b)
}

/// `sum 1/(j log^2 j)` over `j = a..=b`.
fn inv_log_sq(a: f64, b: f64) -> Interval {
    decreasing_sum(|x| 1.0 / (x * x.ln().powi(2)), |x| if x.is_infinite() { 0.0 } else { -1.0 / x.ln() }, a.max(2.0), b)
}

/// Per-component bound on `|J|` used for tails.
fn component_bounds(j: &PotentialVector) -> Result<Vec<f64>> {
    let fold = |rows: &mut dyn Iterator<Item = &Vec<f64>>| {
        let mut out = vec![0.0f64; j.dim()];
        for r in rows {
            for (o, v) in out.iter_mut().zip(r) {
                *o = o.max(v.abs());
            }
        }
        out
    };
    match j.source() {
        PotentialSource::Zero => Ok(vec![0.0; j.dim()]),
        PotentialSource::Periodic(rows) => Ok(fold(&mut rows.iter())),
        _ => j
            .bound()
            .map(|b| vec![b; j.dim()])
            .ok_or_else(|| Error::invalid("an infinitely supported measure needs a bounded potential")),
    }
}

/// Enclosure of `I` on the first-level cylinder of `k`.
fn cylinder_i(sys: &SystemDescriptor, k: Symbol) -> Result<Interval> {
    sys.geometric_potential_bracket(&Word::new(vec![k]))
}

fn require_depth_one(j: &PotentialVector) -> Result<()> {
    if j.depth() != 1 {
        return Err(Error::invalid("infinitely supported Bernoulli measures need a depth-1 potential"));
    }
    Ok(())
}

fn require_cf(sys: &SystemDescriptor) -> Result<()> {
    if !sys.family().is_continued_fraction() || sys.alphabet().is_finite() {
        return Err(Error::invalid("analytic tails are available for the full continued fraction system only"));
    }
    Ok(())
}

/// Accumulates `sum w_k J(k)` and `sum w_k I|C(k)` for `k = 1..=upto`.
fn partial_sums(
    sys: &SystemDescriptor,
    j: &PotentialVector,
    upto: u64,
    weight: impl Fn(f64) -> f64,
) -> Result<(Vec<Interval>, Interval, f64)> {
    let mut jm = vec![crate::sum::Neumaier::default(); j.dim()];
    let mut ilo = crate::sum::Neumaier::default();
    let mut ihi = crate::sum::Neumaier::default();
    let mut mass = crate::sum::Neumaier::default();
    for k in 1..=upto {
        let w = weight(k as f64);
        let v = j.eval(&[k as Symbol])?;
        for (a, x) in jm.iter_mut().zip(v) {
            a.add(w * x);
        }
        let i = cylinder_i(sys, k as Symbol)?.scale(w);
        ilo.add(i.lo);
        ihi.add(i.hi);
        mass.add(w);
    }
    Ok((jm.iter().map(|a| Interval::point(a.value())).collect(), Interval::new(ilo.value(), ihi.value()), mass.value()))
}

/// `int I dmu` over the continued fraction tail `k = a..=b` for
/// `p_k = scale * k^-2`: `I|C(k)` lies in `[2 log k, 2 log (k+1)]`.
fn cf_inverse_square_tail(scale: Interval, a: f64, b: f64) -> Interval {
    let lower = log_over_sq(a, b).scale(2.0);
    let upper = (log_over_sq(a, b) + inv_cube(a, b)).scale(2.0);
    scale * Interval::new(lower.lo, upper.hi)
}

fn bernoulli_entropy_finite(probs: &[f64]) -> f64 {
    -crate::sum::neumaier_sum(probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()))
}

pub fn q_of_bernoulli(
    sys: &SystemDescriptor,
    j: &PotentialVector,
    spec: &BernoulliSpec,
    opts: &BernoulliOptions,
) -> Result<MeasureSummary> {
    spec.validate()?;
    let k_cut = opts.cutoff.max(2);
    let mut summary = match spec {
        BernoulliSpec::Finite { probs } => {
            let size = probs.len() as Symbol;
            if !sys.alphabet().contains(size) {
                return Err(Error::UnknownEdge { edge: size, size: format!("{:?}", sys.alphabet()) });
            }
            let (j_mean, i_mean) = finite_means(sys, j, probs)?;
            MeasureSummary::new(j_mean, i_mean, Entropy::Value(Interval::point(bernoulli_entropy_finite(probs))))
        }
        BernoulliSpec::InverseSquare => {
            require_cf(sys)?;
            require_depth_one(j)?;
            let s = 1.0 / BASEL;
            let (jp, ip, mass) = partial_sums(sys, j, k_cut, |k| s / (k * k))?;
            let a = (k_cut + 1) as f64;
            let tail_mass = inv_sq(a, f64::INFINITY).scale(s);
            let bounds = component_bounds(j)?;
            let j_mean = jp.iter().zip(&bounds).map(|(x, b)| *x + Interval::new(-b * tail_mass.hi, b * tail_mass.hi)).collect();
            let i_mean = ip + cf_inverse_square_tail(Interval::point(s), a, f64::INFINITY);
            debug_assert!((mass + tail_mass.mid() - 1.0).abs() < 1e-9);
            // h = log S + (2/S) sum log k / k^2
            let series = Interval::point(partial_log_over_sq(k_cut)) + log_over_sq(a, f64::INFINITY);
            let h = series.scale(2.0 * s) + BASEL.ln();
            MeasureSummary::new(j_mean, i_mean, Entropy::Value(h))
        }
        BernoulliSpec::HeavyTail => {
            require_cf(sys)?;
            require_depth_one(j)?;
            // Normalizer over j = k + 1 >= 2.
            let partial: f64 = crate::sum::neumaier_sum((2..=k_cut + 1).map(|x| 1.0 / (x as f64 * (x as f64).ln().powi(2))));
            let z = Interval::point(partial) + inv_log_sq((k_cut + 2) as f64, f64::INFINITY);
            let norm = Interval::new(1.0 / z.hi, 1.0 / z.lo);
            let (jp, ip, _) = partial_sums(sys, j, k_cut, |k| 1.0 / ((k + 1.0) * (k + 1.0).ln().powi(2)))?;
            let tail_mass = inv_log_sq((k_cut + 2) as f64, f64::INFINITY) * norm;
            let bounds = component_bounds(j)?;
            let j_mean = jp.iter().zip(&bounds).map(|(x, b)| *x * norm + Interval::new(-b * tail_mass.hi, b * tail_mass.hi)).collect();
            // sum p_k 2 log k diverges like sum 1/(k log k).
            let i_mean = Interval::new((ip * norm).lo, f64::INFINITY);
            MeasureSummary::new(j_mean, i_mean, Entropy::Infinite)
        }
        BernoulliSpec::Remark { m, n } => {
            require_cf(sys)?;
            require_depth_one(j)?;
            remark_summary(sys, j, *m, *n, k_cut)?
        }
    };
    if opts.mc_samples > 0 {
        summary.monte_carlo = monte_carlo_i(sys.family(), spec, opts)?;
    }
    Ok(summary)
}

fn partial_log_over_sq(upto: u64) -> f64 {
    crate::sum::neumaier_sum((2..=upto).map(|k| (k as f64).ln() / (k as f64).powi(2)))
}

fn finite_means(sys: &SystemDescriptor, j: &PotentialVector, probs: &[f64]) -> Result<(Vec<Interval>, Interval)> {
    let support: Vec<(Symbol, f64)> = probs.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(k, &p)| (k as Symbol + 1, p)).collect();
    let i_mean = refined_i_mean(sys, &support)?;
    // Windows of length depth with product weights.
    let depth = j.depth();
    let count = (support.len() as u64).checked_pow(depth as u32).filter(|&c| c <= 1 << 22);
    let Some(count) = count else {
        return Err(Error::BudgetExceeded { what: "Bernoulli window enumeration".into(), best: None });
    };
    let mut jm = vec![crate::sum::Neumaier::default(); j.dim()];
    let mut window = vec![0 as Symbol; depth];
    for idx in 0..count {
        let mut r = idx as usize;
        let mut w = 1.0;
        for slot in window.iter_mut().rev() {
            let (sym, p) = support[r % support.len()];
            *slot = sym;
            w *= p;
            r /= support.len();
        }
        if sys.incidence().is_admissible(&Word::new(window.clone()))? {
            for (a, v) in jm.iter_mut().zip(j.eval(&window)?) {
                a.add(w * v);
            }
        }
    }
    Ok((jm.iter().map(|a| Interval::point(a.value())).collect(), i_mean))
}

/// `int I dmu` from the cylinders of length `L`: on `[w]`, `I` is the
/// derivative of `phi_{w_1}` over the image of `w_2 .. w_L`.
fn refined_i_mean(sys: &SystemDescriptor, support: &[(Symbol, f64)]) -> Result<Interval> {
    const CYLINDERS: usize = 1 << 14;
    let s = support.len();
    let mut level = 1usize;
    while level < 24 && s.saturating_pow(level as u32 + 1) <= CYLINDERS {
        level += 1;
    }
    let fam = sys.family();
    let mut lo = crate::sum::Neumaier::default();
    let mut hi = crate::sum::Neumaier::default();
    let count = s.pow(level as u32);
    let mut w = vec![0 as Symbol; level];
    for idx in 0..count {
        let mut r = idx;
        let mut weight = 1.0;
        for slot in w.iter_mut().rev() {
            let (sym, p) = support[r % s];
            *slot = sym;
            weight *= p;
            r /= s;
        }
        let word = Word::new(w.clone());
        if !sys.incidence().is_admissible(&word)? {
            continue;
        }
        let y = fam.image_of(&Word::new(w[1..].to_vec()), fam.domain())?;
        let i = -fam.log_deriv_on(w[0], y);
        lo.add(weight * i.lo);
        hi.add(weight * i.hi);
    }
    Ok(Interval::new(lo.value(), hi.value()))
}

fn remark_summary(sys: &SystemDescriptor, j: &PotentialVector, m: f64, n: f64, k_cut: u64) -> Result<MeasureSummary> {
    let c = BernoulliSpec::remark_c(m, n);
    let s = c / BASEL;
    let last = n - 1.0;
    let direct = (k_cut as f64).min(last) as u64;
    let (jp, ip, mass) = partial_sums(sys, j, direct, |k| s / (k * k))?;
    let a = direct as f64 + 1.0;
    // Mass of k < n, then the atom at n.
    let tail_mass = inv_sq(a, last).scale(s);
    let small_mass = tail_mass + mass;
    let p_n = -small_mass + 1.0;
    let bounds = component_bounds(j)?;
    let jn = if n <= u32::MAX as f64 { Some(j.eval(&[n as Symbol])?) } else { None };
    let j_mean = jp
        .iter()
        .zip(&bounds)
        .enumerate()
        .map(|(i, (x, b))| {
            let spread = b * tail_mass.abs().hi;
            let atom = match &jn {
                Some(v) => p_n * v[i],
                None => p_n.abs() * Interval::new(-b, *b),
            };
            *x + Interval::new(-spread, spread) + atom
        })
        .collect();
    let i_n = Interval::new(2.0 * n.ln(), 2.0 * (n + 1.0).ln());
    let i_mean = ip + cf_inverse_square_tail(Interval::point(s), a, last) + p_n * i_n;
    let entropy = if (0.0..=1.0).contains(&c) && c > 0.0 {
        // -sum_{k<n} q_k log q_k with q_k = s k^-2, plus -p_n log p_n.
        let sum_inv = Interval::point(crate::sum::neumaier_sum((1..=direct).map(|k| (k as f64).powi(-2)))) + inv_sq(a, last);
        let sum_log = Interval::point(partial_log_over_sq(direct)) + log_over_sq(a, last);
        let body = (sum_inv.scale((1.0 / s).ln()) + sum_log.scale(2.0)).scale(s);
        let pn = Interval::new(p_n.lo.max(0.0), p_n.hi.min(1.0));
        let atom = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
        let atom_range = Interval::spanning(atom(pn.lo), atom(pn.hi)).hull(&Interval::point(if pn.contains((-1f64).exp()) { (-1f64).exp() } else { atom(pn.lo) }));
        Entropy::Value(body + atom_range)
    } else {
        Entropy::Unknown
    };
    Ok(MeasureSummary::new(j_mean, i_mean, entropy))
}

/// Monte Carlo estimate of `int I dmu` for finitely supported and
/// inverse-square measures.
fn monte_carlo_i(fam: &MapFamily, spec: &BernoulliSpec, opts: &BernoulliOptions) -> Result<Option<MonteCarlo>> {
    let cdf: Vec<f64> = match spec {
        BernoulliSpec::Finite { probs } => probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect(),
        BernoulliSpec::InverseSquare => (1..=opts.cutoff)
            .scan(0.0, |acc, k| {
                *acc += 1.0 / (BASEL * (k as f64).powi(2));
                Some(*acc)
            })
            .collect(),
        _ => return Ok(None),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let draw = |rng: &mut ChaCha8Rng| -> Symbol {
        let u: f64 = rng.random();
        match cdf.iter().position(|&c| u < c) {
            Some(i) => i as Symbol + 1,
            // Continuous inverse of the k^-2 tail.
            None => {
                let v: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                ((cdf.len() as f64 + 0.5) / v).min(u32::MAX as f64) as Symbol
            }
        }
    };
    const DEPTH: usize = 40;
    let mut values = Vec::with_capacity(opts.mc_samples);
    for _ in 0..opts.mc_samples {
        let syms: Vec<Symbol> = (0..=DEPTH).map(|_| draw(&mut rng)).collect();
        let x = fam.image(&Word::new(syms[1..].to_vec()))?.mid();
        values.push(-fam.log_deriv_on(syms[0], Interval::point(x)).mid());
    }
    let n = values.len() as f64;
    let mean = crate::sum::neumaier_sum(values.iter().copied()) / n;
    let var = crate::sum::neumaier_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0).max(1.0);
    Ok(Some(MonteCarlo { samples: opts.mc_samples, seed: opts.seed, i_mean: mean, std_error: (var / n).sqrt() }))
}

#[derive(Debug, Clone)]
pub struct GenericWordOptions {
    pub max_period: usize,
    pub truncation: u32,
    /// Longest prefix the construction may emit.
    pub max_length: usize,
    pub connector_len: usize,
}

impl Default for GenericWordOptions {
    fn default() -> Self {
        GenericWordOptions { max_period: 6, truncation: 6, max_length: 1 << 24, connector_len: 3 }
    }
}

/// `cycle^repeats` followed by `connector`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub cycle: Word,
    pub repeats: usize,
    pub connector: Word,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: usize,
    /// Prefix length at the end of the block's periodic part.
    pub position: usize,
    pub quotient: Vec<Interval>,
    /// Largest distance from the target over the quotient enclosure.
    pub error: f64,
    pub epsilon: f64,
    pub cycle: Word,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericWord {
    pub target: Vec<f64>,
    pub blocks: Vec<Block>,
    pub checkpoints: Vec<Checkpoint>,
    /// Every scheduled accuracy was reached.
    pub complete: bool,
    pub achieved_accuracy: f64,
    pub note: String,
}

impl GenericWord {
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.cycle.len() * b.repeats + b.connector.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The first `max` symbols of the constructed word.
    pub fn prefix(&self, max: usize) -> Word {
        let mut out = Vec::with_capacity(max.min(self.len()));
        'outer: for b in &self.blocks {
            for _ in 0..b.repeats {
                for &s in b.cycle.symbols() {
                    if out.len() == max {
                        break 'outer;
                    }
                    out.push(s);
                }
            }
            for &s in b.connector.symbols() {
                if out.len() == max {
                    break 'outer;
                }
                out.push(s);
            }
        }
        Word::new(out)
    }
}

struct CycleCandidate {
    word: Word,
    sj: Vec<f64>,
    si: f64,
    q: Vec<Interval>,
}

fn sup_distance(q: &[Interval], target: &[f64]) -> f64 {
    q.iter().zip(target).map(|(q, a)| (q.lo - a).abs().max((q.hi - a).abs())).fold(0.0, f64::max)
}

/// Builds `p_1^{l_1} w_1 p_2^{l_2} w_2 ...` whose Birkhoff quotients approach
/// `target`, one block per entry of `schedule`.
pub fn construct_generic_word(
    sys: &SystemDescriptor,
    j: &PotentialVector,
    target: &[f64],
    schedule: &[f64],
    opts: &GenericWordOptions,
) -> Result<GenericWord> {
    if target.len() != j.dim() {
        return Err(Error::invalid(format!("target has dimension {}, potential has {}", target.len(), j.dim())));
    }
    if schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::invalid("accuracies must be positive"));
    }
    let inc = sys.incidence();
    let truncation = sys.alphabet().truncate(opts.truncation);
    let fam = sys.family();

    // |Q| <= sup |J| / inf I.
    let cycles = inc.primitive_cycles(opts.max_period, truncation)?;
    let mut sup_j = 0.0f64;
    for k in 1..=truncation {
        let v = j.eval(&vec![k; j.depth()]).unwrap_or_default();
        sup_j = sup_j.max(v.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    if let Some(b) = j.bound() {
        sup_j = sup_j.max(b);
    }
    let inf_i = -fam.contraction().ln();
    let norm = target.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > sup_j / inf_i * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "target of norm {norm} exceeds the quotient bound {}",
            sup_j / inf_i
        )));
    }

    let mut cands = Vec::with_capacity(cycles.len());
    for c in cycles {
        let m = PeriodicOrbitMeasure::new(sys, j, &c, 32)?;
        let q = m.birkhoff_j.iter().map(|&x| Interval::point(x) / m.birkhoff_i).collect();
        cands.push(CycleCandidate { si: m.birkhoff_i.mid(), sj: m.birkhoff_j, word: c, q });
    }
    let witness = if inc.is_full_shift() { None } else { Some(inc.find_irreducibility_witness(truncation, opts.connector_len, true)?) };

    let log_k = fam.distortion().ln();
    let mut blocks: Vec<Block> = Vec::new();
    let mut checkpoints = Vec::new();
    let mut sj_prev = vec![0.0; target.len()];
    let mut si_prev = 0.0;
    let mut len_prev = 0usize;
    let mut note = String::new();
    let mut achieved = f64::INFINITY;

    for (k, &eps) in schedule.iter().enumerate() {
        let best = cands
            .iter()
            .map(|c| (sup_distance(&c.q, target), c))
            .fold(None::<(f64, &CycleCandidate)>, |acc, x| match acc {
                Some(a) if a.0 <= x.0 => Some(a),
                _ => Some(x),
            });
        let Some((dist, cyc)) = best else {
            note = "no cyclable words within the period budget".into();
            break;
        };
        if dist > eps / 2.0 {
            note = format!("no cycle of period <= {} approximates the target within {}", opts.max_period, eps / 2.0);
            break;
        }
        // Connector from the previous block into this one.
        if let Some(prev) = blocks.last_mut() {
            let w = match &witness {
                None => Word::empty(),
                Some(wit) => wit
                    .connector(prev.cycle.last().unwrap(), cyc.word.first().unwrap(), inc)?
                    .cloned()
                    .ok_or_else(|| Error::NotIrreducible { from: prev.cycle.last().unwrap(), to: cyc.word.first().unwrap(), max_len: opts.connector_len })?,
            };
            for i in 0..w.len() {
                let win: Vec<Symbol> = (0..j.depth()).map(|d| w.symbols().get(i + d).copied().unwrap_or_else(|| cyc.word.symbols()[(i + d - w.len()) % cyc.word.len()])).collect();
                for (a, v) in sj_prev.iter_mut().zip(j.eval(&win)?) {
                    *a += v;
                }
            }
            si_prev += -fam.log_deriv_over(&w, fam.domain())?.mid();
            len_prev += w.len();
            prev.connector = w;
        }
        let p = cyc.word.len();
        let offset: f64 = sj_prev.iter().zip(target).map(|(s, a)| (s - a * si_prev).powi(2)).sum::<f64>().sqrt();
        let slack = offset + (1.0 + norm) * log_k * (k as f64 + 2.0);
        let mut l = ((2.0 * slack / eps - si_prev) / cyc.si).ceil().max(1.0) as usize;
        loop {
            if len_prev + l * p > opts.max_length {
                note = format!("length budget {} exhausted at block {}", opts.max_length, k + 1);
                break;
            }
            blocks.push(Block { cycle: cyc.word.clone(), repeats: l, connector: Word::empty() });
            let (q, _) = prefix_quotient(sys, j, &blocks)?;
            let err = sup_distance(&q, target);
            if err <= eps {
                checkpoints.push(Checkpoint { k: k + 1, position: len_prev + l * p, quotient: q, error: err, epsilon: eps, cycle: cyc.word.clone() });
                achieved = err;
                break;
            }
            blocks.pop();
            l *= 2;
        }
        if checkpoints.len() < k + 1 {
            break;
        }
        for (a, s) in sj_prev.iter_mut().zip(&cyc.sj) {
            *a += s * l as f64;
        }
        si_prev += cyc.si * l as f64;
        len_prev += l * p;
    }
    let complete = checkpoints.len() == schedule.len();
    Ok(GenericWord { target: target.to_vec(), blocks, checkpoints, complete, achieved_accuracy: achieved, note })
}

/// Birkhoff quotient enclosure over the whole constructed prefix, valid for
/// every continuation.
fn prefix_quotient(sys: &SystemDescriptor, j: &PotentialVector, blocks: &[Block]) -> Result<(Vec<Interval>, usize)> {
    let fam = sys.family();
    let depth = j.depth();
    let total: usize = blocks.iter().map(|b| b.cycle.len() * b.repeats + b.connector.len()).sum();
    // S_n J over windows fully inside the prefix.
    let mut sj = vec![0.0; j.dim()];
    if depth == 1 {
        for b in blocks {
            for (a, v) in sj.iter_mut().zip(j.birkhoff_cycle(&b.cycle)?) {
                *a += v * b.repeats as f64;
            }
            for &s in b.connector.symbols() {
                for (a, v) in sj.iter_mut().zip(j.eval(&[s])?) {
                    *a += v;
                }
            }
        }
    } else {
        let word = GenericWord { target: vec![], blocks: blocks.to_vec(), checkpoints: vec![], complete: false, achieved_accuracy: 0.0, note: String::new() }.prefix(total);
        let n = total + 1 - depth.min(total + 1);
        sj = j.birkhoff_prefix(word.symbols(), n)?;
    }
    // -log |phi'_{prefix}| over the domain, composed from the innermost symbol.
    let mut y = fam.domain();
    let mut acc = Interval::point(0.0);
    for b in blocks.iter().rev() {
        for &e in b.connector.symbols().iter().rev() {
            acc = acc + fam.log_deriv_on(e, y);
            y = fam.map_interval(e, y);
        }
        for _ in 0..b.repeats {
            for &e in b.cycle.symbols().iter().rev() {
                acc = acc + fam.log_deriv_on(e, y);
                y = fam.map_interval(e, y);
            }
        }
    }
    let si = -acc;
    Ok((sj.iter().map(|&x| Interval::point(x) / si).collect(), total))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub n: f64,
    pub c_n: f64,
    /// `p^(n)` is a probability vector.
    pub valid: bool,
    pub i_mean: Interval,
    /// `2 (1 - c_n) log n = 2 M`
    pub floor: f64,
    /// `|mu_n(C(k)) - 1/(S k^2)|` for `k = 1, 2, 3`.
    pub cylinder_gap: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapVerdict {
    StrictGap,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub m: f64,
    pub rows: Vec<CounterexampleRow>,
    /// `int I dmu` for the limit `p_k = k^-2 / S`.
    pub limit_i_mean: Interval,
    pub verdict: GapVerdict,
    pub reason: String,
}

/// Bernoulli measures `mu_n -> mu` weakly with `int I dmu_n` bounded away
/// from `int I dmu`, on the continued fraction system.
pub fn semicontinuity_counterexample(m: f64, n_list: &[f64]) -> Result<CounterexampleReport> {
    if !m.is_finite() || n_list.is_empty() {
        return Err(Error::invalid("need a finite M and at least one n"));
    }
    let sys = SystemDescriptor::continued_fraction(crate::symbolic::Alphabet::Infinite);
    let j = PotentialVector::zero(1);
    let opts = BernoulliOptions::default();
    let limit = q_of_bernoulli(&sys, &j, &BernoulliSpec::InverseSquare, &opts)?.i_mean;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let spec = BernoulliSpec::Remark { m, n };
        spec.validate()?;
        let c_n = BernoulliSpec::remark_c(m, n);
        let i_mean = q_of_bernoulli(&sys, &j, &spec, &opts)?.i_mean;
        let cylinder_gap = (1..=3).map(|k| ((1.0 - c_n) / (BASEL * (k * k) as f64)).abs()).collect();
        rows.push(CounterexampleRow { n, c_n, valid: spec.is_probability(), i_mean, floor: 2.0 * m, cylinder_gap });
    }
    let invalid: Vec<f64> = rows.iter().filter(|r| !r.valid).map(|r| r.n).collect();
    let min_lower = rows.iter().map(|r| r.i_mean.lo).fold(f64::INFINITY, f64::min);
    let (verdict, reason) = if !invalid.is_empty() {
        (
            GapVerdict::Inconclusive,
            format!("c_n = 1 - M/log n is outside [0, 1] for n in {invalid:?}: p^(n) is not a probability vector (needs log n >= M)"),
        )
    } else if min_lower > limit.hi {
        (GapVerdict::StrictGap, format!("min lower bound {min_lower} exceeds the limit upper bound {}", limit.hi))
    } else {
        (GapVerdict::Inconclusive, format!("min lower bound {min_lower} does not exceed the limit upper bound {}", limit.hi))
    };
    Ok(CounterexampleReport { m, rows, limit_i_mean: limit, verdict, reason })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_bounds_contain_known_values() {
        // sum_{k>=1} k^-2 and sum log k / k^2 = -zeta'(2)
        let s = Interval::point(1.0) + inv_sq(2.0, f64::INFINITY);
        assert!(s.contains(BASEL), "{s}");
        let l = Interval::point(partial_log_over_sq(1000)) + log_over_sq(1001.0, f64::INFINITY);
        assert!(l.contains(0.937_548_254_315_843_8), "{l}");
        assert!(l.width() < 1e-5);
    }
}
