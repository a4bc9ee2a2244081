//! Word-sum pressure kernel.
//!
//! Words are grown from the right. A state is the first `m` symbols of the
//! current suffix; prepending `a` to a suffix starting with state `s`
//! multiplies its weight by `exp(<t, J(a s..)> + beta log|phi_a'|)`, where
//! the derivative is bracketed over `phi_s(X)`. Seeds are the admissible
//! words of length `m` with exact brackets. With `m >= n` the sums are the
//! exact cylinder sums; otherwise they are sound relaxations of them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::PotentialVector;
use crate::sum::Neumaier;
use crate::symbolic::{Symbol, TransitionTable, Word};
use crate::system::SystemDescriptor;

/// Default cap on `N^(m+1)` when choosing the memory automatically.
pub const DEFAULT_STATE_BUDGET: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct KernelOptions {
    /// Memory `m`; `None` picks the largest `m <= n` within `state_budget`.
    pub memory: Option<usize>,
    pub state_budget: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { memory: None, state_budget: DEFAULT_STATE_BUDGET }
    }
}

/// Log sums and bracket-weighted means of one kernel evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOutput {
    /// `log sum exp(inf S_n f)`
    pub log_z_lower: f64,
    /// `log sum exp(sup S_n f)`
    pub log_z_upper: f64,
    /// Mean of the `S_n J` realizing the lower weights.
    pub mean_j_lower: Vec<f64>,
    pub mean_j_upper: Vec<f64>,
    /// Mean of `sup S_n I` under the lower weights.
    pub mean_i_lower: f64,
    /// Mean of `inf S_n I` under the upper weights.
    pub mean_i_upper: f64,
}

#[derive(Debug, Clone)]
pub struct WordSumKernel {
    n: usize,
    size: usize,
    memory: usize,
    depth: usize,
    dim: usize,
    table: TransitionTable,
    /// `log|phi_w'|` brackets of the seeds, indexed by base-`N` word index.
    seed_sup: Vec<f64>,
    seed_inf: Vec<f64>,
    seed_ok: Vec<bool>,
    /// `S J` over windows lying inside the seed.
    seed_inner: Vec<f64>,
    /// Distinct sums over windows that reach past the seed, per seed.
    seed_trailing: Vec<Vec<Vec<f64>>>,
    /// Derivative bracket of edge `a` over `phi_s(X)` at `(a-1) N^m + s`.
    step_sup: Vec<f64>,
    step_inf: Vec<f64>,
    /// `J` at every window of length `depth`, flattened.
    windows: Vec<f64>,
}

fn pow(base: usize, e: usize) -> Option<usize> {
    base.checked_pow(e as u32)
}

fn digits(mut idx: usize, base: usize, len: usize, out: &mut Vec<Symbol>) {
    out.clear();
    out.resize(len, 0);
    for slot in out.iter_mut().rev() {
        *slot = (idx % base) as Symbol + 1;
        idx /= base;
    }
}

impl WordSumKernel {
    pub fn new(
        sys: &SystemDescriptor,
        j: &PotentialVector,
        n: usize,
        truncation: u32,
        opts: &KernelOptions,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("word length must be at least 1"));
        }
        let table = sys.incidence().table(truncation)?;
        let size = table.size() as usize;
        let depth = j.depth();
        let dim = j.dim();
        let budget = opts.state_budget.max(size);
        let memory = match opts.memory {
            Some(m) => m.clamp(1, n).max(depth.min(n)),
            None => {
                let mut m = 1;
                while m < n && pow(size, m + 2).is_some_and(|c| c <= budget) {
                    m += 1;
                }
                m.max(depth.min(n))
            }
        };
        let exact = memory >= n;
        let seed_count = pow(size, memory).ok_or_else(|| Error::invalid("state space too large"))?;
        let step_count = if exact { 0 } else { pow(size, memory + 1).ok_or_else(|| Error::invalid("state space too large"))? };
        if seed_count > (1 << 28) || step_count > (1 << 28) {
            return Err(Error::invalid(format!(
                "kernel with N={size}, memory={memory} exceeds the supported state count"
            )));
        }
        let window_count = pow(size, depth).ok_or_else(|| Error::invalid("potential depth too large"))?;

        // J at every window.
        let mut windows = Vec::with_capacity(window_count * dim);
        let mut buf = Vec::new();
        for w in 0..window_count {
            digits(w, size, depth, &mut buf);
            windows.extend(j.eval(&buf)?);
        }

        let family = sys.family();
        let seeds: Vec<Result<SeedData>> = (0..seed_count)
            .into_par_iter()
            .map_init(Vec::new, |buf, idx| {
                digits(idx, size, memory, buf);
                if !table.admissible(buf) {
                    return Ok(SeedData::inadmissible(dim));
                }
                let word = Word::from(buf.as_slice());
                let b = family.log_deriv_bracket(&word)?;
                let (inner, trailing) = seed_sums(buf, &table, depth, dim, &windows, size);
                Ok(SeedData { ok: true, sup: b.sup_log_deriv, inf: b.inf_log_deriv, inner, trailing })
            })
            .collect();
        let mut seed_sup = Vec::with_capacity(seed_count);
        let mut seed_inf = Vec::with_capacity(seed_count);
        let mut seed_ok = Vec::with_capacity(seed_count);
        let mut seed_inner = Vec::with_capacity(seed_count * dim);
        let mut seed_trailing = Vec::with_capacity(if depth > 1 { seed_count } else { 0 });
        for s in seeds {
            let s = s?;
            seed_sup.push(s.sup);
            seed_inf.push(s.inf);
            seed_ok.push(s.ok);
            seed_inner.extend_from_slice(&s.inner);
            if depth > 1 {
                seed_trailing.push(s.trailing);
            }
        }

        // Derivative brackets of one prepended edge over each state image.
        let (mut step_sup, mut step_inf) = (Vec::new(), Vec::new());
        if !exact {
            let images: Vec<Option<crate::interval::Interval>> = (0..seed_count)
                .into_par_iter()
                .map_init(Vec::new, |buf, idx| {
                    if !seed_ok[idx] {
                        return None;
                    }
                    digits(idx, size, memory, buf);
                    family.image(&Word::from(buf.as_slice())).ok()
                })
                .collect();
            let pairs: Vec<(f64, f64)> = (0..step_count)
                .into_par_iter()
                .map(|c| {
                    let a = (c / seed_count) as Symbol + 1;
                    match images[c % seed_count] {
                        Some(y) => {
                            let b = family.log_deriv_on(a, y);
                            (b.hi, b.lo)
                        }
                        None => (f64::NAN, f64::NAN),
                    }
                })
                .collect();
            step_sup = pairs.iter().map(|p| p.0).collect();
            step_inf = pairs.iter().map(|p| p.1).collect();
        }

        Ok(WordSumKernel {
            n,
            size,
            memory,
            depth,
            dim,
            table,
            seed_sup,
            seed_inf,
            seed_ok,
            seed_inner,
            seed_trailing,
            step_sup,
            step_inf,
            windows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn truncation(&self) -> u32 {
        self.size as u32
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// True when the sums equal the literal cylinder sums.
    pub fn is_exact(&self) -> bool {
        self.memory >= self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn dot(t: &[f64], v: &[f64]) -> f64 {
        t.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Evaluates the lower and upper word sums at `(t, beta)`.
    pub fn evaluate(&self, t: &[f64], beta: f64) -> Result<KernelOutput> {
        if t.len() != self.dim {
            return Err(Error::invalid(format!("t has dimension {}, potential has {}", t.len(), self.dim)));
        }
        if !(beta >= 0.0) {
            return Err(Error::NegativeBeta(beta));
        }
        let d = self.dim;
        let stride = 2 * (d + 2);
        let seed_count = self.seed_ok.len();

        // Layout per state: [lo, hi, jlo.., ilo, jhi.., ihi]
        let mut state = vec![0.0; seed_count * stride];
        state.par_chunks_mut(stride).enumerate().for_each(|(idx, out)| {
            if !self.seed_ok[idx] {
                out[0] = f64::NEG_INFINITY;
                out[1] = f64::NEG_INFINITY;
                return;
            }
            let inner = &self.seed_inner[idx * d..(idx + 1) * d];
            let base = Self::dot(t, inner);
            let (mut jlo, mut jhi) = (inner.to_vec(), inner.to_vec());
            let (mut tlo, mut thi) = (0.0, 0.0);
            if self.depth > 1 {
                let trails = &self.seed_trailing[idx];
                let mut best_lo = (f64::INFINITY, 0);
                let mut best_hi = (f64::NEG_INFINITY, 0);
                for (i, v) in trails.iter().enumerate() {
                    let s = Self::dot(t, v);
                    if s < best_lo.0 {
                        best_lo = (s, i);
                    }
                    if s > best_hi.0 {
                        best_hi = (s, i);
                    }
                }
                if trails.is_empty() {
                    out[0] = f64::NEG_INFINITY;
                    out[1] = f64::NEG_INFINITY;
                    return;
                }
                tlo = best_lo.0;
                thi = best_hi.0;
                for k in 0..d {
                    jlo[k] += trails[best_lo.1][k];
                    jhi[k] += trails[best_hi.1][k];
                }
            }
            out[0] = base + tlo + beta * self.seed_inf[idx];
            out[1] = base + thi + beta * self.seed_sup[idx];
            out[2..2 + d].copy_from_slice(&jlo);
            out[2 + d] = -self.seed_inf[idx];
            out[3 + d..3 + 2 * d].copy_from_slice(&jhi);
            out[3 + 2 * d] = -self.seed_sup[idx];
        });

        if !self.is_exact() {
            let tj: Vec<f64> = self.windows.chunks(d).map(|w| Self::dot(t, w)).collect();
            let window_div = pow(self.size, self.memory + 1 - self.depth).unwrap();
            let first_div = pow(self.size, self.memory - 1).unwrap();
            for _ in self.memory..self.n {
                let prev = state;
                let mut next = vec![0.0; seed_count * stride];
                next.par_chunks_mut(stride).enumerate().for_each_init(
                    || (Vec::with_capacity(self.size), Vec::with_capacity(self.size)),
                    |(wlo, whi), (target, out)| {
                        self.step_target(target, &prev, &tj, beta, window_div, first_div, stride, wlo, whi, out)
                    },
                );
                state = next;
            }
        }

        // Ordered final reduction.
        let reduce = |off: usize, jo: usize, io: usize| -> (f64, Vec<f64>, f64) {
            let m = state.chunks(stride).map(|s| s[off]).fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return (f64::NEG_INFINITY, vec![0.0; d], 0.0);
            }
            let mut z = Neumaier::new();
            let mut mj = vec![Neumaier::new(); d];
            let mut mi = Neumaier::new();
            for s in state.chunks(stride) {
                if s[off] == f64::NEG_INFINITY {
                    continue;
                }
                let w = (s[off] - m).exp();
                z.add(w);
                for k in 0..d {
                    mj[k].add(w * s[jo + k]);
                }
                mi.add(w * s[io]);
            }
            let zt = z.value();
            (m + zt.ln(), mj.iter().map(|x| x.value() / zt).collect(), mi.value() / zt)
        };
        let (log_z_lower, mean_j_lower, mean_i_lower) = reduce(0, 2, 2 + d);
        let (log_z_upper, mean_j_upper, mean_i_upper) = reduce(1, 3 + d, 3 + 2 * d);
        Ok(KernelOutput { log_z_lower, log_z_upper, mean_j_lower, mean_j_upper, mean_i_lower, mean_i_upper })
    }

    #[allow(clippy::too_many_arguments)]
    fn step_target(
        &self,
        target: usize,
        prev: &[f64],
        tj: &[f64],
        beta: f64,
        window_div: usize,
        first_div: usize,
        stride: usize,
        wlo: &mut Vec<f64>,
        whi: &mut Vec<f64>,
        out: &mut [f64],
    ) {
        let d = self.dim;
        let n_sym = self.size;
        let a = (target / first_div) as Symbol + 1;
        let rest = target % first_div;
        wlo.clear();
        whi.clear();
        let mut mlo = f64::NEG_INFINITY;
        let mut mhi = f64::NEG_INFINITY;
        for x in 0..n_sym {
            let src = rest * n_sym + x;
            let first = (src / first_div) as Symbol + 1;
            let p = &prev[src * stride..src * stride + 2];
            if p[0] == f64::NEG_INFINITY || !self.table.allows(a, first) {
                wlo.push(f64::NEG_INFINITY);
                whi.push(f64::NEG_INFINITY);
                continue;
            }
            let c = target * n_sym + x;
            let jt = tj[c / window_div];
            let lo = p[0] + jt + beta * self.step_inf[c];
            let hi = p[1] + jt + beta * self.step_sup[c];
            mlo = mlo.max(lo);
            mhi = mhi.max(hi);
            wlo.push(lo);
            whi.push(hi);
        }
        out[0] = f64::NEG_INFINITY;
        out[1] = f64::NEG_INFINITY;
        if mlo == f64::NEG_INFINITY {
            return;
        }
        let mut zlo = Neumaier::new();
        let mut zhi = Neumaier::new();
        for v in out[2..].iter_mut() {
            *v = 0.0;
        }
        // Moments accumulate unnormalized, then divide.
        for x in 0..n_sym {
            if wlo[x] == f64::NEG_INFINITY {
                continue;
            }
            let src = rest * n_sym + x;
            let c = target * n_sym + x;
            let jw = &self.windows[(c / window_div) * d..(c / window_div + 1) * d];
            let p = &prev[src * stride..(src + 1) * stride];
            let el = (wlo[x] - mlo).exp();
            let eh = (whi[x] - mhi).exp();
            zlo.add(el);
            zhi.add(eh);
            for k in 0..d {
                out[2 + k] += el * (p[2 + k] + jw[k]);
                out[3 + d + k] += eh * (p[3 + d + k] + jw[k]);
            }
            out[2 + d] += el * (p[2 + d] - self.step_inf[c]);
            out[3 + 2 * d] += eh * (p[3 + 2 * d] - self.step_sup[c]);
        }
        let (zl, zh) = (zlo.value(), zhi.value());
        out[0] = mlo + zl.ln();
        out[1] = mhi + zh.ln();
        for k in 0..=d {
            out[2 + k] /= zl;
            out[3 + d + k] /= zh;
        }
    }
}

struct SeedData {
    ok: bool,
    sup: f64,
    inf: f64,
    inner: Vec<f64>,
    trailing: Vec<Vec<f64>>,
}

impl SeedData {
    fn inadmissible(dim: usize) -> Self {
        SeedData { ok: false, sup: 0.0, inf: 0.0, inner: vec![0.0; dim], trailing: Vec::new() }
    }
}

fn window_index(w: &[Symbol], size: usize) -> usize {
    w.iter().fold(0, |acc, &s| acc * size + (s as usize - 1))
}

/// Sum of `J` over windows inside the seed, and the distinct sums over the
/// trailing windows for every admissible continuation.
fn seed_sums(
    seed: &[Symbol],
    table: &TransitionTable,
    depth: usize,
    dim: usize,
    windows: &[f64],
    size: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let len = seed.len();
    let mut inner = vec![0.0; dim];
    let full = (len + 1).saturating_sub(depth);
    for i in 0..full {
        let w = window_index(&seed[i..i + depth], size);
        for k in 0..dim {
            inner[k] += windows[w * dim + k];
        }
    }
    if depth == 1 {
        return (inner, Vec::new());
    }
    // Enumerate continuations of length depth-1.
    let mut trailing: Vec<Vec<f64>> = Vec::new();
    let mut ext: Vec<Symbol> = seed.to_vec();
    fn rec(
        ext: &mut Vec<Symbol>,
        need: usize,
        table: &TransitionTable,
        start: usize,
        depth: usize,
        dim: usize,
        windows: &[f64],
        size: usize,
        out: &mut Vec<Vec<f64>>,
    ) {
        if need == 0 {
            let mut v = vec![0.0; dim];
            for i in start..ext.len() + 1 - depth {
                let w = window_index(&ext[i..i + depth], size);
                for k in 0..dim {
                    v[k] += windows[w * dim + k];
                }
            }
            out.push(v);
            return;
        }
        let last = *ext.last().unwrap();
        for c in 1..=size as Symbol {
            if table.allows(last, c) {
                ext.push(c);
                rec(ext, need - 1, table, start, depth, dim, windows, size, out);
                ext.pop();
            }
        }
    }
    rec(&mut ext, depth - 1, table, full, depth, dim, windows, size, &mut trailing);
    trailing.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    trailing.dedup();
    (inner, trailing)
}
