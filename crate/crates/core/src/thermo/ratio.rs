//! Transfer-ratio pressure bracket for the Gauss maps on a finite full shift.
//!
//! With `Z_n(x) = sum_w exp(<t, S_n J(w)>) |phi_w'(x)|^beta`, positivity of
//! the transfer operator gives
//! `min_Y log(Z_{n+1}/Z_n) <= P <= max_Y log(Z_{n+1}/Z_n)` on any interval
//! `Y` mapped into itself. The extrema are bounded on a grid with a
//! third-order Taylor remainder.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::potential::PotentialVector;
use crate::symbolic::{Alphabet, Symbol};
use crate::system::SystemDescriptor;

pub const DEFAULT_GRID: usize = 257;
/// Largest `N^(n+1)` accepted.
pub const WORD_BUDGET: usize = 1 << 24;

#[derive(Debug, Clone)]
struct Level {
    /// `<t,J>`-independent data per word: `S J`, `log q_n`, `q_{n-1}/q_n`.
    sj: Vec<f64>,
    log_q: Vec<f64>,
    rho: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RatioKernel {
    n: usize,
    size: u32,
    dim: usize,
    hull: Interval,
    grid: Vec<f64>,
    short: Level,
    long: Level,
}

/// `(log Z, (log Z)', (log Z)'')` at one point.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: f64,
    d1: f64,
    d2: f64,
}

impl RatioKernel {
    /// True when the ratio method applies to this system and potential.
    pub fn applicable(sys: &SystemDescriptor, j: &PotentialVector) -> bool {
        sys.family().is_continued_fraction()
            && sys.incidence().is_full_shift()
            && matches!(sys.alphabet(), Alphabet::Finite(_))
            && j.depth() == 1
    }

    pub fn new(sys: &SystemDescriptor, j: &PotentialVector, n: usize, grid: usize) -> Result<Self> {
        if !Self::applicable(sys, j) {
            return Err(Error::invalid(
                "transfer-ratio brackets need the Gauss maps on a finite full shift with a depth-one potential",
            ));
        }
        if n == 0 || grid < 2 {
            return Err(Error::invalid("ratio bracket needs n >= 1 and at least two grid points"));
        }
        let size = match sys.alphabet() {
            Alphabet::Finite(s) => s,
            Alphabet::Infinite => unreachable!(),
        };
        let count = (size as usize).checked_pow(n as u32 + 1).filter(|&c| c <= WORD_BUDGET);
        if count.is_none() {
            return Err(Error::invalid(format!("ratio bracket with N={size}, n={n} exceeds the word budget")));
        }
        let dim = j.dim();
        let jv: Vec<Vec<f64>> = (1..=size).map(|k| j.eval(&[k])).collect::<Result<_>>()?;
        let nf = size as f64;
        let a = (-nf + (nf * nf + 4.0 * nf).sqrt()) / (2.0 * nf);
        let hull = Interval::new(a, 1.0 / (1.0 + a));
        let grid_pts: Vec<f64> = (0..grid)
            .map(|i| if i + 1 == grid { hull.hi } else { hull.lo + hull.width() * i as f64 / (grid - 1) as f64 })
            .collect();
        Ok(RatioKernel {
            n,
            size,
            dim,
            hull,
            grid: grid_pts,
            short: build_level(size, n, &jv, dim),
            long: build_level(size, n + 1, &jv, dim),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn truncation(&self) -> u32 {
        self.size
    }

    pub fn hull(&self) -> Interval {
        self.hull
    }

    fn jet(level: &Level, dim: usize, t: &[f64], beta: f64, x: f64) -> Jet {
        let count = level.log_q.len();
        let mut m = f64::NEG_INFINITY;
        let mut hs = Vec::with_capacity(count);
        for i in 0..count {
            let tj: f64 = (0..dim).map(|k| t[k] * level.sj[i * dim + k]).sum();
            let h = tj - 2.0 * beta * (level.log_q[i] + (x * level.rho[i]).ln_1p());
            m = m.max(h);
            hs.push(h);
        }
        let (mut z, mut s1, mut s2, mut s11) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..count {
            let w = (hs[i] - m).exp();
            let u = level.rho[i] / (1.0 + x * level.rho[i]);
            let g1 = -2.0 * beta * u;
            let g2 = 2.0 * beta * u * u;
            z += w;
            s1 += w * g1;
            s2 += w * g2;
            s11 += w * g1 * g1;
        }
        let d1 = s1 / z;
        Jet { v: m + z.ln(), d1, d2: s2 / z + (s11 / z - d1 * d1).max(0.0) }
    }

    /// Pressure enclosure at `(t, beta)`.
    pub fn bracket(&self, t: &[f64], beta: f64) -> Result<Interval> {
        if t.len() != self.dim {
            return Err(Error::invalid(format!("t has dimension {}, potential has {}", t.len(), self.dim)));
        }
        if !(beta >= 0.0) {
            return Err(Error::NegativeBeta(beta));
        }
        let jets: Vec<(Jet, Jet)> = self
            .grid
            .par_iter()
            .map(|&x| {
                (Self::jet(&self.short, self.dim, t, beta, x), Self::jet(&self.long, self.dim, t, beta, x))
            })
            .collect();
        // |(log Z)'''| <= 4b + 3b^2 + 2b^3 for each level.
        let b3 = 2.0 * (4.0 * beta + 3.0 * beta * beta + 2.0 * beta.powi(3));
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..jets.len() {
            let (s, l) = jets[i];
            let f = l.v - s.v;
            lo = lo.min(f);
            hi = hi.max(f);
            if i + 1 < jets.len() {
                let h = self.grid[i + 1] - self.grid[i];
                let f1 = l.d1 - s.d1;
                let f2 = l.d2 - s.d2;
                let rem = b3 * h * h * h / 6.0;
                hi = hi.max(f + f1.max(0.0) * h + f2.max(0.0) * h * h / 2.0 + rem);
                lo = lo.min(f + f1.min(0.0) * h + f2.min(0.0) * h * h / 2.0 - rem);
            }
        }
        Ok(Interval::new(lo, hi))
    }
}

fn build_level(size: Symbol, len: usize, jv: &[Vec<f64>], dim: usize) -> Level {
    let count = (size as usize).pow(len as u32);
    let mut lvl = Level { sj: Vec::with_capacity(count * dim), log_q: Vec::with_capacity(count), rho: Vec::with_capacity(count) };
    // Depth-first in lexicographic order, sharing prefixes.
    let mut stack_rho = vec![0.0; len + 1];
    let mut stack_lq = vec![0.0; len + 1];
    let mut stack_sj = vec![0.0; (len + 1) * dim];
    let mut word = vec![1 as Symbol; len];
    let mut depth = 0;
    loop {
        // Extend from `depth` to `len` with current symbols.
        while depth < len {
            let a = word[depth];
            let r = 1.0 / (a as f64 + stack_rho[depth]);
            stack_rho[depth + 1] = r;
            stack_lq[depth + 1] = stack_lq[depth] - r.ln();
            for k in 0..dim {
                stack_sj[(depth + 1) * dim + k] = stack_sj[depth * dim + k] + jv[(a - 1) as usize][k];
            }
            depth += 1;
        }
        lvl.sj.extend_from_slice(&stack_sj[len * dim..(len + 1) * dim]);
        lvl.log_q.push(stack_lq[len]);
        lvl.rho.push(stack_rho[len]);
        // Odometer.
        let mut pos = len;
        loop {
            if pos == 0 {
                return lvl;
            }
            pos -= 1;
            if word[pos] < size {
                word[pos] += 1;
                for w in word.iter_mut().skip(pos + 1) {
                    *w = 1;
                }
                depth = pos;
                break;
            }
        }
    }
}
