//! Vector valued potentials `J` depending on finitely many leading symbols.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::symbolic::{Symbol, Word};

pub type PotentialFn = Arc<dyn Fn(&[Symbol]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum PotentialSource {
    Zero,
    /// Explicit values for every window of length `depth`.
    Table(BTreeMap<Vec<Symbol>, Vec<f64>>),
    /// Depth one, `J(k) = values[(k - 1) mod len]`.
    Periodic(Vec<Vec<f64>>),
    /// Depth one, one expression in `k` per component.
    Expression(Vec<Expr>),
    Function(PotentialFn),
}

impl fmt::Debug for PotentialSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSource::Zero => write!(f, "Zero"),
            PotentialSource::Table(t) => write!(f, "Table({} windows)", t.len()),
            PotentialSource::Periodic(v) => f.debug_tuple("Periodic").field(v).finish(),
            PotentialSource::Expression(e) => {
                let s: Vec<&str> = e.iter().map(|e| e.source()).collect();
                f.debug_tuple("Expression").field(&s).finish()
            }
            PotentialSource::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PotentialVector {
    dim: usize,
    depth: usize,
    source: PotentialSource,
    bound: Option<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl PotentialVector {
    pub fn zero(dim: usize) -> Self {
        PotentialVector { dim: dim.max(1), depth: 1, source: PotentialSource::Zero, bound: Some(0.0) }
    }

    /// Depth one values, repeated with period `values.len()`.
    pub fn periodic(values: Vec<Vec<f64>>) -> Result<Self> {
        let dim = check_rows(&values)?;
        let bound = values.iter().map(|v| norm(v)).fold(0.0, f64::max);
        Ok(PotentialVector { dim, depth: 1, source: PotentialSource::Periodic(values), bound: Some(bound) })
    }

    /// Depth one values for edges `1..=values.len()`; other edges are rejected.
    pub fn per_symbol(values: Vec<Vec<f64>>) -> Result<Self> {
        check_rows(&values)?;
        let table = values.into_iter().enumerate().map(|(i, v)| (vec![i as Symbol + 1], v)).collect();
        Self::table(1, table)
    }

    pub fn table(depth: usize, table: BTreeMap<Vec<Symbol>, Vec<f64>>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::invalid("potential depth must be at least 1"));
        }
        if table.is_empty() {
            return Err(Error::invalid("potential table is empty"));
        }
        if table.keys().any(|k| k.len() != depth) {
            return Err(Error::invalid(format!("every potential window must have length {depth}")));
        }
        let rows: Vec<Vec<f64>> = table.values().cloned().collect();
        let dim = check_rows(&rows)?;
        let bound = rows.iter().map(|v| norm(v)).fold(0.0, f64::max);
        Ok(PotentialVector { dim, depth, source: PotentialSource::Table(table), bound: Some(bound) })
    }

    pub fn expressions(exprs: Vec<Expr>, bound: Option<f64>) -> Result<Self> {
        if exprs.is_empty() {
            return Err(Error::invalid("potential needs at least one component"));
        }
        if exprs.iter().any(|e| e.uses_x()) {
            return Err(Error::invalid("potential expressions may depend on k only"));
        }
        Ok(PotentialVector { dim: exprs.len(), depth: 1, source: PotentialSource::Expression(exprs), bound })
    }

    pub fn function(dim: usize, depth: usize, bound: Option<f64>, f: PotentialFn) -> Result<Self> {
        if dim == 0 || depth == 0 {
            return Err(Error::invalid("dimension and depth must be at least 1"));
        }
        Ok(PotentialVector { dim, depth, source: PotentialSource::Function(f), bound })
    }

    /// The two dimensional potential of the continued fraction example:
    /// `J_1(k) = +1/-1` for odd/even `k`, `J_2(k) = 0, 1, -1` for `k = 0, 1, 2 mod 3`.
    pub fn cf_parity_example() -> Self {
        let values = (1..=6)
            .map(|k: i32| {
                let j1 = if k % 2 == 1 { 1.0 } else { -1.0 };
                let j2 = match k % 3 {
                    0 => 0.0,
                    1 => 1.0,
                    _ => -1.0,
                };
                vec![j1, j2]
            })
            .collect();
        Self::periodic(values).expect("static table")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn source(&self) -> &PotentialSource {
        &self.source
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.source, PotentialSource::Zero)
    }

    /// `J(w)` for a window of exactly `depth` symbols.
    pub fn eval(&self, window: &[Symbol]) -> Result<Vec<f64>> {
        if window.len() != self.depth {
            return Err(Error::invalid(format!(
                "potential of depth {} evaluated on a window of length {}",
                self.depth,
                window.len()
            )));
        }
        let v = match &self.source {
            PotentialSource::Zero => vec![0.0; self.dim],
            PotentialSource::Table(t) => t
                .get(window)
                .cloned()
                .ok_or_else(|| Error::invalid(format!("potential table has no entry for {}", Word::from(window))))?,
            PotentialSource::Periodic(values) => values[(window[0] as usize - 1) % values.len()].clone(),
            PotentialSource::Expression(exprs) => exprs.iter().map(|e| e.eval(0.0, window[0] as f64)).collect(),
            PotentialSource::Function(f) => f(window),
        };
        if v.len() != self.dim || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("potential value at {} is not a finite {}-vector", Word::from(window), self.dim)));
        }
        if let Some(b) = self.bound {
            if norm(&v) > b * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::invalid(format!(
                    "potential value at {} exceeds the declared bound {b}",
                    Word::from(window)
                )));
            }
        }
        Ok(v)
    }

    /// Birkhoff sum over one period of the periodic point `cycle^infinity`.
    pub fn birkhoff_cycle(&self, cycle: &Word) -> Result<Vec<f64>> {
        let p = cycle.len();
        if p == 0 {
            return Err(Error::invalid("empty cycle"));
        }
        let s = cycle.symbols();
        let mut acc = vec![0.0; self.dim];
        let mut window = Vec::with_capacity(self.depth);
        for i in 0..p {
            window.clear();
            window.extend((0..self.depth).map(|j| s[(i + j) % p]));
            for (a, v) in acc.iter_mut().zip(self.eval(&window)?) {
                *a += v;
            }
        }
        Ok(acc)
    }

    /// Birkhoff sum `S_n J` at a point whose first `n + depth - 1` symbols are `symbols`.
    pub fn birkhoff_prefix(&self, symbols: &[Symbol], n: usize) -> Result<Vec<f64>> {
        if symbols.len() + 1 < n + self.depth {
            return Err(Error::invalid("prefix too short for the requested Birkhoff sum"));
        }
        let mut acc = vec![0.0; self.dim];
        for i in 0..n {
            for (a, v) in acc.iter_mut().zip(self.eval(&symbols[i..i + self.depth])?) {
                *a += v;
            }
        }
        Ok(acc)
    }
}

fn check_rows(values: &[Vec<f64>]) -> Result<usize> {
    let dim = values.first().map(|v| v.len()).unwrap_or(0);
    if dim == 0 {
        return Err(Error::invalid("potential needs at least one nonempty value"));
    }
    if values.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("potential rows have different dimensions"));
    }
    if values.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::invalid("potential values must be finite"));
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_example_values() {
        let j = PotentialVector::cf_parity_example();
        let expect = [(1, [1.0, 1.0]), (2, [-1.0, -1.0]), (3, [1.0, 0.0]), (4, [-1.0, 1.0]), (6, [-1.0, 0.0]), (7, [1.0, 1.0])];
        for (k, v) in expect {
            assert_eq!(j.eval(&[k]).unwrap(), v.to_vec());
        }
    }

    #[test]
    fn cycle_sums_wrap() {
        let mut t = BTreeMap::new();
        for a in 1..=2u32 {
            for b in 1..=2u32 {
                t.insert(vec![a, b], vec![if a != b { 1.0 } else { 0.0 }]);
            }
        }
        let j = PotentialVector::table(2, t).unwrap();
        assert_eq!(j.birkhoff_cycle(&Word::new(vec![1, 2])).unwrap(), vec![2.0]);
        assert_eq!(j.birkhoff_cycle(&Word::new(vec![1, 1, 2])).unwrap(), vec![2.0]);
        assert_eq!(j.birkhoff_prefix(&[1, 1, 2], 2).unwrap(), vec![1.0]);
    }

    #[test]
    fn expression_potential_and_bound() {
        let j = PotentialVector::expressions(vec![Expr::parse("1 - 2*mod(k+1, 2)").unwrap()], Some(1.0)).unwrap();
        assert_eq!(j.eval(&[3]).unwrap(), vec![1.0]);
        let bad = PotentialVector::expressions(vec![Expr::parse("k").unwrap()], Some(2.0)).unwrap();
        assert!(bad.eval(&[3]).is_err());
        assert!(PotentialVector::expressions(vec![Expr::parse("x").unwrap()], None).is_err());
    }
}
