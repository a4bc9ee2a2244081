//! Directed multigraphs, incidence matrices and admissible words.
//!
//! Edges are identified with positive integers `1, 2, ...`. Infinite
//! alphabets are never materialized; every enumeration takes an explicit
//! truncation bound `N` and only looks at edges `1..=N`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An edge label. Edges are 1-based.
pub type Symbol = u32;

/// A finite word over the edge alphabet. The empty word is allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn new(symbols: impl Into<Vec<Symbol>>) -> Self {
        Word(symbols.into())
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn first(&self) -> Option<Symbol> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Symbol> {
        self.0.last().copied()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn repeat(&self, times: usize) -> Word {
        Word(self.0.repeat(times))
    }

    pub fn max_symbol(&self) -> Symbol {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Word(v.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Size of the edge set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alphabet {
    Finite(u32),
    Infinite,
}

impl Alphabet {
    pub fn contains(&self, e: Symbol) -> bool {
        match *self {
            Alphabet::Finite(n) => e >= 1 && e <= n,
            Alphabet::Infinite => e >= 1,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Alphabet::Finite(_))
    }

    /// Effective number of edges visible under truncation `n`.
    pub fn truncate(&self, n: u32) -> u32 {
        match *self {
            Alphabet::Finite(size) => size.min(n),
            Alphabet::Infinite => n,
        }
    }

    fn describe(&self) -> String {
        match self {
            Alphabet::Finite(n) => n.to_string(),
            Alphabet::Infinite => "infinite".into(),
        }
    }
}

/// Initial and terminal vertex maps.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeSet {
    /// Every edge is a loop at vertex 0.
    Loops,
    /// Explicit vertex pairs for edges `1..=len`.
    Listed { initial: Vec<usize>, terminal: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multigraph {
    vertex_count: usize,
    alphabet: Alphabet,
    edges: EdgeSet,
}

impl Multigraph {
    /// A single vertex carrying `alphabet` loops.
    pub fn bouquet(alphabet: Alphabet) -> Self {
        Multigraph { vertex_count: 1, alphabet, edges: EdgeSet::Loops }
    }

    pub fn listed(vertex_count: usize, initial: Vec<usize>, terminal: Vec<usize>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::invalid("multigraph needs at least one vertex"));
        }
        if initial.is_empty() || initial.len() != terminal.len() {
            return Err(Error::invalid("initial and terminal maps must be nonempty and of equal length"));
        }
        if initial.iter().chain(terminal.iter()).any(|&v| v >= vertex_count) {
            return Err(Error::invalid("edge endpoint refers to a missing vertex"));
        }
        let n = initial.len() as u32;
        Ok(Multigraph { vertex_count, alphabet: Alphabet::Finite(n), edges: EdgeSet::Listed { initial, terminal } })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn check_edge(&self, e: Symbol) -> Result<()> {
        if self.alphabet.contains(e) {
            Ok(())
        } else {
            Err(Error::UnknownEdge { edge: e, size: self.alphabet.describe() })
        }
    }

    pub fn initial(&self, e: Symbol) -> Result<usize> {
        self.check_edge(e)?;
        Ok(match &self.edges {
            EdgeSet::Loops => 0,
            EdgeSet::Listed { initial, .. } => initial[(e - 1) as usize],
        })
    }

    pub fn terminal(&self, e: Symbol) -> Result<usize> {
        self.check_edge(e)?;
        Ok(match &self.edges {
            EdgeSet::Loops => 0,
            EdgeSet::Listed { terminal, .. } => terminal[(e - 1) as usize],
        })
    }
}

/// How the incidence matrix is specified.
#[derive(Clone)]
pub enum IncidenceRule {
    /// Every transition allowed by the graph (`t(u) = i(v)`); on a bouquet
    /// this is the full shift.
    VertexDetermined,
    /// Dense 0/1 rows for a finite alphabet.
    Dense(Vec<Vec<bool>>),
    /// Arbitrary rule for countable alphabets.
    Predicate(Arc<dyn Fn(Symbol, Symbol) -> bool + Send + Sync>),
}

impl fmt::Debug for IncidenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IncidenceRule::VertexDetermined => write!(f, "VertexDetermined"),
            IncidenceRule::Dense(rows) => f.debug_tuple("Dense").field(rows).finish(),
            IncidenceRule::Predicate(_) => write!(f, "Predicate(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    graph: Multigraph,
    rule: IncidenceRule,
}

impl IncidenceMatrix {
    /// The full shift on a single vertex.
    pub fn full_shift(alphabet: Alphabet) -> Self {
        IncidenceMatrix { graph: Multigraph::bouquet(alphabet), rule: IncidenceRule::VertexDetermined }
    }

    /// A dense 0/1 matrix on a single vertex.
    pub fn dense(rows: Vec<Vec<u8>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("incidence matrix must be square and nonempty"));
        }
        if rows.iter().flatten().any(|&x| x > 1) {
            return Err(Error::invalid("incidence entries must be 0 or 1"));
        }
        let rows = rows.into_iter().map(|r| r.into_iter().map(|x| x == 1).collect()).collect();
        Ok(IncidenceMatrix {
            graph: Multigraph::bouquet(Alphabet::Finite(n as u32)),
            rule: IncidenceRule::Dense(rows),
        })
    }

    pub fn new(graph: Multigraph, rule: IncidenceRule) -> Result<Self> {
        if let IncidenceRule::Dense(rows) = &rule {
            let size = match graph.alphabet() {
                Alphabet::Finite(n) => n as usize,
                Alphabet::Infinite => return Err(Error::invalid("dense incidence needs a finite alphabet")),
            };
            if rows.len() != size || rows.iter().any(|r| r.len() != size) {
                return Err(Error::invalid("dense incidence dimensions do not match the alphabet"));
            }
        }
        Ok(IncidenceMatrix { graph, rule })
    }

    pub fn graph(&self) -> &Multigraph {
        &self.graph
    }

    pub fn alphabet(&self) -> Alphabet {
        self.graph.alphabet()
    }

    pub fn rule(&self) -> &IncidenceRule {
        &self.rule
    }

    /// True when admissibility is decided by vertices alone.
    pub fn is_vertex_determined(&self) -> bool {
        matches!(self.rule, IncidenceRule::VertexDetermined)
    }

    /// True for the full shift on a single vertex.
    pub fn is_full_shift(&self) -> bool {
        self.is_vertex_determined() && self.graph.vertex_count() == 1
    }

    /// `A(u, v)`. A one entry between edges whose vertices do not match is
    /// reported as a domain mismatch.
    pub fn entry(&self, u: Symbol, v: Symbol) -> Result<bool> {
        let tu = self.graph.terminal(u)?;
        let iv = self.graph.initial(v)?;
        let raw = match &self.rule {
            IncidenceRule::VertexDetermined => tu == iv,
            IncidenceRule::Dense(rows) => rows[(u - 1) as usize][(v - 1) as usize],
            IncidenceRule::Predicate(p) => p(u, v),
        };
        if raw && tu != iv {
            return Err(Error::DomainMismatch { from: u, to: v });
        }
        Ok(raw)
    }

    pub fn is_admissible(&self, word: &Word) -> Result<bool> {
        for &s in word.symbols() {
            self.graph.check_edge(s)?;
        }
        for pair in word.symbols().windows(2) {
            if !self.entry(pair[0], pair[1])? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Admissible and the wrap-around transition `last -> first` is allowed.
    pub fn is_cyclable(&self, word: &Word) -> Result<bool> {
        if word.is_empty() {
            return Ok(false);
        }
        Ok(self.is_admissible(word)? && self.entry(word.last().unwrap(), word.first().unwrap())?)
    }

    /// Dense lookup table for edges `1..=n` (after clipping to the alphabet).
    pub fn table(&self, n: u32) -> Result<TransitionTable> {
        let size = self.alphabet().truncate(n);
        if size == 0 {
            return Err(Error::invalid("truncation must be at least 1"));
        }
        let s = size as usize;
        let mut allowed = vec![false; s * s];
        for u in 1..=size {
            for v in 1..=size {
                allowed[(u as usize - 1) * s + (v as usize - 1)] = self.entry(u, v)?;
            }
        }
        let full = allowed.iter().all(|&b| b);
        Ok(TransitionTable { size, allowed, full })
    }

    /// Lexicographic stream of admissible words of length `n` over `1..=truncation`.
    pub fn enumerate_words(&self, n: usize, truncation: u32) -> Result<WordIter> {
        if n == 0 {
            return Err(Error::invalid("word length must be at least 1"));
        }
        Ok(WordIter::new(self.table(truncation)?, n))
    }

    /// Number of admissible words of length `n` via the transfer recursion
    /// on counts indexed by the last symbol.
    pub fn count_words(&self, n: usize, truncation: u32) -> Result<u128> {
        if n == 0 {
            return Err(Error::invalid("word length must be at least 1"));
        }
        let table = self.table(truncation)?;
        let s = table.size as usize;
        let mut by_last = vec![1u128; s];
        for _ in 1..n {
            let mut next = vec![0u128; s];
            for (u, &c) in by_last.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for (v, slot) in next.iter_mut().enumerate() {
                    if table.allowed[u * s + v] {
                        *slot += c;
                    }
                }
            }
            by_last = next;
        }
        Ok(by_last.iter().sum())
    }

    /// Greedy search for a finite connector set certifying finite
    /// irreducibility on `1..=truncation`.
    ///
    /// With `allow_empty` the empty word may serve as a connector.
    pub fn find_irreducibility_witness(
        &self,
        truncation: u32,
        max_len: usize,
        allow_empty: bool,
    ) -> Result<IrreducibilityWitness> {
        let table = self.table(truncation)?;
        let size = table.size;
        let min_len = if allow_empty { 0 } else { 1 };
        let mut candidates: Vec<Word> = Vec::new();
        if allow_empty {
            candidates.push(Word::empty());
        }
        for len in min_len.max(1)..=max_len {
            candidates.extend(WordIter::new(table.clone(), len));
        }

        let pairs: Vec<(Symbol, Symbol)> =
            (1..=size).flat_map(|a| (1..=size).map(move |b| (a, b))).collect();
        let joins = |w: &Word, a: Symbol, b: Symbol| -> bool {
            match (w.first(), w.last()) {
                (None, None) => table.allows(a, b),
                (Some(f), Some(l)) => table.allows(a, f) && table.allows(l, b),
                _ => unreachable!(),
            }
        };

        // Every pair must have at least one connector.
        let cover: Vec<Vec<usize>> = candidates
            .iter()
            .map(|w| {
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(_, &(a, b))| joins(w, a, b))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let mut coverable = vec![false; pairs.len()];
        for c in &cover {
            for &i in c {
                coverable[i] = true;
            }
        }
        if let Some(i) = coverable.iter().position(|&c| !c) {
            let (from, to) = pairs[i];
            return Err(Error::NotIrreducible { from, to, max_len });
        }

        let mut uncovered: BTreeSet<usize> = (0..pairs.len()).collect();
        let mut chosen = Vec::new();
        while !uncovered.is_empty() {
            // Most newly covered pairs; ties go to the earlier (shorter, lexicographically smaller) word.
            let (best, _) = cover
                .iter()
                .enumerate()
                .map(|(j, c)| (j, c.iter().filter(|i| uncovered.contains(i)).count()))
                .fold((usize::MAX, 0), |acc, (j, n)| if n > acc.1 { (j, n) } else { acc });
            for i in &cover[best] {
                uncovered.remove(i);
            }
            chosen.push(candidates[best].clone());
        }
        chosen.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(IrreducibilityWitness { connectors: chosen, truncation: size })
    }

    /// Primitive cyclable words up to rotation, each given by its
    /// lexicographically smallest rotation, ordered by period then lexicographically.
    pub fn primitive_cycles(&self, max_period: usize, truncation: u32) -> Result<Vec<Word>> {
        let table = self.table(truncation)?;
        let mut out = Vec::new();
        for p in 1..=max_period {
            for w in WordIter::new(table.clone(), p) {
                let s = w.symbols();
                if !table.allows(s[p - 1], s[0]) {
                    continue;
                }
                let minimal_and_primitive = (1..p).all(|r| {
                    let rotated = s[r..].iter().chain(s[..r].iter());
                    // strictly greater rotation required for primitivity + minimality
                    rotated.cmp(s.iter()) == std::cmp::Ordering::Greater
                });
                if minimal_and_primitive {
                    out.push(w);
                }
            }
        }
        Ok(out)
    }
}

/// Dense transition lookup for a truncated alphabet.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    size: u32,
    allowed: Vec<bool>,
    full: bool,
}

impl TransitionTable {
    pub fn size(&self) -> u32 {
        self.size
    }

    #[inline]
    pub fn allows(&self, u: Symbol, v: Symbol) -> bool {
        self.full || self.allowed[(u as usize - 1) * self.size as usize + (v as usize - 1)]
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn admissible(&self, w: &[Symbol]) -> bool {
        w.iter().all(|&s| s >= 1 && s <= self.size) && w.windows(2).all(|p| self.allows(p[0], p[1]))
    }
}

/// Lexicographic iterator over admissible words of a fixed length.
#[derive(Debug, Clone)]
pub struct WordIter {
    table: TransitionTable,
    len: usize,
    current: Vec<Symbol>,
    started: bool,
    done: bool,
}

impl WordIter {
    fn new(table: TransitionTable, len: usize) -> Self {
        WordIter { table, len, current: Vec::with_capacity(len), started: false, done: len == 0 }
    }

    /// Extends `current` from position `current.len()` with the smallest
    /// admissible continuation, backtracking as needed.
    fn fill_from(&mut self, mut next_try: Symbol) -> bool {
        let size = self.table.size;
        loop {
            if self.current.len() == self.len {
                return true;
            }
            let prev = self.current.last().copied();
            let found = (next_try..=size).find(|&c| prev.is_none_or(|p| self.table.allows(p, c)));
            match found {
                Some(c) => {
                    self.current.push(c);
                    next_try = 1;
                }
                None => match self.current.pop() {
                    Some(last) => next_try = last + 1,
                    None => return false,
                },
            }
        }
    }
}

impl Iterator for WordIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let ok = if !self.started {
            self.started = true;
            self.fill_from(1)
        } else {
            let last = self.current.pop().unwrap();
            self.fill_from(last + 1)
        };
        if ok {
            Some(Word(self.current.clone()))
        } else {
            self.done = true;
            None
        }
    }
}

/// Finite connector set certifying finite irreducibility on `1..=truncation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityWitness {
    pub connectors: Vec<Word>,
    pub truncation: u32,
}

impl IrreducibilityWitness {
    /// Lexicographically smallest (shortest first) connector joining `a` to `b`.
    pub fn connector(&self, a: Symbol, b: Symbol, incidence: &IncidenceMatrix) -> Result<Option<&Word>> {
        for w in &self.connectors {
            let joined = Word::new(vec![a]).concat(w).concat(&Word::new(vec![b]));
            if incidence.is_admissible(&joined)? {
                return Ok(Some(w));
            }
        }
        Ok(None)
    }

    /// Replays the certificate on every pair of edges.
    pub fn verify(&self, incidence: &IncidenceMatrix) -> Result<bool> {
        for a in 1..=self.truncation {
            for b in 1..=self.truncation {
                if self.connector(a, b, incidence)?.is_none() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}
