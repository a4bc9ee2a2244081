//! A graph directed Markov system: incidence structure plus contraction family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::interval::Interval;
use crate::maps::{CodingPoint, DerivativeBracket, MapFamily};
use crate::symbolic::{Alphabet, IncidenceMatrix, Symbol, Word};

/// Declared behaviour of `||phi_k'||` for large `k`.
#[derive(Debug, Clone)]
pub enum TailRule {
    /// `lower k^-p <= ||phi_k'|| <= upper k^-p`.
    PowerLaw { lower: f64, upper: f64, exponent: f64 },
    /// A weight `w(k)` comparable to `||phi_k'||`.
    Expression(Expr),
}

impl TailRule {
    pub fn weight(&self, k: f64) -> f64 {
        match self {
            TailRule::PowerLaw { upper, exponent, .. } => upper * k.powf(-exponent),
            TailRule::Expression(e) => e.eval(0.0, k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Similarity,
    ContinuedFraction,
    Custom,
}

#[derive(Debug, Clone)]
pub struct SystemDescriptor {
    incidence: IncidenceMatrix,
    family: MapFamily,
    tail: Option<TailRule>,
}

impl SystemDescriptor {
    pub fn new(incidence: IncidenceMatrix, family: MapFamily, tail: Option<TailRule>) -> Result<Self> {
        if let Some(size) = family.size() {
            match incidence.alphabet() {
                Alphabet::Finite(n) if n <= size => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "incidence alphabet is larger than the {size} maps of the family"
                    )))
                }
            }
        }
        if let Some(TailRule::PowerLaw { lower, upper, exponent }) = &tail {
            if !(*lower > 0.0 && lower <= upper && *exponent > 0.0) {
                return Err(Error::invalid("power-law tail needs 0 < lower <= upper and exponent > 0"));
            }
        }
        Ok(SystemDescriptor { incidence, family, tail })
    }

    /// Full shift on similarities placed with equal gaps in `[0,1]`.
    pub fn similarity(ratios: Vec<f64>) -> Result<Self> {
        let n = ratios.len() as u32;
        Self::new(IncidenceMatrix::full_shift(Alphabet::Finite(n)), MapFamily::similarity_spaced(ratios)?, None)
    }

    /// The Gauss system `x -> 1/(x+k)`, full shift on `alphabet`.
    pub fn continued_fraction(alphabet: Alphabet) -> Self {
        let tail = match alphabet {
            Alphabet::Infinite => Some(TailRule::PowerLaw { lower: 1.0, upper: 1.0, exponent: 2.0 }),
            Alphabet::Finite(_) => None,
        };
        SystemDescriptor { incidence: IncidenceMatrix::full_shift(alphabet), family: MapFamily::continued_fraction(), tail }
    }

    pub fn with_tail(mut self, tail: Option<TailRule>) -> Self {
        self.tail = tail;
        self
    }

    pub fn incidence(&self) -> &IncidenceMatrix {
        &self.incidence
    }

    pub fn family(&self) -> &MapFamily {
        &self.family
    }

    pub fn tail(&self) -> Option<&TailRule> {
        self.tail.as_ref()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.incidence.alphabet()
    }

    pub fn kind(&self) -> SystemKind {
        if self.family.is_similarity() {
            SystemKind::Similarity
        } else if self.family.is_continued_fraction() {
            SystemKind::ContinuedFraction
        } else {
            SystemKind::Custom
        }
    }

    /// Number of edges visible under truncation `n`.
    pub fn effective_size(&self, n: u32) -> u32 {
        self.alphabet().truncate(n)
    }

    fn check_word(&self, word: &Word) -> Result<()> {
        if !self.incidence.is_admissible(word)? {
            return Err(Error::Inadmissible { word: word.clone() });
        }
        Ok(())
    }

    pub fn log_deriv_bracket(&self, word: &Word) -> Result<DerivativeBracket> {
        self.check_word(word)?;
        self.family.log_deriv_bracket(word)
    }

    pub fn geometric_potential_bracket(&self, word: &Word) -> Result<Interval> {
        self.check_word(word)?;
        self.family.geometric_potential_bracket(word)
    }

    pub fn approximate_pi(&self, prefix: &Word) -> Result<CodingPoint> {
        self.check_word(prefix)?;
        self.family.approximate_pi(prefix)
    }

    /// Enclosure of `S_p I` at the periodic point `cycle^infinity`, obtained
    /// from the derivative of one period over the image of `periods` periods.
    pub fn cycle_potential(&self, cycle: &Word, periods: usize) -> Result<Interval> {
        if !self.incidence.is_cyclable(cycle)? {
            return Err(Error::NotCyclable { word: cycle.clone() });
        }
        let mut best = self.family.log_deriv_over(cycle, self.family.domain())?;
        let mut y = self.family.domain();
        for _ in 0..periods.max(1) {
            y = self.family.image_of(cycle, y)?;
            let b = self.family.log_deriv_over(cycle, y)?;
            best = best.intersect(&b).unwrap_or(b);
            if y.width() == 0.0 {
                break;
            }
        }
        Ok(-best)
    }

    /// `sup ||phi_k'||` as a function of `k`, from the declared tail rule or
    /// the family itself.
    pub fn edge_weight(&self, k: Symbol) -> Result<f64> {
        Ok(self.family.sup_log_deriv_edge(k)?.exp())
    }
}
