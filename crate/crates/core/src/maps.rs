//! Conformal contraction families on a compact interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::interval::Interval;
use crate::symbolic::{Symbol, Word};

/// Golden ratio.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

#[derive(Debug, Clone)]
pub enum MapKind {
    /// `phi_e(x) = r_e x + b_e`.
    Similarity { ratios: Vec<f64>, offsets: Vec<f64> },
    /// `phi_k(x) = 1/(x+k)` on `[0,1]`.
    ContinuedFraction,
    /// User supplied map value and absolute derivative in `x` and `k`.
    Custom { map: Expr, deriv: Expr },
}

/// A family of contractions `phi_e` on a common domain `X`, with
/// `||phi_w'|| <= constant * contraction^|w|` and distortion constant `K`.
#[derive(Debug, Clone)]
pub struct MapFamily {
    kind: MapKind,
    domain: Interval,
    contraction: f64,
    contraction_constant: f64,
    distortion: f64,
    hoelder: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBracket {
    pub word: Word,
    /// `log ||phi_w'||`
    pub sup_log_deriv: f64,
    pub inf_log_deriv: f64,
}

impl DerivativeBracket {
    pub fn gap(&self) -> f64 {
        self.sup_log_deriv - self.inf_log_deriv
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingPoint {
    pub word_prefix: Word,
    pub point_estimate: f64,
    pub radius: f64,
}

impl MapFamily {
    pub fn similarity(ratios: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if ratios.is_empty() || ratios.len() != offsets.len() {
            return Err(Error::invalid("similarity family needs matching nonempty ratios and offsets"));
        }
        for (i, (&r, &b)) in ratios.iter().zip(&offsets).enumerate() {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::invalid(format!("ratio of edge {} must lie in (0,1), got {r}", i + 1)));
            }
            if b < 0.0 || b + r > 1.0 + 1e-15 {
                return Err(Error::invalid(format!("image of edge {} leaves [0,1]", i + 1)));
            }
        }
        let s = ratios.iter().copied().fold(0.0, f64::max);
        Ok(MapFamily {
            kind: MapKind::Similarity { ratios, offsets },
            domain: Interval::UNIT,
            contraction: s,
            contraction_constant: 1.0,
            distortion: 1.0,
            hoelder: (1.0, 0.0),
        })
    }

    /// Similarities with the given ratios placed left to right with equal gaps.
    pub fn similarity_spaced(ratios: Vec<f64>) -> Result<Self> {
        let total: f64 = ratios.iter().sum();
        if total > 1.0 {
            return Err(Error::invalid("ratios sum above 1 cannot be placed disjointly"));
        }
        let gap = if ratios.len() > 1 { (1.0 - total) / (ratios.len() - 1) as f64 } else { 0.0 };
        let mut offsets = Vec::with_capacity(ratios.len());
        let mut pos = 0.0;
        for &r in &ratios {
            offsets.push(pos);
            pos += r + gap;
        }
        Self::similarity(ratios, offsets)
    }

    pub fn continued_fraction() -> Self {
        MapFamily {
            kind: MapKind::ContinuedFraction,
            domain: Interval::UNIT,
            contraction: 1.0 / (GOLDEN * GOLDEN),
            contraction_constant: GOLDEN * GOLDEN,
            distortion: 4.0,
            hoelder: (1.0, 2.0),
        }
    }

    pub fn custom(
        map: Expr,
        deriv: Expr,
        domain: Interval,
        contraction: f64,
        contraction_constant: f64,
        distortion: f64,
    ) -> Result<Self> {
        if !(contraction > 0.0 && contraction < 1.0) {
            return Err(Error::invalid("contraction bound must lie in (0,1)"));
        }
        if !(contraction_constant >= 1.0) || !(distortion >= 1.0) {
            return Err(Error::invalid("contraction constant and distortion constant must be >= 1"));
        }
        if !domain.is_finite() || domain.width() <= 0.0 {
            return Err(Error::invalid("domain must be a nondegenerate compact interval"));
        }
        Ok(MapFamily {
            kind: MapKind::Custom { map, deriv },
            domain,
            contraction,
            contraction_constant,
            distortion,
            hoelder: (1.0, 0.0),
        })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn contraction(&self) -> f64 {
        self.contraction
    }

    pub fn contraction_constant(&self) -> f64 {
        self.contraction_constant
    }

    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    pub fn hoelder(&self) -> (f64, f64) {
        self.hoelder
    }

    pub fn is_continued_fraction(&self) -> bool {
        matches!(self.kind, MapKind::ContinuedFraction)
    }

    /// True when every derivative is constant.
    pub fn is_similarity(&self) -> bool {
        matches!(self.kind, MapKind::Similarity { .. })
    }

    /// Number of maps, if the family itself is finite.
    pub fn size(&self) -> Option<u32> {
        match &self.kind {
            MapKind::Similarity { ratios, .. } => Some(ratios.len() as u32),
            _ => None,
        }
    }

    fn check_edge(&self, e: Symbol) -> Result<()> {
        let ok = e >= 1 && self.size().is_none_or(|n| e <= n);
        if ok {
            Ok(())
        } else {
            let size = self.size().map(|n| n.to_string()).unwrap_or_else(|| "infinite".into());
            Err(Error::UnknownEdge { edge: e, size })
        }
    }

    /// Enclosure of `phi_e(Y)`.
    pub fn map_interval(&self, e: Symbol, y: Interval) -> Interval {
        match &self.kind {
            MapKind::Similarity { ratios, offsets } => {
                let i = (e - 1) as usize;
                Interval::new(ratios[i] * y.lo + offsets[i], ratios[i] * y.hi + offsets[i])
            }
            MapKind::ContinuedFraction => {
                let k = e as f64;
                Interval::new(1.0 / (y.hi + k), 1.0 / (y.lo + k))
            }
            MapKind::Custom { map, .. } => {
                let k = e as f64;
                let hull = subdivide(y, 8).map(|p| map.eval_interval(p, k)).reduce(|a, b| a.hull(&b)).unwrap();
                let ends = Interval::spanning(map.eval(y.lo, k), map.eval(y.hi, k));
                hull.intersect(&self.domain).unwrap_or(ends).hull(&ends)
            }
        }
    }

    /// Enclosure of `log|phi_e'|` over `Y`.
    pub fn log_deriv_on(&self, e: Symbol, y: Interval) -> Interval {
        match &self.kind {
            MapKind::Similarity { ratios, .. } => Interval::point(ratios[(e - 1) as usize].ln()),
            MapKind::ContinuedFraction => {
                let k = e as f64;
                Interval::new(-2.0 * (y.hi + k).ln(), -2.0 * (y.lo + k).ln())
            }
            MapKind::Custom { deriv, .. } => {
                let k = e as f64;
                subdivide(y, 8)
                    .map(|p| deriv.eval_interval(p, k).abs().ln())
                    .reduce(|a, b| a.hull(&b))
                    .unwrap()
            }
        }
    }

    /// Enclosure of `phi_w(X)`.
    pub fn image(&self, word: &Word) -> Result<Interval> {
        self.image_of(word, self.domain)
    }

    /// Enclosure of `phi_w(Y)`.
    pub fn image_of(&self, word: &Word, y: Interval) -> Result<Interval> {
        let mut cur = y;
        for &e in word.symbols().iter().rev() {
            self.check_edge(e)?;
            cur = self.map_interval(e, cur);
        }
        Ok(cur)
    }

    /// Enclosure of `log|phi_w'|` over `Y` by the chain rule on nested images.
    pub fn log_deriv_over(&self, word: &Word, y: Interval) -> Result<Interval> {
        let mut cur = y;
        let mut acc = Interval::point(0.0);
        for &e in word.symbols().iter().rev() {
            self.check_edge(e)?;
            acc = acc + self.log_deriv_on(e, cur);
            cur = self.map_interval(e, cur);
        }
        Ok(acc)
    }

    /// `sup` and `inf` of `log|phi_w'|` over the domain.
    pub fn log_deriv_bracket(&self, word: &Word) -> Result<DerivativeBracket> {
        if word.is_empty() {
            return Err(Error::invalid("derivative bracket needs a nonempty word"));
        }
        for &e in word.symbols() {
            self.check_edge(e)?;
        }
        let (sup, inf) = match &self.kind {
            MapKind::Similarity { ratios, .. } => {
                let v: f64 = word.symbols().iter().map(|&e| ratios[(e - 1) as usize].ln()).sum();
                (v, v)
            }
            MapKind::ContinuedFraction => {
                let (log_q, rho) = continuant(word.symbols());
                (-2.0 * log_q, -2.0 * (log_q + rho.ln_1p()))
            }
            MapKind::Custom { .. } => {
                let b = self.log_deriv_over(word, self.domain)?;
                (b.hi, b.lo)
            }
        };
        Ok(DerivativeBracket { word: word.clone(), sup_log_deriv: sup, inf_log_deriv: inf })
    }

    /// Enclosure of `S_n I` over the cylinder of `word`: `(inf, sup)`.
    pub fn geometric_potential_bracket(&self, word: &Word) -> Result<Interval> {
        let b = self.log_deriv_bracket(word)?;
        Ok(Interval::new(-b.sup_log_deriv, -b.inf_log_deriv))
    }

    /// Midpoint and radius of `phi_w(X)`, which contains `pi(w...)`.
    pub fn approximate_pi(&self, prefix: &Word) -> Result<CodingPoint> {
        if prefix.is_empty() {
            return Err(Error::invalid("coding approximation needs a nonempty prefix"));
        }
        let img = self.image(prefix)?;
        Ok(CodingPoint { word_prefix: prefix.clone(), point_estimate: img.mid(), radius: img.radius() })
    }

    /// `log ||phi_k'||` for a single edge.
    pub fn sup_log_deriv_edge(&self, e: Symbol) -> Result<f64> {
        Ok(self.log_deriv_bracket(&Word::new(vec![e]))?.sup_log_deriv)
    }
}

/// For `w = (a_1..a_n)` returns `(log q_n, q_{n-1}/q_n)` where `q` are the
/// continuants of `[0; a_1, ..., a_n]`.
pub fn continuant(word: &[Symbol]) -> (f64, f64) {
    let mut rho = 0.0f64;
    let mut log_q = 0.0f64;
    for &a in word {
        let next = 1.0 / (a as f64 + rho);
        log_q -= next.ln();
        rho = next;
    }
    (log_q, rho)
}

fn subdivide(y: Interval, pieces: usize) -> impl Iterator<Item = Interval> {
    let w = y.width() / pieces as f64;
    (0..pieces).map(move |i| {
        let lo = if i == 0 { y.lo } else { y.lo + w * i as f64 };
        let hi = if i + 1 == pieces { y.hi } else { y.lo + w * (i + 1) as f64 };
        Interval::new(lo, hi)
    })
}
