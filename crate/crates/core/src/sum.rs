//! Compensated and log-domain accumulators with deterministic order.

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn scale(&mut self, c: f64) {
        self.sum *= c;
        self.comp *= c;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Streaming `log sum exp(w_i)` that also tracks weighted means of
/// attached vectors.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    max: f64,
    total: Neumaier,
    moments: Vec<Neumaier>,
}

impl LogSumExp {
    pub fn new(width: usize) -> Self {
        LogSumExp { max: f64::NEG_INFINITY, total: Neumaier::new(), moments: vec![Neumaier::new(); width] }
    }

    pub fn push(&mut self, log_w: f64, values: &[f64]) {
        debug_assert_eq!(values.len(), self.moments.len());
        if log_w == f64::NEG_INFINITY || log_w.is_nan() {
            return;
        }
        if log_w > self.max {
            if self.max != f64::NEG_INFINITY {
                let c = (self.max - log_w).exp();
                self.total.scale(c);
                for m in &mut self.moments {
                    m.scale(c);
                }
            }
            self.max = log_w;
        }
        let w = (log_w - self.max).exp();
        self.total.add(w);
        for (m, v) in self.moments.iter_mut().zip(values) {
            m.add(w * v);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.max == f64::NEG_INFINITY
    }

    pub fn log_value(&self) -> f64 {
        if self.is_empty() {
            return f64::NEG_INFINITY;
        }
        self.max + self.total.value().ln()
    }

    /// Weighted means of the attached values (zeros if empty).
    pub fn means(&self) -> Vec<f64> {
        let t = self.total.value();
        if self.is_empty() || t == 0.0 {
            return vec![0.0; self.moments.len()];
        }
        self.moments.iter().map(|m| m.value() / t).collect()
    }
}

/// `log sum exp` of a slice, two pass.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + neumaier_sum(xs.iter().map(|x| (x - m).exp())).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(xs), 2.0);
    }

    #[test]
    fn lse_handles_large_arguments() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn streaming_matches_two_pass() {
        let ws = [-3.0, 5.0, 2.0, 700.0, 699.0];
        let mut acc = LogSumExp::new(1);
        for (i, &w) in ws.iter().enumerate() {
            acc.push(w, &[i as f64]);
        }
        assert!((acc.log_value() - log_sum_exp(&ws)).abs() < 1e-12);
        let p3 = 1.0 / (1.0 + (-1.0f64).exp());
        let mean = 3.0 * p3 + 4.0 * (1.0 - p3);
        assert!((acc.means()[0] - mean).abs() < 1e-12);
    }
}
