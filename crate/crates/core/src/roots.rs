//! Bracketing root search for decreasing functions.

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Final bracket of a decreasing function: `f(left) >= 0 > f(right)`, or
/// `left == right` at an exact zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub left: f64,
    pub right: f64,
    pub f_left: f64,
    pub f_right: f64,
    pub evaluations: usize,
}

impl RootBracket {
    pub fn interval(&self) -> Interval {
        Interval::new(self.left, self.right)
    }

    pub fn mid(&self) -> f64 {
        if self.left == self.right {
            return self.left;
        }
        // Secant point inside the bracket.
        let c = (self.left * self.f_right - self.right * self.f_left) / (self.f_right - self.f_left);
        if c.is_finite() && c >= self.left && c <= self.right {
            c
        } else {
            0.5 * (self.left + self.right)
        }
    }
}

/// Locates the zero of a decreasing `f` starting at `guess`, expanding by
/// `step` (doubling) until a sign change is found, then refining with the
/// Illinois method until the bracket is narrower than `xtol`.
///
/// With `floor`, the search never goes below it; a negative value there is
/// reported as [`Error::RootBelowDomain`].
pub fn decreasing_root(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    guess: f64,
    step: f64,
    floor: Option<f64>,
    xtol: f64,
    max_evals: usize,
) -> Result<RootBracket> {
    let mut evals = 0usize;
    let mut call = |x: f64, evals: &mut usize| -> Result<f64> {
        *evals += 1;
        if *evals > max_evals {
            return Err(Error::BudgetExceeded { what: "root search".into(), best: None });
        }
        let v = f(x)?;
        if v.is_nan() {
            return Err(Error::Numerical(format!("function is NaN at {x}")));
        }
        Ok(v)
    };
    let mut step = if step > 0.0 && step.is_finite() { step } else { 1.0 };
    let x0 = match floor {
        Some(fl) => guess.max(fl),
        None => guess,
    };
    let f0 = call(x0, &mut evals)?;
    if f0 == 0.0 {
        return Ok(RootBracket { left: x0, right: x0, f_left: 0.0, f_right: 0.0, evaluations: evals });
    }
    let (mut a, mut fa, mut b, mut fb);
    if f0 > 0.0 {
        a = x0;
        fa = f0;
        loop {
            let x = a + step;
            let fx = call(x, &mut evals)?;
            if fx < 0.0 {
                b = x;
                fb = fx;
                break;
            }
            if fx == 0.0 {
                return Ok(RootBracket { left: x, right: x, f_left: 0.0, f_right: 0.0, evaluations: evals });
            }
            a = x;
            fa = fx;
            step *= 2.0;
        }
    } else {
        b = x0;
        fb = f0;
        loop {
            let mut x = b - step;
            if let Some(fl) = floor {
                if b <= fl {
                    return Err(Error::RootBelowDomain { at: fl });
                }
                x = x.max(fl);
            }
            let fx = call(x, &mut evals)?;
            if fx >= 0.0 {
                a = x;
                fa = fx;
                if fx == 0.0 {
                    return Ok(RootBracket { left: x, right: x, f_left: 0.0, f_right: 0.0, evaluations: evals });
                }
                break;
            }
            b = x;
            fb = fx;
            step *= 2.0;
        }
    }

    // Illinois, with every third step a bisection so the width always shrinks.
    let mut last_side = 0i8;
    let mut iter = 0usize;
    let (mut ga, mut gb) = (fa, fb);
    while b - a > xtol {
        iter += 1;
        let mut c = if iter.is_multiple_of(3) { 0.5 * (a + b) } else { (a * gb - b * ga) / (gb - ga) };
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        if c <= a || c >= b {
            break;
        }
        let fc = call(c, &mut evals)?;
        if fc == 0.0 {
            return Ok(RootBracket { left: c, right: c, f_left: 0.0, f_right: 0.0, evaluations: evals });
        }
        if fc > 0.0 {
            a = c;
            fa = fc;
            ga = fc;
            if last_side == 1 {
                gb *= 0.5;
            }
            last_side = 1;
        } else {
            b = c;
            fb = fc;
            gb = fc;
            if last_side == -1 {
                ga *= 0.5;
            }
            last_side = -1;
        }
    }
    Ok(RootBracket { left: a, right: b, f_left: fa, f_right: fb, evaluations: evals })
}
