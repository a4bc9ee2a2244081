//! The implicit pressure zero `beta(t)`, its derivatives, the Legendre
//! transform and the value sets derived from them.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::potential::{PotentialSource, PotentialVector};
use crate::roots::decreasing_root;
use crate::symbolic::{Symbol, Word};
use crate::system::SystemDescriptor;
use crate::thermo::{KernelOptions, PressureEngine, PressureMethod, PressurePoint};

#[derive(Debug, Clone)]
pub struct BetaOptions {
    pub n: usize,
    pub truncation: u32,
    pub kernel: KernelOptions,
    /// Target width of the `beta` enclosure.
    pub tol: f64,
    /// Compute the enclosure from the lower/upper pressure roots.
    pub enclose: bool,
    /// Fail instead of reporting a gap-limited enclosure.
    pub strict_width: bool,
    /// Step of the finite difference audit and the Hessian stencil.
    pub fd_step: f64,
    pub max_evals: usize,
}

impl Default for BetaOptions {
    fn default() -> Self {
        BetaOptions {
            n: 10,
            truncation: 2,
            kernel: KernelOptions::default(),
            tol: 1e-8,
            enclose: true,
            strict_width: false,
            fd_step: 1e-4,
            max_evals: 200,
        }
    }
}

/// Gibbs averages per symbol: `int J dmu_t` and `int I dmu_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsMeans {
    pub j: Vec<f64>,
    pub i: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaPoint {
    pub t: Vec<f64>,
    /// Enclosure of the zero between the lower and upper pressure brackets.
    pub beta: Interval,
    /// Zero of the bracket midpoint; used for derivatives and transforms.
    pub beta_central: f64,
    pub grad: Vec<f64>,
    pub gibbs_means: GibbsMeans,
    /// The enclosure is wider than requested because of the bracket gap.
    pub width_limited: bool,
    /// Estimated word length needed for the requested width.
    pub required_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub gibbs: Vec<f64>,
    pub finite_difference: Vec<f64>,
    pub max_discrepancy: f64,
    /// Discrepancy above ten times the tolerance.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub positive_definite: bool,
    /// Largest `|H_ij - H_ji|` before symmetrization.
    pub asymmetry: f64,
}

/// Solver for `p(t, beta(t)) = 0` on a prepared word-sum kernel.
#[derive(Debug, Clone)]
pub struct BetaSolver {
    engine: PressureEngine,
    dim: usize,
    floor: f64,
    opts: BetaOptions,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl BetaSolver {
    pub fn new(sys: &SystemDescriptor, j: &PotentialVector, opts: BetaOptions) -> Result<Self> {
        if !(opts.tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let engine = PressureEngine::new(sys, j, opts.n, opts.truncation, PressureMethod::WordSum, &opts.kernel)?;
        // The truncated system is finite, so every beta >= 0 is admissible.
        Ok(BetaSolver { engine, dim: j.dim(), floor: 0.0, opts })
    }

    pub fn options(&self) -> &BetaOptions {
        &self.opts
    }

    pub fn engine(&self) -> &PressureEngine {
        &self.engine
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_t(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.dim {
            return Err(Error::invalid(format!("t has dimension {}, potential has {}", t.len(), self.dim)));
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("t must be finite"));
        }
        Ok(())
    }

    /// Newton iteration for the zero of the bracket midpoint.
    fn central(&self, t: &[f64], guess: f64) -> Result<(f64, PressurePoint)> {
        let mut beta = guess.max(self.floor);
        let mut lo = self.floor;
        let mut hi = f64::INFINITY;
        let mut p = self.engine.point(t, beta)?;
        let floor_checked = |p0: &PressurePoint| p0.bracket.mid() < 0.0;
        for _ in 0..self.opts.max_evals {
            let f = p.bracket.mid();
            if f == 0.0 {
                return Ok((beta, p));
            }
            if f > 0.0 {
                lo = lo.max(beta);
            } else {
                hi = hi.min(beta);
                if beta == self.floor {
                    return Err(Error::RootBelowDomain { at: self.floor });
                }
            }
            let slope = p.d_beta;
            let mut next = if slope < 0.0 { beta - f / slope } else { f64::NAN };
            if (next - beta).abs() <= 1e-14 * beta.abs().max(1.0) {
                return Ok((beta, p));
            }
            if !(next > lo && next < hi) {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * beta.max(0.5) };
            }
            let step = (next - beta).abs();
            beta = next;
            p = self.engine.point(t, beta)?;
            if step <= 1e-14 * beta.abs().max(1.0) {
                return Ok((beta, p));
            }
            if beta == self.floor && floor_checked(&p) {
                return Err(Error::RootBelowDomain { at: self.floor });
            }
        }
        Err(Error::BudgetExceeded { what: "beta(t) Newton iteration".into(), best: Some(Interval::new(lo, hi.max(lo))) })
    }

    /// Central root and gradient only.
    pub fn solve_central(&self, t: &[f64], guess: Option<f64>) -> Result<(f64, Vec<f64>, GibbsMeans)> {
        self.check_t(t)?;
        let (beta, p) = self.central(t, guess.unwrap_or(1.0))?;
        let n = self.opts.n as f64;
        let k = &p.kernel;
        let ij = k.mean_j_lower.iter().zip(&k.mean_j_upper).map(|(a, b)| (a + b) / (2.0 * n)).collect::<Vec<_>>();
        let ii = (k.mean_i_lower + k.mean_i_upper) / (2.0 * n);
        let grad = ij.iter().map(|x| x / ii).collect();
        Ok((beta, grad, GibbsMeans { j: ij, i: ii }))
    }

    pub fn solve(&self, t: &[f64]) -> Result<BetaPoint> {
        self.solve_from(t, None)
    }

    pub fn solve_from(&self, t: &[f64], guess: Option<f64>) -> Result<BetaPoint> {
        let (beta_c, grad, means) = self.solve_central(t, guess)?;
        let mut beta = Interval::point(beta_c);
        if self.opts.enclose {
            let here = self.engine.bracket(t, beta_c)?;
            let slope = means.i.max(1e-12);
            let step = (0.55 * here.width() / slope).max(self.opts.tol / 4.0);
            let xtol = self.opts.tol / 4.0;
            let mut lower = |b: f64| self.engine.bracket(t, b).map(|p| p.lower);
            let lo = decreasing_root(&mut lower, (beta_c - step).max(self.floor), step, Some(self.floor), xtol, self.opts.max_evals)?;
            let mut upper = |b: f64| self.engine.bracket(t, b).map(|p| p.upper);
            let hi = decreasing_root(&mut upper, beta_c + step, step, Some(self.floor), xtol, self.opts.max_evals)?;
            beta = Interval::new(lo.left.min(beta_c), hi.right.max(beta_c));
        }
        let width_limited = beta.width() > self.opts.tol;
        let required_n = width_limited.then(|| ((self.opts.n as f64) * beta.width() / self.opts.tol).ceil() as usize);
        if width_limited && self.opts.strict_width {
            return Err(Error::BracketTooWide { n: self.opts.n, enclosure: beta, required_n: required_n.unwrap() });
        }
        Ok(BetaPoint { t: t.to_vec(), beta, beta_central: beta_c, grad, gibbs_means: means, width_limited, required_n })
    }

    /// Gibbs gradient with a central finite difference audit.
    pub fn grad_beta(&self, t: &[f64]) -> Result<GradientReport> {
        let (b0, gibbs, _) = self.solve_central(t, None)?;
        let h = self.opts.fd_step;
        let mut fd = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut tp = t.to_vec();
            let mut tm = t.to_vec();
            tp[i] += h;
            tm[i] -= h;
            let bp = self.solve_central(&tp, Some(b0))?.0;
            let bm = self.solve_central(&tm, Some(b0))?.0;
            fd.push((bp - bm) / (2.0 * h));
        }
        let max_discrepancy = gibbs.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let flagged = max_discrepancy > 10.0 * self.opts.tol.max(h * h);
        Ok(GradientReport { gibbs, finite_difference: fd, max_discrepancy, flagged })
    }

    fn hessian_matrix(&self, t: &[f64], guess: f64) -> Result<(DMatrix<f64>, f64)> {
        let d = self.dim;
        let h = self.opts.fd_step;
        let mut m = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut tp = t.to_vec();
            let mut tm = t.to_vec();
            tp[j] += h;
            tm[j] -= h;
            let gp = self.solve_central(&tp, Some(guess))?.1;
            let gm = self.solve_central(&tm, Some(guess))?.1;
            for i in 0..d {
                m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let asym = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| (m[(i, j)] - m[(j, i)]).abs()).fold(0.0, f64::max);
        let sym = (&m + m.transpose()) * 0.5;
        Ok((sym, asym))
    }

    /// Symmetrized central-difference Hessian of `beta` with eigenvalue signs.
    pub fn hessian_beta(&self, t: &[f64]) -> Result<HessianReport> {
        self.check_t(t)?;
        let (b0, _, _) = self.solve_central(t, None)?;
        let (m, asymmetry) = self.hessian_matrix(t, b0)?;
        let eig = m.clone().symmetric_eigen();
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let band = 1e-6_f64.max(10.0 * asymmetry);
        let positive_definite = eigenvalues.first().is_some_and(|&e| e > band);
        let matrix = (0..self.dim).map(|i| (0..self.dim).map(|j| m[(i, j)]).collect()).collect();
        Ok(HessianReport { matrix, eigenvalues, positive_definite, asymmetry })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Independence {
    Independent,
    DependentWitness,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceCertificate {
    pub verdict: Independence,
    /// `S_p J / p` for every cycle.
    pub rows: Vec<Vec<f64>>,
    pub affine_rank: usize,
    /// Direction annihilating the row differences when rank deficient.
    pub direction: Option<Vec<f64>>,
}

fn canonical_direction(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    let mut out: Vec<f64> = v.iter().map(|x| x / n).collect();
    if let Some(first) = out.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            out.iter_mut().for_each(|x| *x = -*x);
        }
    }
    out
}

/// Tests cohomological independence of the components of `J` on cycles.
pub fn independence_certificate(
    sys: &SystemDescriptor,
    j: &PotentialVector,
    cycles: &[Word],
) -> Result<IndependenceCertificate> {
    let d = j.dim();
    let mut rows = Vec::with_capacity(cycles.len());
    for c in cycles {
        if !sys.incidence().is_cyclable(c)? {
            return Err(Error::NotCyclable { word: c.clone() });
        }
        let s = j.birkhoff_cycle(c)?;
        rows.push(s.iter().map(|x| x / c.len() as f64).collect::<Vec<f64>>());
    }
    if rows.is_empty() {
        return Ok(IndependenceCertificate { verdict: Independence::Inconclusive, rows, affine_rank: 0, direction: None });
    }
    // Gram matrix of the row differences.
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for r in rows.iter().skip(1) {
        let diff = DVector::from_iterator(d, r.iter().zip(&rows[0]).map(|(a, b)| a - b));
        gram += &diff * diff.transpose();
    }
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.iter().copied().fold(0.0, f64::max).max(1.0);
    let null: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] <= 1e-18 * scale.max(1.0) + 1e-20).collect();
    let affine_rank = d - null.len();
    if null.is_empty() {
        return Ok(IndependenceCertificate { verdict: Independence::Independent, rows, affine_rank, direction: None });
    }
    let windows = witness_windows(sys, j, cycles);
    let mut first_dir = None;
    for &i in &null {
        let alpha: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let alpha = canonical_direction(&alpha);
        let exact = windows.iter().all(|w| j.eval(w).map(|v| dot(&alpha, &v).abs() <= 1e-10).unwrap_or(false));
        if exact {
            return Ok(IndependenceCertificate {
                verdict: Independence::DependentWitness,
                rows,
                affine_rank,
                direction: Some(alpha),
            });
        }
        first_dir.get_or_insert(alpha);
    }
    Ok(IndependenceCertificate { verdict: Independence::Inconclusive, rows, affine_rank, direction: first_dir })
}

/// Windows on which an exact linear relation must hold: all windows over
/// the symbols up to the largest one involved (and a full period for
/// periodic potentials).
fn witness_windows(sys: &SystemDescriptor, j: &PotentialVector, cycles: &[Word]) -> Vec<Vec<Symbol>> {
    let mut top = cycles.iter().map(|c| c.max_symbol()).max().unwrap_or(1);
    if let PotentialSource::Periodic(v) = j.source() {
        top = top.max(v.len() as Symbol);
    }
    let top = sys.alphabet().truncate(top);
    let depth = j.depth();
    let count = (top as usize).saturating_pow(depth as u32).min(1 << 20);
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let mut w = vec![0 as Symbol; depth];
        let mut r = idx;
        for slot in w.iter_mut().rev() {
            *slot = (r % top as usize) as Symbol + 1;
            r /= top as usize;
        }
        out.push(w);
    }
    out
}

#[derive(Debug, Clone)]
pub struct LegendreOptions {
    /// Convergence threshold on `|grad beta(t) - alpha|`.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub backtrack: f64,
    /// Iterates beyond this norm are examined for divergence.
    pub escape_radius: f64,
    /// Upper bound on the dimension of the limit set.
    pub hd_upper: f64,
    pub start: Option<Vec<f64>>,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        LegendreOptions {
            tol: 1e-7,
            max_iter: 100,
            armijo: 1e-4,
            backtrack: 0.5,
            escape_radius: 64.0,
            hd_upper: 1.0,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumStatus {
    Interior,
    BoundaryLimit,
    Outside,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub alpha: Vec<f64>,
    /// `-inf` when outside.
    pub beta_hat: f64,
    pub minimizer_t: Option<Vec<f64>>,
    /// `beta(t*)` at the returned minimizer.
    pub beta_at_minimizer: Option<f64>,
    pub status: SpectrumStatus,
    pub grad_residual: f64,
    pub iterations: usize,
}

impl SpectrumPoint {
    fn outside(alpha: &[f64], iterations: usize) -> Self {
        SpectrumPoint {
            alpha: alpha.to_vec(),
            beta_hat: f64::NEG_INFINITY,
            minimizer_t: None,
            beta_at_minimizer: None,
            status: SpectrumStatus::Outside,
            grad_residual: f64::INFINITY,
            iterations,
        }
    }
}

/// `beta_hat(alpha) = inf_t (beta(t) - <t, alpha>)` by damped Newton.
pub fn legendre(solver: &BetaSolver, alpha: &[f64], opts: &LegendreOptions) -> Result<SpectrumPoint> {
    let d = solver.dim();
    if alpha.len() != d {
        return Err(Error::invalid(format!("alpha has dimension {}, potential has {d}", alpha.len())));
    }
    let mut t = opts.start.clone().unwrap_or_else(|| vec![0.0; d]);
    let eval = |t: &[f64], guess: Option<f64>| -> Result<(f64, f64, Vec<f64>)> {
        let (b, grad, _) = solver.solve_central(t, guess)?;
        let g = b - dot(t, alpha);
        let r: Vec<f64> = grad.iter().zip(alpha).map(|(a, b)| a - b).collect();
        Ok((b, g, r))
    };
    let (mut b, mut g, mut r) = eval(&t, None)?;
    for iter in 0..opts.max_iter {
        let res = norm(&r);
        if res <= opts.tol {
            // A flat stationary point is the limit of a degenerating
            // direction, not an attained gradient.
            let (hm, _) = solver.hessian_matrix(&t, b)?;
            let min_eig = hm.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            let interior = min_eig > opts.tol.sqrt();
            return Ok(SpectrumPoint {
                alpha: alpha.to_vec(),
                beta_hat: g,
                minimizer_t: interior.then_some(t),
                beta_at_minimizer: Some(b),
                status: if interior { SpectrumStatus::Interior } else { SpectrumStatus::BoundaryLimit },
                grad_residual: res,
                iterations: iter,
            });
        }
        if g < -opts.hd_upper && norm(&t) > 1.0 {
            return Ok(SpectrumPoint::outside(alpha, iter));
        }
        // Newton direction on the symmetrized difference Hessian.
        let (hm, _) = solver.hessian_matrix(&t, b)?;
        let rv = DVector::from_column_slice(&r);
        let mut dir: Vec<f64> = match hm.clone().cholesky() {
            Some(ch) => (-ch.solve(&rv)).iter().copied().collect(),
            None => r.iter().map(|x| -x).collect(),
        };
        if dot(&dir, &r) >= 0.0 || dir.iter().any(|x| !x.is_finite()) {
            dir = r.iter().map(|x| -x).collect();
        }
        let cap = norm(&t).max(1.0);
        let len = norm(&dir);
        if len > cap {
            dir.iter_mut().for_each(|x| *x *= cap / len);
        }
        let slope = dot(&r, &dir);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = t.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            if let Ok((bc, gc, rc)) = eval(&cand, Some(b)) {
                if gc <= g + opts.armijo * step * slope {
                    accepted = Some((cand, bc, gc, rc));
                    break;
                }
            }
            step *= opts.backtrack;
        }
        let Some((tn, bn, gn, rn)) = accepted else {
            break;
        };
        let dg = g - gn;
        t = tn;
        b = bn;
        g = gn;
        r = rn;
        if norm(&t) > opts.escape_radius {
            if g < -opts.hd_upper {
                return Ok(SpectrumPoint::outside(alpha, iter + 1));
            }
            if dg.abs() <= opts.tol.max(1e-10) * g.abs().max(1.0) {
                return Ok(SpectrumPoint {
                    alpha: alpha.to_vec(),
                    beta_hat: g,
                    minimizer_t: None,
                    beta_at_minimizer: Some(b),
                    status: SpectrumStatus::BoundaryLimit,
                    grad_residual: norm(&r),
                    iterations: iter + 1,
                });
            }
        }
    }
    let res = norm(&r);
    Ok(SpectrumPoint {
        alpha: alpha.to_vec(),
        beta_hat: g,
        minimizer_t: Some(t),
        beta_at_minimizer: Some(b),
        status: SpectrumStatus::Unresolved,
        grad_residual: res,
        iterations: opts.max_iter,
    })
}

/// Legendre transform over a grid of `alpha`, per-point statuses.
pub fn spectrum_scan(solver: &BetaSolver, grid: &[Vec<f64>], opts: &LegendreOptions) -> Vec<SpectrumPoint> {
    grid.par_iter()
        .map(|a| {
            legendre(solver, a, opts).unwrap_or_else(|_| SpectrumPoint {
                alpha: a.clone(),
                beta_hat: f64::NAN,
                minimizer_t: None,
                beta_at_minimizer: None,
                status: SpectrumStatus::Unresolved,
                grad_residual: f64::INFINITY,
                iterations: 0,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub t: Vec<f64>,
    pub beta: f64,
}

/// `beta(t)` (central root) on a grid of `t`.
pub fn beta_surface(solver: &BetaSolver, grid: &[Vec<f64>]) -> Result<Vec<SurfacePoint>> {
    grid.par_iter()
        .map(|t| solver.solve_central(t, None).map(|(b, _, _)| SurfacePoint { t: t.clone(), beta: b }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MEstimate {
    /// `(t, grad beta(t))` per grid point.
    pub cloud: Vec<(Vec<f64>, Vec<f64>)>,
    /// Convex hull vertices of the gradients (endpoints for `d = 1`).
    pub hull: Vec<Vec<f64>>,
    pub zero_in_m: bool,
    pub minimizer: Option<Vec<f64>>,
    pub minimizer_grad_norm: Option<f64>,
    /// The gradients collapse to a point.
    pub degenerate: bool,
}

/// Gradient cloud and the test `0 in M` by minimizing `beta`.
pub fn estimate_m(solver: &BetaSolver, t_grid: &[Vec<f64>], opts: &LegendreOptions) -> Result<MEstimate> {
    let cloud: Vec<(Vec<f64>, Vec<f64>)> = t_grid
        .par_iter()
        .map(|t| solver.solve_central(t, None).map(|(_, g, _)| (t.clone(), g)))
        .collect::<Result<_>>()?;
    let pts: Vec<Vec<f64>> = cloud.iter().map(|c| c.1.clone()).collect();
    let hull = convex_hull(&pts);
    let spread = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| norm(&p.iter().zip(q).map(|(a, b)| a - b).collect::<Vec<_>>())))
        .fold(0.0, f64::max);
    let zero = vec![0.0; solver.dim()];
    let lp = legendre(solver, &zero, opts)?;
    let zero_in_m = lp.status == SpectrumStatus::Interior;
    Ok(MEstimate {
        cloud,
        hull,
        zero_in_m,
        minimizer: lp.minimizer_t.clone().filter(|_| zero_in_m),
        minimizer_grad_norm: zero_in_m.then_some(lp.grad_residual),
        degenerate: spread < 1e-9,
    })
}

/// Convex hull: interval endpoints in one dimension, counter-clockwise
/// polygon in two; higher dimensions return the points unchanged.
pub fn convex_hull(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if points.is_empty() {
        return Vec::new();
    }
    match points[0].len() {
        1 => {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                vec![vec![lo]]
            } else {
                vec![vec![lo], vec![hi]]
            }
        }
        2 => {
            let mut p: Vec<(f64, f64)> = points.iter().map(|v| (v[0], v[1])).collect();
            p.sort_by(|a, b| a.partial_cmp(b).unwrap());
            p.dedup();
            if p.len() < 3 {
                return p.into_iter().map(|(x, y)| vec![x, y]).collect();
            }
            let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
            let mut lower: Vec<(f64, f64)> = Vec::new();
            for &q in &p {
                while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
                    lower.pop();
                }
                lower.push(q);
            }
            let mut upper: Vec<(f64, f64)> = Vec::new();
            for &q in p.iter().rev() {
                while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
                    upper.pop();
                }
                upper.push(q);
            }
            lower.pop();
            upper.pop();
            lower.extend(upper);
            lower.into_iter().map(|(x, y)| vec![x, y]).collect()
        }
        _ => points.to_vec(),
    }
}

/// Distance from `x` to the convex hull given by [`convex_hull`]; zero inside.
pub fn hull_distance(hull: &[Vec<f64>], x: &[f64]) -> f64 {
    match (hull.len(), x.len()) {
        (0, _) => f64::INFINITY,
        (_, 1) => {
            let lo = hull.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = hull.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            (lo - x[0]).max(x[0] - hi).max(0.0)
        }
        (_, 2) => {
            let seg = |a: &[f64], b: &[f64]| {
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let l2 = dx * dx + dy * dy;
                let s = if l2 == 0.0 { 0.0 } else { (((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) };
                ((x[0] - a[0] - s * dx).powi(2) + (x[1] - a[1] - s * dy).powi(2)).sqrt()
            };
            if hull.len() == 1 {
                return seg(&hull[0], &hull[0]);
            }
            let m = hull.len();
            let inside = m >= 3
                && (0..m).all(|i| {
                    let a = &hull[i];
                    let b = &hull[(i + 1) % m];
                    (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) >= 0.0
                });
            if inside {
                return 0.0;
            }
            (0..m).map(|i| seg(&hull[i], &hull[(i + 1) % m])).fold(f64::INFINITY, f64::min)
        }
        _ => f64::NAN,
    }
}

#[derive(Debug, Clone)]
pub struct KlOptions {
    pub max_period: usize,
    pub truncation: u32,
    /// Random Bernoulli vectors in addition to uniform ones on every subset.
    pub bernoulli_samples: usize,
    pub seed: u64,
    /// Slack of the hull inclusion test.
    pub eps: f64,
}

impl Default for KlOptions {
    fn default() -> Self {
        KlOptions { max_period: 4, truncation: 6, bernoulli_samples: 64, seed: 0, eps: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlReport {
    /// `Q(mu)` over sampled Bernoulli and periodic measures.
    pub l_points: Vec<Vec<f64>>,
    /// Cycle quotients `S_p J / S_p I`.
    pub k_points: Vec<(Word, Vec<f64>)>,
    pub l_hull: Vec<Vec<f64>>,
    pub max_m_distance: f64,
    pub max_k_distance: f64,
    pub eps: f64,
    /// Every `M` and `K` point lies within `eps` of the `L` hull.
    pub consistent: bool,
}

/// Samples of `K` and `L` and the inclusion check against sampled `M` points.
pub fn estimate_kl(sys: &SystemDescriptor, j: &PotentialVector, m_points: &[Vec<f64>], opts: &KlOptions) -> Result<KlReport> {
    use crate::measures::{q_of_bernoulli, q_of_periodic, BernoulliOptions, BernoulliSpec};
    use rand::{Rng, SeedableRng};

    let size = sys.alphabet().truncate(opts.truncation);
    let cycles = sys.incidence().primitive_cycles(opts.max_period, size)?;
    let k_points: Vec<(Word, Vec<f64>)> = cycles
        .par_iter()
        .map(|c| q_of_periodic(sys, j, c).map(|q| (c.clone(), q.q_mid())))
        .collect::<Result<_>>()?;

    let mut specs = Vec::new();
    if size <= 12 {
        for mask in 1u32..(1 << size) {
            let count = mask.count_ones() as f64;
            let probs = (0..size).map(|i| if mask >> i & 1 == 1 { 1.0 / count } else { 0.0 }).collect();
            specs.push(probs);
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.bernoulli_samples {
        // Flat Dirichlet via normalized exponentials.
        let e: Vec<f64> = (0..size).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = e.iter().sum();
        specs.push(e.iter().map(|x| x / total).collect());
    }
    let bern: Vec<Vec<f64>> = specs
        .into_par_iter()
        .map(|mut probs: Vec<f64>| {
            let total: f64 = crate::sum::neumaier_sum(probs.iter().copied());
            probs.iter_mut().for_each(|p| *p /= total);
            q_of_bernoulli(sys, j, &BernoulliSpec::Finite { probs }, &BernoulliOptions::default()).map(|s| s.q_mid())
        })
        .collect::<Result<_>>()?;
    let mut l_points: Vec<Vec<f64>> = k_points.iter().map(|k| k.1.clone()).collect();
    l_points.extend(bern);
    let l_hull = convex_hull(&l_points);
    let dist = |pts: &mut dyn Iterator<Item = &Vec<f64>>| pts.map(|p| hull_distance(&l_hull, p)).fold(0.0, f64::max);
    let max_m_distance = dist(&mut m_points.iter());
    let max_k_distance = dist(&mut k_points.iter().map(|k| &k.1));
    let consistent = max_m_distance <= opts.eps && max_k_distance <= opts.eps;
    Ok(KlReport { l_points, k_points, l_hull, max_m_distance, max_k_distance, eps: opts.eps, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![0.5, 0.5]];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert_eq!(hull_distance(&h, &[0.5, 0.2]), 0.0);
        assert!((hull_distance(&h, &[2.0, 0.5]) - 1.0).abs() < 1e-15);
        let h1 = convex_hull(&[vec![0.3], vec![-1.0], vec![0.1]]);
        assert_eq!(h1, vec![vec![-1.0], vec![0.3]]);
        assert!((hull_distance(&h1, &[0.5]) - 0.2).abs() < 1e-15);
    }
}
