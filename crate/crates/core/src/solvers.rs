//! Proximal-gradient solvers for
//!
//! * lasso: `‖Aw − y‖² + ρ‖w‖₁`
//! * sparse group lasso: `‖Aw − y‖² + λ₁‖w‖₁ + λ₂ Σₖ φₖ‖wₖ‖₂`
//!
//! Both run accelerated proximal gradient from `w = 0` with a monotone
//! restart: a step that would raise the objective is rejected and momentum
//! is reset. Convergence is declared when the relative objective decrease
//! falls below `tol` *and* the KKT residual is at most `tol · (1 + ‖2Aᵀy‖∞)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::linalg::{dot, norm1, norm2, norm_inf, norm_sq};
use crate::{Error, Result};

/// Dense `n × p` matrix stored column-major; column `j` is one predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_columns<'a, I>(n: usize, columns: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut data = Vec::new();
        let mut p = 0;
        for col in columns {
            if col.len() != n {
                return Err(Error::Shape { expected: n, found: col.len(), context: "design column length" });
            }
            data.extend_from_slice(col);
            p += 1;
        }
        DesignMatrix::from_col_major(n, p, data)
    }

    /// Builds from row-major data, mostly convenient in tests.
    pub fn from_row_major(n: usize, p: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * p {
            return Err(Error::Shape { expected: n * p, found: rows.len(), context: "design entries" });
        }
        let mut data = vec![0.0; n * p];
        for i in 0..n {
            for j in 0..p {
                data[j * n + i] = rows[i * p + j];
            }
        }
        DesignMatrix::from_col_major(n, p, data)
    }

    fn from_col_major(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Argument(format!("design matrix must be non-empty, got {n}x{p}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite design matrix entry".into()));
        }
        Ok(DesignMatrix { n, p, data })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DesignMatrix::from_col_major(n, n, data)
    }

    /// Number of rows (feature dimension).
    pub fn nrows(&self) -> usize {
        self.n
    }

    /// Number of columns (predictors).
    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    /// Scales every non-zero column to unit L2 norm.
    pub fn normalize_columns(&mut self) {
        for col in self.data.chunks_exact_mut(self.n) {
            let norm = norm2(col);
            if norm > 0.0 {
                col.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }

    /// `out = A w`
    pub fn mul_vec(&self, w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                crate::linalg::axpy(wj, self.column(j), out);
            }
        }
    }

    /// `out = Aᵀ r`
    pub fn mul_t_vec(&self, r: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(self.column(j), r);
        }
    }

    /// Power-iteration estimate of the largest eigenvalue of `AᵀA`.
    pub fn gram_spectral_radius(&self, max_iter: usize) -> f64 {
        let mut v = vec![1.0 / libm::sqrt(self.p as f64); self.p];
        let mut av = vec![0.0; self.n];
        let mut w = vec![0.0; self.p];
        let mut estimate = 0.0;
        for _ in 0..max_iter {
            self.mul_vec(&v, &mut av);
            self.mul_t_vec(&av, &mut w);
            let norm = norm2(&w);
            if norm == 0.0 {
                return 0.0;
            }
            let next = dot(&v, &w);
            w.iter_mut().for_each(|x| *x /= norm);
            core::mem::swap(&mut v, &mut w);
            if (next - estimate).abs() <= 1e-10 * next {
                return next.max(norm);
            }
            estimate = next;
        }
        estimate
    }

    fn check_shapes(&self, y: &[f64], w: &[f64]) -> Result<()> {
        if y.len() != self.n {
            return Err(Error::Shape { expected: self.n, found: y.len(), context: "target length" });
        }
        if w.len() != self.p {
            return Err(Error::Shape { expected: self.p, found: w.len(), context: "coefficient length" });
        }
        Ok(())
    }

    /// `‖Aw − y‖²` and the residual `Aw − y`.
    fn residual(&self, y: &[f64], w: &[f64], r: &mut [f64]) -> f64 {
        self.mul_vec(w, r);
        for (ri, yi) in r.iter_mut().zip(y) {
            *ri -= yi;
        }
        norm_sq(r)
    }
}

/// Contiguous column groups with positive weights φₖ.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    ranges: Vec<Range<usize>>,
    weights: Vec<f64>,
}

impl GroupStructure {
    pub fn new(ranges: Vec<Range<usize>>, weights: Vec<f64>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::Group("no groups".into()));
        }
        if ranges.len() != weights.len() {
            return Err(Error::Group(format!("{} groups but {} weights", ranges.len(), weights.len())));
        }
        let mut next = 0;
        for r in &ranges {
            if r.start != next || r.end <= r.start {
                return Err(Error::Group(format!("range {r:?} does not continue a partition at column {next}")));
            }
            next = r.end;
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Group(format!("group weight {w} must be positive")));
        }
        Ok(GroupStructure { ranges, weights })
    }

    /// Consecutive groups of the given sizes, all weights 1.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let ranges = sizes
            .iter()
            .map(|&s| {
                let r = start..start + s;
                start += s;
                r
            })
            .collect();
        GroupStructure::new(ranges, vec![1.0; sizes.len()])
    }

    pub fn single(p: usize) -> Result<Self> {
        GroupStructure::from_sizes(&[p])
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn range(&self, k: usize) -> Range<usize> {
        self.ranges[k].clone()
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Range<usize>, f64)> + '_ {
        self.ranges.iter().cloned().zip(self.weights.iter().copied())
    }

    /// Total number of columns covered.
    pub fn ncols(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// `1/L` with `L` from power iteration, doubled if the quadratic upper
    /// bound is ever violated.
    #[default]
    Fixed,
    /// Starts from a lower bound on `L` and doubles until the bound holds.
    Backtracking,
}

impl core::str::FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(StepRule::Fixed),
            "backtracking" => Ok(StepRule::Backtracking),
            other => Err(Error::Argument(format!("unknown step rule `{other}`"))),
        }
    }
}

impl core::fmt::Display for StepRule {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            StepRule::Fixed => "fixed",
            StepRule::Backtracking => "backtracking",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// ℓ1 weight of the group layer.
    pub lambda1: f64,
    /// Group ℓ2 weight of the group layer.
    pub lambda2: f64,
    /// ℓ1 weight of the per-word layer.
    pub rho: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub step_rule: StepRule,
    /// Keep the per-iteration objective in [`SparseSolution::trace`].
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda1: 0.01,
            lambda2: 0.1,
            rho: 0.01,
            max_iter: 2000,
            tol: 1e-6,
            step_rule: StepRule::Fixed,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("rho", self.rho)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Argument(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Argument(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Argument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    pub w: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Objective after each iteration, when requested.
    pub trace: Vec<f64>,
}

impl SparseSolution {
    pub fn is_zero(&self) -> bool {
        self.w.iter().all(|&x| x == 0.0)
    }
}

/// `sign(x) · max(|x| − t, 0)`
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `max(1 − t/‖v‖, 0) · v`; the zero vector maps to itself.
pub fn group_soft_threshold(v: &[f64], t: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    group_soft_threshold_in_place(&mut out, t);
    out
}

fn group_soft_threshold_in_place(v: &mut [f64], t: f64) {
    let norm = norm2(v);
    let scale = if norm > t { 1.0 - t / norm } else { 0.0 };
    v.iter_mut().for_each(|x| *x *= scale);
}

pub fn lasso_objective(a: &DesignMatrix, y: &[f64], w: &[f64], rho: f64) -> Result<f64> {
    a.check_shapes(y, w)?;
    let mut r = vec![0.0; a.n];
    Ok(a.residual(y, w, &mut r) + rho * norm1(w))
}

pub fn sgl_objective(
    a: &DesignMatrix,
    y: &[f64],
    w: &[f64],
    groups: &GroupStructure,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    a.check_shapes(y, w)?;
    check_groups(a, groups)?;
    let mut r = vec![0.0; a.n];
    let pen = SparseGroupPenalty { groups, lambda1, lambda2 };
    Ok(a.residual(y, w, &mut r) + pen.value(w))
}

/// Largest stationarity violation of the lasso objective at `w`.
pub fn kkt_residual_lasso(a: &DesignMatrix, y: &[f64], w: &[f64], rho: f64) -> Result<f64> {
    a.check_shapes(y, w)?;
    Ok(L1Penalty { rho }.kkt_residual(w, &gradient(a, y, w)))
}

/// Largest stationarity violation of the sparse group lasso objective at
/// `w`. For an all-zero group the violation is `‖S(gₖ, λ₁)‖ − λ₂φₖ`
/// (clamped at 0); inside a non-zero group it is checked per coordinate.
pub fn kkt_residual_sgl(
    a: &DesignMatrix,
    y: &[f64],
    w: &[f64],
    groups: &GroupStructure,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    a.check_shapes(y, w)?;
    check_groups(a, groups)?;
    Ok(SparseGroupPenalty { groups, lambda1, lambda2 }.kkt_residual(w, &gradient(a, y, w)))
}

pub fn solve_lasso(a: &DesignMatrix, y: &[f64], rho: f64, cfg: &SolverConfig) -> Result<SparseSolution> {
    cfg.validate()?;
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::Argument(format!("rho = {rho} must be finite and non-negative")));
    }
    a.check_shapes(y, &vec![0.0; a.p])?;
    Ok(minimize(a, y, &L1Penalty { rho }, cfg))
}

pub fn solve_sgl(
    a: &DesignMatrix,
    y: &[f64],
    groups: &GroupStructure,
    lambda1: f64,
    lambda2: f64,
    cfg: &SolverConfig,
) -> Result<SparseSolution> {
    cfg.validate()?;
    for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Argument(format!("{name} = {v} must be finite and non-negative")));
        }
    }
    a.check_shapes(y, &vec![0.0; a.p])?;
    check_groups(a, groups)?;
    Ok(minimize(a, y, &SparseGroupPenalty { groups, lambda1, lambda2 }, cfg))
}

fn check_groups(a: &DesignMatrix, groups: &GroupStructure) -> Result<()> {
    if groups.ncols() != a.p {
        return Err(Error::Group(format!("groups cover {} columns, design has {}", groups.ncols(), a.p)));
    }
    Ok(())
}

/// `2Aᵀ(Aw − y)`
fn gradient(a: &DesignMatrix, y: &[f64], w: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; a.n];
    a.residual(y, w, &mut r);
    let mut g = vec![0.0; a.p];
    a.mul_t_vec(&r, &mut g);
    g.iter_mut().for_each(|x| *x *= 2.0);
    g
}

trait Penalty {
    fn value(&self, w: &[f64]) -> f64;
    /// In-place proximal map with step `step`.
    fn prox(&self, v: &mut [f64], step: f64);
    fn kkt_residual(&self, w: &[f64], grad: &[f64]) -> f64;
}

struct L1Penalty {
    rho: f64,
}

impl Penalty for L1Penalty {
    fn value(&self, w: &[f64]) -> f64 {
        self.rho * norm1(w)
    }

    fn prox(&self, v: &mut [f64], step: f64) {
        let t = step * self.rho;
        v.iter_mut().for_each(|x| *x = soft_threshold(*x, t));
    }

    fn kkt_residual(&self, w: &[f64], grad: &[f64]) -> f64 {
        w.iter().zip(grad).fold(0.0, |m, (&wj, &gj)| {
            let v = if wj != 0.0 { (gj + self.rho * wj.signum()).abs() } else { (gj.abs() - self.rho).max(0.0) };
            m.max(v)
        })
    }
}

struct SparseGroupPenalty<'a> {
    groups: &'a GroupStructure,
    lambda1: f64,
    lambda2: f64,
}

impl Penalty for SparseGroupPenalty<'_> {
    fn value(&self, w: &[f64]) -> f64 {
        let group_sum: f64 = self.groups.iter().map(|(r, phi)| phi * norm2(&w[r])).sum();
        self.lambda1 * norm1(w) + self.lambda2 * group_sum
    }

    fn prox(&self, v: &mut [f64], step: f64) {
        let t1 = step * self.lambda1;
        for (r, phi) in self.groups.iter() {
            let block = &mut v[r];
            block.iter_mut().for_each(|x| *x = soft_threshold(*x, t1));
            group_soft_threshold_in_place(block, step * self.lambda2 * phi);
        }
    }

    fn kkt_residual(&self, w: &[f64], grad: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, phi) in self.groups.iter() {
            let (wk, gk) = (&w[r.clone()], &grad[r]);
            let norm = norm2(wk);
            if norm == 0.0 {
                let shrunk = libm::sqrt(
                    gk.iter()
                        .map(|&g| {
                            let s = soft_threshold(g, self.lambda1);
                            s * s
                        })
                        .sum(),
                );
                worst = worst.max(shrunk - self.lambda2 * phi);
            } else {
                for (&wj, &gj) in wk.iter().zip(gk) {
                    let v = if wj != 0.0 {
                        (gj + self.lambda1 * wj.signum() + self.lambda2 * phi * wj / norm).abs()
                    } else {
                        (gj.abs() - self.lambda1).max(0.0)
                    };
                    worst = worst.max(v);
                }
            }
        }
        worst.max(0.0)
    }
}

/// Doublings allowed per iteration before the step search gives up.
const MAX_STEP_DOUBLINGS: usize = 64;

fn minimize<P: Penalty>(a: &DesignMatrix, y: &[f64], penalty: &P, cfg: &SolverConfig) -> SparseSolution {
    let (n, p) = (a.n, a.p);
    let mut grad0 = vec![0.0; p];
    a.mul_t_vec(y, &mut grad0);
    let scale = 1.0 + 2.0 * norm_inf(&grad0);
    let kkt_tol = cfg.tol * scale;

    let mut lipschitz = match cfg.step_rule {
        StepRule::Fixed => 2.0 * a.gram_spectral_radius(500) * (1.0 + 1e-6),
        StepRule::Backtracking => 2.0 * (0..p).map(|j| norm_sq(a.column(j))).fold(0.0, f64::max),
    };
    if !(lipschitz > 0.0) {
        lipschitz = 1.0;
    }

    let mut x = vec![0.0; p];
    let mut x_prev = vec![0.0; p];
    let mut point = vec![0.0; p];
    let mut z = vec![0.0; p];
    let mut g = vec![0.0; p];
    let mut r_point = vec![0.0; n];
    let mut r_z = vec![0.0; n];
    let mut fx = norm_sq(y);
    let mut t = 1.0;
    let mut restarted = true;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut kkt = f64::INFINITY;

    while iterations < cfg.max_iter {
        iterations += 1;
        let f_point = a.residual(y, &point, &mut r_point);
        a.mul_t_vec(&r_point, &mut g);
        g.iter_mut().for_each(|v| *v *= 2.0);

        let mut f_z;
        let mut doublings = 0;
        loop {
            let step = 1.0 / lipschitz;
            for ((zj, &pj), &gj) in z.iter_mut().zip(&point).zip(&g) {
                *zj = pj - step * gj;
            }
            penalty.prox(&mut z, step);
            f_z = a.residual(y, &z, &mut r_z);
            let mut linear = 0.0;
            let mut dist = 0.0;
            for ((&zj, &pj), &gj) in z.iter().zip(&point).zip(&g) {
                let d = zj - pj;
                linear += gj * d;
                dist += d * d;
            }
            let bound = f_point + linear + 0.5 * lipschitz * dist;
            if f_z <= bound + 1e-12 * (1.0 + f_point.abs()) || doublings >= MAX_STEP_DOUBLINGS {
                break;
            }
            lipschitz *= 2.0;
            doublings += 1;
        }

        let total_z = f_z + penalty.value(&z);
        if total_z <= fx {
            x_prev.copy_from_slice(&x);
            x.copy_from_slice(&z);
            let decrease = (fx - total_z) / fx.abs().max(f64::MIN_POSITIVE);
            fx = total_z;
            let t_next = (1.0 + libm::sqrt(1.0 + 4.0 * t * t)) / 2.0;
            let momentum = (t - 1.0) / t_next;
            for ((pj, &xj), &xp) in point.iter_mut().zip(&x).zip(&x_prev) {
                *pj = xj + momentum * (xj - xp);
            }
            t = t_next;
            restarted = false;
            if cfg.record_trace {
                trace.push(fx);
            }
            if decrease < cfg.tol {
                // r_z is the residual at x, so the gradient is one product away.
                a.mul_t_vec(&r_z, &mut g);
                g.iter_mut().for_each(|v| *v *= 2.0);
                kkt = penalty.kkt_residual(&x, &g);
                if kkt <= kkt_tol {
                    converged = true;
                    break;
                }
            }
        } else {
            if cfg.record_trace {
                trace.push(fx);
            }
            if restarted {
                // A plain proximal step from x no longer decreases the
                // objective: x is a fixed point up to rounding.
                let grad = gradient(a, y, &x);
                kkt = penalty.kkt_residual(&x, &grad);
                converged = kkt <= kkt_tol;
                break;
            }
            point.copy_from_slice(&x);
            t = 1.0;
            restarted = true;
        }
        debug_assert!(trace.windows(2).all(|w| w[1] <= w[0]), "objective increased");
    }

    if !converged && kkt.is_infinite() {
        kkt = penalty.kkt_residual(&x, &gradient(a, y, &x));
    }
    SparseSolution { w: x, objective: fx, iterations, converged, kkt_residual: kkt, trace }
}
