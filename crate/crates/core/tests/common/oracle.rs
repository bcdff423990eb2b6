//! Reference implementations used only to check the solvers. Nothing here
//! calls into the proximal-gradient code path.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random dense instance, row-major `n × p`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n: usize,
    pub p: usize,
    pub rows: Vec<f64>,
    pub y: Vec<f64>,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng, max_n: usize, max_p: usize) -> Instance {
        let n = rng.random_range(1..=max_n);
        let p = rng.random_range(1..=max_p);
        let rows = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        Instance { n, p, rows, y }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.rows[i * self.p + j]).collect()
    }

    /// `2 Aᵀ y`, infinity norm.
    pub fn grad0_inf(&self) -> f64 {
        (0..self.p)
            .map(|j| 2.0 * self.column(j).iter().zip(&self.y).map(|(a, b)| a * b).sum::<f64>())
            .fold(0.0, |m, v: f64| m.max(v.abs()))
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Cyclic coordinate descent for `‖Aw − y‖² + ρ‖w‖₁`.
///
/// Coordinate update: `w_j = S(a_jᵀ r_j, ρ/2) / ‖a_j‖²` with `r_j` the
/// residual excluding column `j`.
pub fn lasso_cd(inst: &Instance, rho: f64) -> Vec<f64> {
    let cols: Vec<Vec<f64>> = (0..inst.p).map(|j| inst.column(j)).collect();
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut w = vec![0.0; inst.p];
    let mut r = inst.y.clone(); // y − A w
    for _sweep in 0..200_000 {
        let mut max_change: f64 = 0.0;
        for j in 0..inst.p {
            if sq[j] == 0.0 {
                continue;
            }
            let rho_j: f64 = cols[j].iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() + sq[j] * w[j];
            let new = soft(rho_j, rho / 2.0) / sq[j];
            let delta = new - w[j];
            if delta != 0.0 {
                for (ri, a) in r.iter_mut().zip(&cols[j]) {
                    *ri -= delta * a;
                }
                w[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < 1e-15 {
            break;
        }
    }
    w
}

/// `‖Aw − y‖² + ρ‖w‖₁`, evaluated directly from row-major data.
pub fn lasso_value(inst: &Instance, w: &[f64], rho: f64) -> f64 {
    let mut loss = 0.0;
    for i in 0..inst.n {
        let fit: f64 = (0..inst.p).map(|j| inst.rows[i * inst.p + j] * w[j]).sum();
        loss += (fit - inst.y[i]).powi(2);
    }
    loss + rho * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Grid minimizer of `½(u − x)² + t|u|` over `u ∈ [−10, 10]`, step `h`.
pub fn grid_prox_l1(x: f64, t: f64, h: f64) -> f64 {
    let steps = (20.0 / h).round() as i64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=steps {
        let u = -10.0 + k as f64 * h;
        let v = 0.5 * (u - x).powi(2) + t * u.abs();
        if v < best.0 {
            best = (v, u);
        }
    }
    best.1
}

/// Grid minimizer of `½‖u − v‖² + t‖u‖₂` over a 2-D box, refined level by
/// level down to step `fine`. Each level searches lattice points `h·ℤ²`, so
/// the origin is always a candidate.
pub fn grid_prox_group2(v: [f64; 2], t: f64, fine: f64) -> [f64; 2] {
    let f =
        |u: [f64; 2]| 0.5 * ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)) + t * (u[0] * u[0] + u[1] * u[1]).sqrt();
    let search = |center: [f64; 2], half: f64, h: f64| {
        let lo = |c: f64| ((c - half) / h).floor() as i64;
        let hi = |c: f64| ((c + half) / h).ceil() as i64;
        let mut best = (f64::INFINITY, center);
        for a in lo(center[0])..=hi(center[0]) {
            for b in lo(center[1])..=hi(center[1]) {
                let u = [a as f64 * h, b as f64 * h];
                let val = f(u);
                if val < best.0 {
                    best = (val, u);
                }
            }
        }
        best.1
    };
    let radius = v[0].abs().max(v[1].abs()) + 0.5;
    let mut h = 0.01;
    let mut best = search([0.0, 0.0], radius, h);
    while h > fine {
        let next = (h / 10.0).max(fine);
        best = search(best, 5.0 * h, next);
        h = next;
    }
    best
}

/// `‖2Aᵀ(Aw − y)‖∞`, evaluated directly from row-major data.
pub fn gradient_inf(inst: &Instance, w: &[f64]) -> f64 {
    let resid: Vec<f64> =
        (0..inst.n).map(|i| (0..inst.p).map(|j| inst.rows[i * inst.p + j] * w[j]).sum::<f64>() - inst.y[i]).collect();
    (0..inst.p)
        .map(|j| 2.0 * (0..inst.n).map(|i| inst.rows[i * inst.p + j] * resid[i]).sum::<f64>())
        .fold(0.0, |m, v: f64| m.max(v.abs()))
}

/// Instance whose columns split into a block spanning the target's
/// subspace and a block orthogonal to it, mixed by a random Householder
/// reflection so neither block is axis-aligned.
pub fn orthogonal_block_instance(rng: &mut ChaCha8Rng, n: usize, relevant: usize, irrelevant: usize) -> Instance {
    let half = n / 2;
    let p = relevant + irrelevant;
    let mut rows = vec![0.0; n * p];
    let mut y = vec![0.0; n];
    for yi in y.iter_mut().take(half) {
        *yi = rng.random_range(-2.0..2.0);
    }
    for j in 0..p {
        let (lo, hi) = if j < relevant { (0, half) } else { (half, n) };
        for i in lo..hi {
            rows[i * p + j] = rng.random_range(-1.0..1.0);
        }
    }
    let h: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let hh: f64 = h.iter().map(|v| v * v).sum();
    let reflect = |v: &mut [f64]| {
        let d: f64 = v.iter().zip(&h).map(|(a, b)| a * b).sum();
        for (vi, hi) in v.iter_mut().zip(&h) {
            *vi -= 2.0 * d / hh * hi;
        }
    };
    reflect(&mut y);
    for j in 0..p {
        let mut col: Vec<f64> = (0..n).map(|i| rows[i * p + j]).collect();
        reflect(&mut col);
        for i in 0..n {
            rows[i * p + j] = col[i];
        }
    }
    Instance { n, p, rows, y }
}
