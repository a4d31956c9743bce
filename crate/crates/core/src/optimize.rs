//! BFGS with a weak-Wolfe bisection line search, suitable for nonsmooth
//! objectives, and a log-barrier continuation on top of it.

use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BfgsOptions {
    pub max_iters: usize,
    pub c1: f64,
    pub c2: f64,
    /// Stop when one iteration decreases the value by less than this
    /// fraction of its magnitude.
    pub rel_decrease_tol: f64,
    pub ls_max_steps: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            c1: 1e-4,
            c2: 0.9,
            rel_decrease_tol: 1e-9,
            ls_max_steps: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LineSearchFailure,
    SmallDecrease,
    MaxIters,
    ZeroGradient,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BfgsIter {
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub fevals: usize,
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iters: usize,
    pub fevals: usize,
    pub termination: Termination,
    pub trace: Vec<BfgsIter>,
    /// Accepted iterates, starting with `x0`.
    pub iterates: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

enum LineSearch {
    Ok { t: f64, x: Vec<f64>, f: f64, g: Vec<f64> },
    /// Sufficient decrease was met at `t` but the curvature condition never was.
    Partial { t: f64, x: Vec<f64>, f: f64, g: Vec<f64> },
    Failed,
}

/// Weak-Wolfe line search by bracketing: doubling until the curvature
/// condition can be met, bisecting once an upper bound exists.
fn weak_wolfe<F>(f: &mut F, x0: &[f64], f0: f64, g0: &[f64], d: &[f64], opts: &BfgsOptions, fevals: &mut usize) -> LineSearch
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let gd0 = dot(g0, d);
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut t = 1.0;
    let mut best: Option<(f64, Vec<f64>, f64, Vec<f64>)> = None;
    for _ in 0..opts.ls_max_steps {
        let x: Vec<f64> = x0.iter().zip(d).map(|(a, b)| a + t * b).collect();
        *fevals += 1;
        let (ft, gt) = match f(&x) {
            Ok((v, g)) if v.is_finite() && g.iter().all(|z| z.is_finite()) => (v, g),
            _ => (f64::INFINITY, Vec::new()),
        };
        if !(ft <= f0 + opts.c1 * t * gd0) {
            hi = t;
        } else if dot(&gt, d) < opts.c2 * gd0 {
            lo = t;
            best = Some((t, x, ft, gt));
        } else {
            return LineSearch::Ok { t, x, f: ft, g: gt };
        }
        t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
        if hi.is_finite() && hi - lo <= 1e-16 * hi {
            break;
        }
    }
    match best {
        Some((t, x, f, g)) => LineSearch::Partial { t, x, f, g },
        None => LineSearch::Failed,
    }
}

/// `H <- (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ` with `ρ = 1 / sᵀy`, on a
/// row-major `n × n` buffer.
fn inverse_update(h: &mut [f64], s: &[f64], y: &[f64]) {
    let n = s.len();
    let rho = 1.0 / dot(s, y);
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Minimizes `f` from `x0`; `f` returns the value and a (sub)gradient.
///
/// Trial points where `f` fails or is non-finite are treated as `+∞`; only
/// the starting point must evaluate.
pub fn bfgs<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let (mut fx, mut g) = f(x0)?;
    if !fx.is_finite() || g.iter().any(|z| !z.is_finite()) {
        return Err(MorError::NonFiniteObjective);
    }
    let mut x = x0.to_vec();
    let mut fevals = 1;
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    let mut trace = vec![BfgsIter {
        value: fx,
        grad_norm: norm(&g),
        step: 0.0,
        fevals: 1,
    }];
    let mut iterates = vec![x.clone()];
    let mut first_update = true;
    let mut termination = Termination::MaxIters;
    let mut iters = 0;
    while iters < opts.max_iters {
        if norm(&g) == 0.0 {
            termination = Termination::ZeroGradient;
            break;
        }
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        if dot(&d, &g) >= 0.0 {
            // Lost descent through rounding: restart from steepest descent.
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
            d = g.iter().map(|z| -z).collect();
        }
        let before = fevals;
        let (t, xn, fnew, gn, partial) = match weak_wolfe(&mut f, &x, fx, &g, &d, opts, &mut fevals) {
            LineSearch::Ok { t, x, f, g } => (t, x, f, g, false),
            LineSearch::Partial { t, x, f, g } => (t, x, f, g, true),
            LineSearch::Failed => {
                termination = Termination::LineSearchFailure;
                break;
            }
        };
        iters += 1;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let decrease = fx - fnew;
        x = xn;
        g = gn;
        let fprev = fx;
        fx = fnew;
        trace.push(BfgsIter {
            value: fx,
            grad_norm: norm(&g),
            step: t,
            fevals: fevals - before,
        });
        iterates.push(x.clone());
        if partial {
            termination = Termination::LineSearchFailure;
            break;
        }
        if decrease < opts.rel_decrease_tol * fprev.abs().max(f64::MIN_POSITIVE) {
            termination = Termination::SmallDecrease;
            break;
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if first_update {
                let scale = sy / dot(&y, &y);
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] = if i == j { scale } else { 0.0 };
                    }
                }
                first_update = false;
            }
            inverse_update(&mut h, &s, &y);
        }
    }
    Ok(BfgsResult {
        x,
        value: fx,
        grad: g,
        iters,
        fevals,
        termination,
        trace,
        iterates,
    })
}

/// Minimum-norm point of the convex hull of `grads`, by pairwise
/// Frank-Wolfe on the Gram matrix.
pub fn min_norm_hull(grads: &[Vec<f64>]) -> Vec<f64> {
    let k = grads.len();
    assert!(k > 0);
    let q: Vec<f64> = (0..k * k).map(|ij| dot(&grads[ij / k], &grads[ij % k])).collect();
    let mut lam = vec![0.0; k];
    let start = (0..k).min_by(|&a, &b| q[a * k + a].partial_cmp(&q[b * k + b]).unwrap()).unwrap();
    lam[start] = 1.0;
    for _ in 0..200 * k {
        // Half the gradient of λᵀQλ.
        let qg: Vec<f64> = (0..k).map(|i| (0..k).map(|j| q[i * k + j] * lam[j]).sum()).collect();
        let s = (0..k).min_by(|&a, &b| qg[a].partial_cmp(&qg[b]).unwrap()).unwrap();
        let v = (0..k)
            .filter(|&i| lam[i] > 0.0)
            .max_by(|&a, &b| qg[a].partial_cmp(&qg[b]).unwrap())
            .unwrap();
        let gap = qg[v] - qg[s];
        let curv = q[s * k + s] - 2.0 * q[s * k + v] + q[v * k + v];
        if s == v || gap <= 1e-15 * q.iter().fold(0.0f64, |a, b| a.max(b.abs())) || curv <= 0.0 {
            break;
        }
        let step = (gap / curv).min(lam[v]);
        lam[s] += step;
        lam[v] -= step;
    }
    let n = grads[0].len();
    (0..n).map(|c| (0..k).map(|i| lam[i] * grads[i][c]).sum()).collect()
}

/// BFGS, restarted after each stop by a step along the negative
/// minimum-norm element of the gradients `active` reports at the stopping
/// point. A lone gradient at a kink is often not a useful descent direction,
/// while the combination over all active pieces is. Restarts end once that
/// step buys less than `opts.rel_decrease_tol` relative decrease.
pub fn bfgs_bundle<F, A>(mut f: F, mut active: A, x0: &[f64], opts: &BfgsOptions, max_restarts: usize) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    A: FnMut(&[f64]) -> Result<Vec<Vec<f64>>>,
{
    let mut res = bfgs(&mut f, x0, opts)?;
    for _ in 0..max_restarts {
        let grads = active(&res.x)?;
        if grads.is_empty() {
            break;
        }
        let d: Vec<f64> = min_norm_hull(&grads).iter().map(|z| -z).collect();
        let dd = dot(&d, &d);
        if dd == 0.0 {
            break;
        }
        let fx = res.value;
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..opts.ls_max_steps {
            let y: Vec<f64> = res.x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            res.fevals += 1;
            if let Ok((fy, _)) = f(&y) {
                if fy.is_finite() && fy <= fx - opts.c1 * t * dd {
                    next = Some((y, fy));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((y, fy)) = next else { break };
        if fx - fy < opts.rel_decrease_tol * fx.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let more = bfgs(&mut f, &y, opts)?;
        res.x = more.x;
        res.value = more.value;
        res.grad = more.grad;
        res.iters += more.iters;
        res.fevals += more.fevals;
        res.termination = more.termination;
        res.trace.extend(more.trace);
        res.iterates.extend(more.iterates);
    }
    Ok(res)
}

/// Outcome of the barrier continuation.
#[derive(Clone, Debug)]
pub struct BarrierResult {
    pub x: Vec<f64>,
    /// Unpenalized objective at `x`.
    pub value: f64,
    pub iters: usize,
    pub fevals: usize,
    pub stages: Vec<BfgsResult>,
}

/// Log-barrier continuation: for each `μ` in `mus`, minimize
/// `F(x) - μ log(β - α(x))` by BFGS warm-started from the previous stage.
///
/// `obj` returns `F` and `∇F`; `barrier` maps `(x, F, ∇F, μ)` to the
/// penalized value and gradient or fails if `x` is infeasible.
pub fn minimize_barrier<F, A, B>(
    mut obj: F,
    mut active: A,
    barrier: B,
    x0: &[f64],
    mus: &[f64],
    opts: &BfgsOptions,
    max_restarts: usize,
) -> Result<BarrierResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    A: FnMut(&[f64]) -> Result<Vec<Vec<f64>>>,
    B: Fn(&[f64], f64, &[f64], f64) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    let mut stages = Vec::new();
    let (mut iters, mut fevals) = (0, 0);
    for &mu in mus {
        let res = bfgs_bundle(
            |z: &[f64]| {
                let (fz, gz) = obj(z)?;
                barrier(z, fz, &gz, mu)
            },
            |z: &[f64]| {
                let mut out = Vec::new();
                for g in active(z)? {
                    out.push(barrier(z, 0.0, &g, mu)?.1);
                }
                Ok(out)
            },
            &x,
            opts,
            max_restarts,
        )?;
        iters += res.iters;
        fevals += res.fevals;
        x = res.x.clone();
        stages.push(res);
    }
    let (value, _) = obj(&x)?;
    Ok(BarrierResult {
        x,
        value,
        iters,
        fevals: fevals + 1,
        stages,
    })
}
