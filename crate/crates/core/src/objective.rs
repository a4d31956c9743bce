//! The reduced-model objective `x ↦ ‖H_target - H_red(x)‖_∞`, its gradient,
//! the spectral abscissa of the reduced pencil and the log-barrier that keeps
//! it below a bound.

use faer::{c64, Mat};

use crate::error::{MorError, Result};
use crate::linalg::{cplx, CMat, Qz};
use crate::linf::{frequency_grid, maximize_sampled, LinfOptions, LinfResult, Maximizer};
use crate::system::{error_sigma, unpack, FrequencyResponse, Layout, ReducedSystem};

#[derive(Clone, Debug)]
pub struct ObjectiveEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub omega: f64,
    /// Set when the top singular value is multiple or several frequencies
    /// attain the maximum; the gradient is then only one subgradient.
    pub degenerate: bool,
    pub maximizers: Vec<Maximizer>,
}

/// `σ_max(H_target(iω) - H_red(iω))` and its gradient with respect to the
/// packed reduced parameters, at a fixed frequency.
pub fn sigma_gradient(
    target: &dyn FrequencyResponse,
    red: &ReducedSystem,
    omega: f64,
) -> Result<(f64, Vec<f64>, bool)> {
    let smp = error_sigma(target, red, omega)?;
    let (r, m, p) = (red.r(), red.m(), red.p());
    let lay = Layout { r, m, p };
    let s = c64::new(0.0, omega);
    let u = Mat::from_fn(p, 1, |i, _| smp.u[i]);
    let v = Mat::from_fn(m, 1, |i, _| smp.v[i]);
    // ut = (u^* C K^{-1})^T = K^{-T} C^T conj(u),  vt = K^{-1} B v
    let cu = cplx(&red.c).transpose() * crate::linalg::conj(&u);
    let ut = red.resolvent_solve(s, &cu, true)?;
    let vt = red.resolvent_solve(s, &(cplx(&red.b) * &v), false)?;
    let mut g = vec![0.0; lay.len()];
    for i in 0..r {
        let uv = ut[(i, 0)] * vt[(i, 0)];
        g[lay.a_diag() + i] = -uv.re;
        g[lay.e_diag() + i] = -omega * uv.im;
    }
    for i in 0..r.saturating_sub(1) {
        g[lay.a_sub() + i] = -(ut[(i + 1, 0)] * vt[(i, 0)]).re;
        g[lay.a_sup() + i] = -(ut[(i, 0)] * vt[(i + 1, 0)]).re;
    }
    for j in 0..m {
        for i in 0..r {
            g[lay.b() + i + j * r] = -(ut[(i, 0)] * smp.v[j]).re;
        }
    }
    for j in 0..r {
        for i in 0..p {
            g[lay.c() + i + j * p] = -(smp.u[i].conj() * vt[(j, 0)]).re;
        }
    }
    for j in 0..m {
        for i in 0..p {
            g[lay.d() + i + j * p] = -(smp.u[i].conj() * smp.v[j]).re;
        }
    }
    Ok((smp.sigma, g, smp.degenerate))
}

/// Finite poles of the reduced pencil.
pub fn reduced_poles(red: &ReducedSystem) -> Result<Vec<c64>> {
    let qz = Qz::new(&cplx(&red.a_dense()), &cplx(&red.e_dense()))?;
    let escale = red.e_diag.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    Ok(qz.finite_eigenvalues(escale))
}

/// L∞ error objective against a fixed target (the full model or one of its
/// projections). The target response on the base frequency grid is cached
/// so each evaluation only samples the reduced model there.
pub struct ReducedObjective<'a> {
    target: &'a dyn FrequencyResponse,
    grid: Vec<f64>,
    cache: Vec<Option<CMat>>,
    layout: Layout,
    pub opts: LinfOptions,
    extra_hints: Vec<f64>,
}

impl<'a> ReducedObjective<'a> {
    /// `target_poles` and `hints` seed the frequency grid.
    pub fn new(
        target: &'a dyn FrequencyResponse,
        target_poles: &[c64],
        hints: &[f64],
        r: usize,
        opts: LinfOptions,
    ) -> Result<Self> {
        let (p, m) = target.dims();
        if r == 0 {
            return Err(MorError::DimensionMismatch("reduced order must be >= 1".into()));
        }
        let grid = frequency_grid(hints, target_poles, &opts);
        use rayon::prelude::*;
        let cache = grid
            .par_iter()
            .map(|&w| target.eval(c64::new(0.0, w)).ok())
            .collect();
        Ok(Self {
            target,
            grid,
            cache,
            layout: Layout { r, m, p },
            opts,
            extra_hints: Vec::new(),
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Frequencies sampled in addition to the grid on every evaluation.
    pub fn set_extra_hints(&mut self, hints: Vec<f64>) {
        self.extra_hints = hints;
    }

    pub fn unpack(&self, x: &[f64]) -> Result<ReducedSystem> {
        unpack(x, self.layout.r, self.layout.m, self.layout.p)
    }

    /// Global maximization of the error for a given reduced model.
    pub fn linf(&self, red: &ReducedSystem) -> Result<LinfResult> {
        use rayon::prelude::*;
        let target = self.target;
        let sigma = |w: f64| error_sigma(target, red, w).map(|s| s.sigma);
        let mut samples: Vec<(f64, f64)> = self
            .grid
            .par_iter()
            .zip(self.cache.par_iter())
            .map(|(&w, h)| {
                let v = match h {
                    Some(h) => red
                        .eval(c64::new(0.0, w))
                        .and_then(|hr| crate::linalg::sigma_max(&(h - hr)))
                        .unwrap_or(f64::NAN),
                    None => f64::NAN,
                };
                (w, v)
            })
            .collect();
        let mut extra: Vec<f64> = self.extra_hints.clone();
        if let Ok(rp) = reduced_poles(red) {
            extra.extend(rp.iter().filter(|z| z.im.is_finite()).map(|z| z.im.abs()));
        }
        let extra = crate::linf::normalize_grid(extra);
        samples.extend(extra.par_iter().map(|&w| (w, sigma(w).unwrap_or(f64::NAN))).collect::<Vec<_>>());
        maximize_sampled(&sigma, samples, &self.opts)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let red = self.unpack(x)?;
        Ok(self.linf(&red)?.value)
    }

    /// Gradients of `σ` at each near-global maximizer of the error.
    pub fn active_gradients(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let red = self.unpack(x)?;
        let res = self.linf(&red)?;
        res.maximizers
            .iter()
            .map(|mx| sigma_gradient(self.target, &red, mx.omega).map(|(_, g, _)| g))
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<ObjectiveEval> {
        let red = self.unpack(x)?;
        let res = self.linf(&red)?;
        let (value, grad, deg) = sigma_gradient(self.target, &red, res.omega)?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(MorError::NonFiniteObjective);
        }
        Ok(ObjectiveEval {
            value: value.max(res.value),
            grad,
            omega: res.omega,
            degenerate: deg || res.maximizers.len() > 1,
            maximizers: res.maximizers,
        })
    }
}

/// One-shot evaluation of the objective against `target`.
pub fn reduced_objective(
    x: &[f64],
    target: &dyn FrequencyResponse,
    target_poles: &[c64],
    hints: &[f64],
    r: usize,
    opts: &LinfOptions,
) -> Result<ObjectiveEval> {
    ReducedObjective::new(target, target_poles, hints, r, opts.clone())?.eval(x)
}

/// Full L∞ error of a reduced model.
pub fn full_error(
    full: &dyn FrequencyResponse,
    full_poles: &[c64],
    red: &ReducedSystem,
    hints: &[f64],
    opts: &LinfOptions,
) -> Result<LinfResult> {
    let mut poles = full_poles.to_vec();
    if let Ok(rp) = reduced_poles(red) {
        poles.extend(rp);
    }
    let sigma = |w: f64| error_sigma(full, red, w).map(|s| s.sigma);
    crate::linf::linf_norm(sigma, hints, &poles, opts)
}

#[derive(Clone, Debug)]
pub struct Abscissa {
    pub alpha: f64,
    pub lambda: c64,
    /// Gradient of `alpha` in packed-parameter coordinates.
    pub grad: Vec<f64>,
    pub degenerate: bool,
}

/// Largest real part among the finite eigenvalues of `(A_red, E_red)`.
pub fn spectral_abscissa(red: &ReducedSystem) -> Result<Abscissa> {
    let r = red.r();
    let lay = Layout {
        r,
        m: red.m(),
        p: red.p(),
    };
    let a = cplx(&red.a_dense());
    let e = cplx(&red.e_dense());
    let eig = reduced_poles(red)?;
    if eig.is_empty() {
        return Err(MorError::DecompositionFailure("pencil has no finite eigenvalues".into()));
    }
    let mut best = 0;
    for (i, z) in eig.iter().enumerate() {
        let (b, zb) = (eig[best], *z);
        if zb.re > b.re + 1e-14 * (1.0 + b.norm()) || ((zb.re - b.re).abs() <= 1e-14 * (1.0 + b.norm()) && zb.im > b.im) {
            best = i;
        }
    }
    let lambda = eig[best];
    let alpha = lambda.re;
    // Ties with anything other than the conjugate partner make alpha nonsmooth.
    let degenerate = eig.iter().enumerate().any(|(i, z)| {
        i != best
            && (z.re - alpha).abs() <= 1e-10 * (1.0 + alpha.abs())
            && (z - lambda.conj()).norm() > 1e-8 * (1.0 + lambda.norm())
    });
    let mtx = Mat::from_fn(r, r, |i, j| a[(i, j)] - lambda * e[(i, j)]);
    let svd = mtx
        .svd()
        .map_err(|e| MorError::DecompositionFailure(format!("SVD: {e:?}")))?;
    let v: Vec<c64> = (0..r).map(|i| svd.V()[(i, r - 1)]).collect();
    let u: Vec<c64> = (0..r).map(|i| svd.U()[(i, r - 1)]).collect();
    let mut uev = c64::new(0.0, 0.0);
    for i in 0..r {
        uev += u[i].conj() * red.e_diag[i] * v[i];
    }
    if uev.norm() < 1e-13 {
        return Err(MorError::DefectiveEigenstructure(1.0 / uev.norm().max(f64::MIN_POSITIVE)));
    }
    let v: Vec<c64> = v.iter().map(|x| x / uev).collect();
    let mut grad = vec![0.0; lay.len()];
    for i in 0..r {
        let uv = u[i].conj() * v[i];
        grad[lay.a_diag() + i] = uv.re;
        grad[lay.e_diag() + i] = -(lambda * uv).re;
    }
    for i in 0..r.saturating_sub(1) {
        grad[lay.a_sub() + i] = (u[i + 1].conj() * v[i]).re;
        grad[lay.a_sup() + i] = (u[i].conj() * v[i + 1]).re;
    }
    Ok(Abscissa {
        alpha,
        lambda,
        grad,
        degenerate,
    })
}

/// `F(x) - μ log(β - α(x))` and its gradient, given `F`, `∇F` at `x`.
pub fn barrier_objective(
    x: &[f64],
    f: f64,
    grad_f: &[f64],
    layout: Layout,
    beta: f64,
    mu: f64,
) -> Result<(f64, Vec<f64>)> {
    let red = unpack(x, layout.r, layout.m, layout.p)?;
    let ab = spectral_abscissa(&red)?;
    if ab.alpha >= beta {
        return Err(MorError::Infeasible {
            alpha: ab.alpha,
            beta,
        });
    }
    let gap = beta - ab.alpha;
    let value = f - mu * gap.ln();
    let grad = grad_f
        .iter()
        .zip(&ab.grad)
        .map(|(g, a)| g + mu / gap * a)
        .collect();
    Ok((value, grad))
}
